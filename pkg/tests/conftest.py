import numpy as np
import pytest

from colorcenter.hyperfine import Nucleus, SpinDensityGrid


def gaussian_grid(n=33, h=0.25, width=0.8, shift=(0.0, 0.0, 0.0), axes=None, nuclei=None, spin_z=0.5):
    """Normalised Gaussian spin density (integral 2 S_z) on an odd, origin-centred grid."""
    axes = np.eye(3) * h if axes is None else np.asarray(axes)
    idx = np.arange(n) - n // 2
    I, J, K = np.meshgrid(idx, idx, idx, indexing="ij")
    pts = I[..., None] * axes[0] + J[..., None] * axes[1] + K[..., None] * axes[2]
    r2 = ((pts - np.asarray(shift)) ** 2).sum(-1)
    rho = np.exp(-r2 / width ** 2)
    rho *= 2 * spin_z / (rho.sum() * abs(np.linalg.det(axes)))
    origin = -(n // 2) * axes.sum(axis=0)
    nuclei = nuclei if nuclei is not None else [Nucleus("Si1", (0.0, 0.0, 0.0), -1.11058)]
    return SpinDensityGrid(origin, axes, rho, spin_z, nuclei)


@pytest.fixture
def make_gaussian_grid():
    return gaussian_grid


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
