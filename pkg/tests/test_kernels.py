import numpy as np
import pytest

from colorcenter import _kernels, polaron, rates
from colorcenter.apes import VibronicParams

compiled = pytest.mark.skipif(_kernels.compiled is None, reason="compiled kernels not built")


def test_backend_selected():
    assert _kernels.BACKEND in ("cython", "python")


@compiled
def test_vibronic_parity():
    p = VibronicParams(0.1, 0.07, 0.06, 0.05, 0.03)
    a = polaron.assemble_hamiltonian(p, 6, backend=_kernels.python).matrix
    b = polaron.assemble_hamiltonian(p, 6, backend=_kernels.compiled).matrix
    assert abs(a - b).max() < 1e-15


@compiled
def test_overlap_parity():
    ai, af = rates._alpha(0.072), rates._alpha(0.05)
    a = _kernels.python.fc_overlap_table(ai, af, 1.0647, 20, 60)
    b = _kernels.compiled.fc_overlap_table(ai, af, 1.0647, 20, 60)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-15)


@compiled
def test_dipolar_parity():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(2000, 3))
    vals = rng.random(2000)
    a = _kernels.python.dipolar_sum(pts, vals, np.zeros(3), 0.1)
    b = _kernels.compiled.dipolar_sum(pts, vals, np.zeros(3), 0.1)
    assert np.allclose(a, b, rtol=1e-12)


def test_pure_python_env(monkeypatch):
    import importlib

    monkeypatch.setenv("COLORCENTER_PURE_PYTHON", "1")
    mod = importlib.reload(_kernels)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("COLORCENTER_PURE_PYTHON")
        importlib.reload(_kernels)
