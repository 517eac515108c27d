import math

import numpy as np
import pytest
import scipy.constants as sc
from scipy.spatial.transform import Rotation

from colorcenter import hyperfine as hf
from colorcenter.hyperfine import Nucleus, SpinDensityGrid


def rotation_x(deg):
    return Rotation.from_euler("x", deg, degrees=True).as_matrix()


def test_prefactor_value():
    # mu0/4pi g mu_B mu_N / h for g_N = 1 in MHz angstrom^3
    K = hf.hyperfine_prefactor(1.0)
    ref = (sc.mu_0 / (4 * math.pi) * sc.physical_constants["electron g factor"][0] * -1
           * sc.physical_constants["Bohr magneton"][0] * sc.physical_constants["nuclear magneton"][0]
           / sc.h / 1e-30 / 1e6)
    # the reference library may carry a newer CODATA revision (differences ~1e-9)
    assert K == pytest.approx(ref, rel=1e-8)
    assert hf.hyperfine_prefactor(-1.11058) == pytest.approx(-1.11058 * K)


def test_gaussian_isotropic(make_gaussian_grid):
    grid = make_gaussian_grid()
    t = hf.hyperfine_tensor(grid)
    assert t.isotropic or np.ptp(t.principal) < 1e-6 * abs(t.contact)
    assert np.abs(t.dipolar).max() < 1e-8 * abs(t.contact)


def test_dipolar_traceless(make_gaussian_grid):
    grid = make_gaussian_grid(shift=(0.3, -0.2, 0.5))
    t = hf.hyperfine_tensor(grid)
    assert abs(np.trace(t.dipolar)) < 1e-10 * np.abs(t.dipolar).max()
    assert np.trace(t.matrix) == pytest.approx(3 * t.contact, rel=1e-10)


def test_linearity(make_gaussian_grid):
    g1 = make_gaussian_grid(shift=(0.0, 0.0, 0.5))
    g2 = make_gaussian_grid(shift=(0.4, 0.0, 0.0))
    mix = SpinDensityGrid(g1.origin, g1.axes, 0.3 * g1.values + 0.7 * g2.values, 0.5, g1.nuclei)
    a = 0.3 * hf.hyperfine_tensor(g1).matrix + 0.7 * hf.hyperfine_tensor(g2).matrix
    assert np.allclose(hf.hyperfine_tensor(mix).matrix, a, rtol=1e-12, atol=1e-9)


def test_rotational_covariance(make_gaussian_grid):
    grid = make_gaussian_grid(shift=(0.2, -0.3, 0.6))
    R = Rotation.from_euler("zyx", [20, 35, -10], degrees=True).as_matrix()
    nuc = [Nucleus("Si1", R @ grid.nuclei[0].position, grid.nuclei[0].g_N)]
    rot = SpinDensityGrid(R @ grid.origin, grid.axes @ R.T, grid.values, grid.spin_z, nuc)
    A = hf.hyperfine_tensor(grid).matrix
    B = hf.hyperfine_tensor(rot).matrix
    assert np.allclose(B, R @ A @ R.T, atol=1e-9 * np.abs(A).max())


def test_groupings_relation(make_gaussian_grid):
    grid = make_gaussian_grid(shift=(0.0, 0.0, 0.6))
    p = hf.hyperfine_tensor(grid, grouping="printed")
    c = hf.hyperfine_tensor(grid, grouping="conventional")
    assert c.contact == pytest.approx(2 * p.contact)
    assert np.allclose(c.dipolar, -p.dipolar * 2 * 3 / (4 * math.pi))


def test_point_dipole_pattern():
    n, h, d = 41, 0.2, 2.0
    values = np.zeros((n, n, n))
    c = n // 2
    values[c, c, c + int(round(d / h))] = 1.0 / h ** 3
    grid = SpinDensityGrid(-c * h * np.ones(3), np.eye(3) * h, values, 0.5, [Nucleus("X", (0, 0, 0), 1.0)])
    t = hf.hyperfine_tensor(grid)
    K = hf.hyperfine_prefactor(1.0) / 0.5
    ref = K * (4 * math.pi / 3) * 0.5 * np.diag([1.0, 1.0, -2.0]) / d ** 3
    assert np.allclose(t.matrix, ref, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("deg", [0.0, 30.0, 60.0, 89.0])
def test_principal_angle_round_trip(deg):
    R = rotation_x(deg)
    A = R @ np.diag([-20.0, -15.0, -60.0]) @ R.T
    principal, theta, iso = hf.principal_analysis(A)
    assert theta == pytest.approx(deg, abs=1e-6)
    assert np.allclose(principal, [-20.0, -15.0, -60.0])
    assert not iso


def test_obtuse_angle_with_reference():
    R = rotation_x(125.79)
    A = R @ np.diag([-67.1, -64.7, -105.5]) @ R.T
    axis = R @ np.array([0.0, 0.0, 1.0])
    _, theta, _ = hf.principal_analysis(A, reference=axis)
    assert theta == pytest.approx(125.79, abs=1e-6)
    _, theta_default, _ = hf.principal_analysis(A)
    assert theta_default == pytest.approx(180 - 125.79, abs=1e-6)


def test_measured_si1_row():
    principal, theta, iso = hf.principal_analysis(np.diag([-323.3, -323.3, -492.4]))
    assert np.allclose(principal, [-323.3, -323.3, -492.4])
    assert theta == 0.0


def test_isotropic_flag():
    principal, theta, iso = hf.principal_analysis(5.0 * np.eye(3))
    assert iso and theta == 0.0


def test_asymmetric_rejected():
    with pytest.raises(ValueError):
        hf.principal_analysis(np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))


def test_nucleus_outside_grid(make_gaussian_grid):
    grid = make_gaussian_grid()
    with pytest.raises(hf.GridInputError):
        hf.hyperfine_tensor(grid, Nucleus("far", (50.0, 0.0, 0.0), 1.0))
    with pytest.raises(hf.GridInputError):
        hf.hyperfine_tensor(grid, exclusion_radius=100.0)


def test_normalisation_warning(make_gaussian_grid):
    grid = make_gaussian_grid()
    with pytest.warns(RuntimeWarning):
        SpinDensityGrid(grid.origin, grid.axes, 3 * grid.values, 0.5, grid.nuclei)


def test_backend_consistency(make_gaussian_grid):
    from colorcenter import _kernels

    grid = make_gaussian_grid(n=17, shift=(0.1, 0.2, 0.3))
    a = hf.dipolar_integral(grid, (0.0, 0.0, 0.0), grid.spacing, backend=_kernels.python)
    if _kernels.compiled is None:
        pytest.skip("compiled kernels not built")
    b = hf.dipolar_integral(grid, (0.0, 0.0, 0.0), grid.spacing, backend=_kernels.compiled)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-14)
