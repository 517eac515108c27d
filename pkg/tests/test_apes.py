import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from colorcenter import apes
from colorcenter.apes import VibronicParams


def params(**kw):
    d = dict(F_E=0.1, F_T=0.08, hw_E=0.07, hw_T=0.06, delta=0.0)
    d.update(kw)
    return VibronicParams(**d)


def test_w_matrix_symmetric_and_linear():
    p = params()
    q = np.array([0.1, -0.2, 0.3, 0.05, -0.1])
    W = apes.w_matrix(p, q)
    assert np.allclose(W, W.T)
    assert np.allclose(apes.w_matrix(p, 2 * q), 2 * W)


def test_e_trace_vanishes():
    # the E-mode operators are traceless, the T-mode ones have zero diagonal
    for T in apes.ORBITAL_OPERATORS:
        assert abs(np.trace(T)) < 1e-15
    sym = sum(T @ T for T in apes.ORBITAL_OPERATORS[:2])
    assert np.allclose(sym, np.eye(3) * np.trace(sym) / 3)


def test_crystal_field_spectrum():
    p = params(F_E=0, F_T=0, delta=0.085)
    e = apes.apes_energies(p, np.zeros(5))
    assert np.allclose(e, [-2 * 0.085 / 3, 0.085 / 3, 0.085 / 3])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-0.5, 0.5), min_size=2, max_size=2),
       st.lists(st.floats(-0.5, 0.5), min_size=3, max_size=3),
       st.permutations([0, 1, 2]))
def test_t_mode_permutation_invariance(qe, qt, perm):
    # permuting the T-mode coordinates with the orbitals leaves the spectrum for E=0
    p = params(F_E=0.0)
    q = np.array([0.0, 0.0, *qt])
    base = apes.apes_energies(p, q)
    # (xi, eta, zeta) couple (y,z), (x,z), (x,y): a permutation of orbitals maps them accordingly
    P = np.eye(3)[list(perm)]
    W = apes.w_matrix(p, q)
    assert np.allclose(np.linalg.eigvalsh(P @ W @ P.T), np.linalg.eigvalsh(W))
    assert np.all(np.diff(base) >= -1e-14)


def test_jt_conversion_round_trip():
    for mode in ("E", "T"):
        for F in (1e-3, 0.1, 0.7):
            e = apes.jt_energy_from_coupling(F, 0.06, mode)
            assert apes.coupling_from_jt_energy(e, 0.06, mode) == pytest.approx(F, rel=1e-12)
    assert apes.jt_energy_from_coupling(0.1, 0.07, "E") == pytest.approx(0.1 ** 2 / (2 * 0.07))
    assert apes.jt_energy_from_coupling(0.1, 0.07, "T") == pytest.approx(2 * 0.1 ** 2 / (3 * 0.07))


def test_hellmann_feynman_gradient():
    p = params(delta=0.03)
    q = np.array([0.12, -0.05, 0.2, 0.07, -0.11])
    e, g = apes.lowest_branch_and_gradient(p, q)
    h = 1e-6
    num = np.array([(apes.apes_energies(p, q + h * np.eye(5)[i])[0]
                     - apes.apes_energies(p, q - h * np.eye(5)[i])[0]) / (2 * h) for i in range(5)])
    assert np.allclose(g, num, atol=1e-7)


@pytest.mark.parametrize("mode", ["E", "T"])
def test_fit_recovers_parameters(mode):
    F, hw = 0.123, 0.061
    coord = apes.DEFAULT_COORDINATE[mode]
    q = np.linspace(-0.4, 0.4, 17)
    scan = apes.PesScan(coord, q, apes.scan_model(F, hw, mode, coord, q))
    fit = apes.fit_linear_jt(scan, mode)
    assert fit.F == pytest.approx(F, rel=1e-8)
    assert fit.hw == pytest.approx(hw, rel=1e-8)


def test_fit_with_crystal_field():
    F, hw, delta = 0.1, 0.07, 0.04
    q = np.linspace(-0.4, 0.4, 17)
    scan = apes.PesScan("theta", q, apes.scan_model(F, hw, "E", "theta", q, delta=delta))
    fit = apes.fit_linear_jt(scan, "E", delta=delta)
    assert fit.F == pytest.approx(F, rel=1e-6)
    assert fit.hw == pytest.approx(hw, rel=1e-6)


def test_monte_carlo_noise_fit_unbiased():
    rng = np.random.default_rng(7)
    F, hw = 0.1, 0.07
    q = np.linspace(-0.4, 0.4, 21)
    clean = apes.scan_model(F, hw, "E", "theta", q)
    fits = []
    for _ in range(100):
        noisy = clean + rng.normal(0, 1e-4, clean.shape)
        fits.append(apes.fit_linear_jt(apes.PesScan("theta", q, noisy), "E").F)
    fits = np.array(fits)
    # sorting noisy degenerate branches near crossings leaves a small order-statistic bias
    assert abs(fits.mean() - F) < 1e-3 * F
    assert fits.std() < 1e-3 * F


def test_fit_errors():
    q = np.linspace(-0.3, 0.3, 3)
    with pytest.raises(apes.FitError):
        apes.fit_linear_jt(apes.PesScan("theta", q, apes.scan_model(0.1, 0.07, "E", "theta", q)), "E")
    q = np.linspace(0.0, 0.3, 9)
    with pytest.raises(apes.FitError):
        apes.fit_linear_jt(apes.PesScan("theta", q, apes.scan_model(0.1, 0.07, "E", "theta", q)), "E")
    q = np.linspace(-0.3, 0.3, 9)
    with pytest.raises(apes.FitError):
        apes.fit_linear_jt(apes.PesScan("xi", q, apes.scan_model(0.1, 0.07, "T", "xi", q)), "E")


def test_scan_validation():
    with pytest.raises(ValueError):
        apes.PesScan("theta", [0.0, 0.0, 0.1], [[0.0], [0.1], [0.2]])


def test_stationary_e_only():
    p = VibronicParams.from_jt_energies(0.082, 0.0, 0.07, 0.06)
    res = apes.stationary_analysis(p, n_starts=12)
    assert res.depth == pytest.approx(0.082, rel=1e-5)
    assert len(res.minima) == 3
    assert res.barrier == pytest.approx(0.75 * 0.082, rel=1e-2)


def test_stationary_t_only():
    p = VibronicParams.from_jt_energies(0.0, 0.082, 0.07, 0.06)
    res = apes.stationary_analysis(p, n_starts=16)
    assert res.depth == pytest.approx(0.082, rel=1e-5)
    assert len(res.minima) == 4
    assert res.barrier == pytest.approx(0.25 * 0.082, rel=1e-2)


def test_invalid_params():
    with pytest.raises(ValueError):
        VibronicParams(0.1, 0.1, -0.07, 0.06)
