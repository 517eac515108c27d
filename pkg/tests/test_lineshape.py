import math

import numpy as np
import pytest

from colorcenter import lineshape as ls
from colorcenter.lineshape import ModeDisplacementSet


def single(hw, S):
    return ModeDisplacementSet(np.array([hw]), np.array([S]))


def test_debye_waller_values():
    assert ls.debye_waller(0.0) == 1.0
    assert ls.debye_waller(1.605) == pytest.approx(math.exp(-1.605), rel=1e-15)
    with pytest.raises(ValueError):
        ls.debye_waller(-0.1)


def test_huang_rhys_1d():
    assert ls.huang_rhys_1d(0.08, 0.05) == pytest.approx(1.6)


def test_from_displacements_matches_rates_convention():
    from colorcenter import rates

    m = ModeDisplacementSet.from_displacements([0.05], [1.0])
    assert m.S[0] == pytest.approx(rates.huang_rhys_from_displacement(1.0, 0.05), rel=1e-8)


@pytest.mark.parametrize("S", [0.3, 1.0, 2.5])
def test_poisson_replicas(S):
    spec = ls.pl_lineshape(1.0, single(0.05, S), sigma=0.004, grid=(0.3, 1.1, 4001))
    w = ls.replica_weights(spec, 0.05, 5)
    ref = np.exp(-S) * S ** np.arange(6) / np.array([math.factorial(n) for n in range(6)])
    assert np.allclose(w, ref, rtol=1e-2, atol=1e-4)


def test_raw_area_unity():
    spec = ls.pl_lineshape(1.0, single(0.05, 1.0), sigma=0.005, grid=(0.5, 1.1, 3001), photon_factor=False,
                           normalize=False)
    assert spec.area() == pytest.approx(1.0, abs=1e-4)


def test_zpl_fraction_equals_debye_waller():
    S = 1.605
    spec = ls.pl_lineshape(0.652, single(0.05, S), sigma=0.005)
    assert ls.zpl_fraction(spec) == pytest.approx(math.exp(-S), abs=2e-3)


def test_photon_factor_tilts_sideband():
    m = single(0.05, 1.0)
    grid = (0.5, 1.1, 3001)
    a = ls.pl_lineshape(1.0, m, grid=grid, photon_factor=False)
    b = ls.pl_lineshape(1.0, m, grid=grid, photon_factor=True)
    # E^3 suppresses the low-energy side relative to the ZPL
    assert ls.replica_weights(b, 0.05, 3)[3] < ls.replica_weights(a, 0.05, 3)[3]
    # the spectral-function analysis removes the factor again
    assert np.allclose(ls.replica_weights(a, 0.05, 3), ls.replica_weights(b, 0.05, 3), rtol=1e-9)


def test_temperature_adds_anti_stokes():
    m = single(0.05, 1.0)
    lo, hi = ls.required_range(1.0, m, 0.005, 300.0)
    spec = ls.pl_lineshape(1.0, m, T=300.0, grid=(lo, hi, 4001), photon_factor=False)
    above = spec.energy > 1.0 + 0.025
    assert np.trapezoid(spec.intensity[above], spec.energy[above]) > 1e-3


def test_multimode_total_S():
    m = ModeDisplacementSet(np.array([0.02, 0.04, 0.06]), np.array([0.3, 0.5, 0.8]))
    assert m.total_S == pytest.approx(1.6)
    spec = ls.pl_lineshape(0.652, m, sigma=0.002, photon_factor=False)
    assert ls.zpl_fraction(spec) == pytest.approx(math.exp(-1.6), abs=2e-3)


def test_grid_validation():
    m = single(0.05, 1.0)
    with pytest.raises(ls.GridError):
        ls.pl_lineshape(1.0, m, sigma=0.001, grid=(0.5, 1.1, 101))
    with pytest.raises(ls.GridError):
        ls.pl_lineshape(1.0, m, grid=np.array([0.5, 0.6, 0.8, 1.0]))
    with pytest.raises(ls.GridError):
        ls.pl_lineshape(1.0, m, grid=(0.95, 1.1, 301))
    with pytest.raises(ValueError):
        ls.pl_lineshape(1.0, m, sigma=0.0)


def test_empty_mode_set_is_pure_zpl():
    m = ModeDisplacementSet(np.array([]), np.array([]))
    spec = ls.pl_lineshape(1.0, m, grid=(0.9, 1.1, 801), photon_factor=False)
    assert spec.area() == pytest.approx(1.0, abs=1e-6)
    assert ls.zpl_fraction(spec) == pytest.approx(1.0, abs=1e-3)


def test_spectral_density_sums_modes():
    m = ModeDisplacementSet(np.array([0.03, 0.06]), np.array([0.5, 1.0]))
    sd = ls.spectral_density(m, 0.002, grid=np.linspace(0, 0.1, 2001))
    assert np.trapezoid(sd.intensity, sd.energy) == pytest.approx(1.5, rel=1e-4)


def test_invalid_modes():
    with pytest.raises(ValueError):
        ModeDisplacementSet(np.array([0.05]), np.array([-1.0]))
    with pytest.raises(ValueError):
        ModeDisplacementSet(np.array([-0.05]), np.array([1.0]))
