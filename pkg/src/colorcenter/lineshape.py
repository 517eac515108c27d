"""Huang-Rhys / Debye-Waller factors and generating-function PL lineshapes.

Energies in eV; the generating function is evaluated with hbar = 1, so
"time" has units of 1/eV.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from . import units as u

logger = logging.getLogger(__name__)

DEFAULT_SIGMA = 0.005


class GridError(ValueError):
    """Energy grid does not cover the spectrum."""


@dataclass
class ModeDisplacementSet:
    """Phonon modes with their partial Huang-Rhys factors."""

    hw: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        self.hw = np.atleast_1d(np.asarray(self.hw, dtype=float))
        self.S = np.atleast_1d(np.asarray(self.S, dtype=float))
        if self.hw.shape != self.S.shape:
            raise ValueError("hw and S must have the same length")
        if np.any(self.hw <= 0):
            raise ValueError("mode energies must be positive")
        if np.any(self.S < 0):
            raise ValueError("partial Huang-Rhys factors must be non-negative")

    @classmethod
    def from_displacements(cls, hw, q):
        """Modes from mass-weighted displacements ``q`` (amu^1/2 angstrom).

        S_k = omega_k q_k^2 / (2 hbar).
        """
        hw = np.asarray(hw, dtype=float)
        q = np.asarray(q, dtype=float)
        omega = hw / u.HBAR_EV_S
        q_si = q * np.sqrt(u.AMU_KG) * u.ANGSTROM_M
        return cls(hw, omega * q_si ** 2 / (2.0 * u.HBAR_J_S))

    @property
    def total_S(self) -> float:
        return float(self.S.sum())

    def __len__(self):
        return self.hw.size


@dataclass
class Spectrum:
    energy: np.ndarray
    intensity: np.ndarray
    sigma: float
    zpl: float | None = None
    normalized: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.energy = np.asarray(self.energy, dtype=float)
        self.intensity = np.asarray(self.intensity, dtype=float)
        if self.energy.shape != self.intensity.shape:
            raise ValueError("energy and intensity must have the same shape")
        if self.energy.size > 1 and np.any(np.diff(self.energy) <= 0):
            raise ValueError("energy grid must be strictly increasing")

    def area(self) -> float:
        return float(np.trapezoid(self.intensity, self.energy))


def huang_rhys_1d(E_FC: float, hw0: float) -> float:
    """One-dimensional Huang-Rhys factor E_FC / hw0."""
    if hw0 <= 0:
        raise ValueError("effective phonon energy must be positive")
    if E_FC < 0:
        raise ValueError("Franck-Condon energy must be non-negative")
    return E_FC / hw0


def debye_waller(S: float) -> float:
    """Fraction of emission in the zero-phonon line, exp(-S)."""
    if S < 0:
        raise ValueError("Huang-Rhys factor must be non-negative")
    return float(np.exp(-S))


def gaussian(x, center, sigma):
    return np.exp(-0.5 * ((x - center) / sigma) ** 2) / (sigma * np.sqrt(2 * np.pi))


def spectral_density(modes: ModeDisplacementSet, sigma: float, grid=None, n_points=4001) -> Spectrum:
    """Gaussian-broadened S(hw) = sum_k S_k delta(hw - hw_k)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if grid is None:
        top = (modes.hw.max() if len(modes) else 0.1) + 8 * sigma
        grid = np.linspace(0.0, top, n_points)
    grid = np.asarray(grid, dtype=float)
    if len(modes) == 0:
        warnings.warn("empty mode set: spectral density is zero", RuntimeWarning, stacklevel=2)
        return Spectrum(grid, np.zeros_like(grid), sigma)
    dens = np.zeros_like(grid)
    for hw, S in zip(modes.hw, modes.S):
        dens += S * gaussian(grid, hw, sigma)
    return Spectrum(grid, dens, sigma)


def _occupation(hw, T):
    if T <= 0:
        return np.zeros_like(hw)
    x = hw / (u.BOLTZMANN_EV_K * T)
    return 1.0 / np.expm1(x)


def required_range(zpl, modes: ModeDisplacementSet, sigma: float, T: float = 0.0):
    """Energy window (lo, hi) that must be covered by the output grid."""
    if len(modes) == 0 or modes.total_S == 0:
        return zpl - 5 * sigma, zpl + 5 * sigma
    S = modes.total_S
    hw_max = modes.hw.max()
    lo = zpl - hw_max * (S + 6 * np.sqrt(S)) - 5 * sigma
    hi = zpl + 5 * sigma
    if T > 0:
        nS = float(np.sum(modes.S * _occupation(modes.hw, T)))
        if nS > 0:
            hi += hw_max * (nS + 6 * np.sqrt(nS))
            lo -= hw_max * (nS + 6 * np.sqrt(nS))
    return max(lo, 0.0), hi


def pl_lineshape(
    zpl: float,
    modes: ModeDisplacementSet,
    T: float = 0.0,
    sigma: float = DEFAULT_SIGMA,
    grid=None,
    photon_factor: bool = True,
    normalize: bool = True,
    check_range: bool = True,
) -> Spectrum:
    """Emission lineshape from the generating function exp(S(t) - S(0)).

    ``grid`` is a uniformly spaced, increasing energy array (or a
    ``(e_min, e_max, n)`` tuple). The spectral function is sampled exactly
    on the grid by a discrete Fourier sum over a time grid whose spacing is
    set by the grid span (Nyquist), with a Gaussian envelope of width
    ``sigma`` replacing every delta line. With ``photon_factor`` the
    intensity carries the E^3 photon-density prefactor.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if T < 0:
        raise ValueError("temperature must be non-negative")
    if grid is None:
        lo, hi = required_range(zpl, modes, sigma, T)
        grid = (lo - 2 * sigma, hi + 2 * sigma, 4096)
    if isinstance(grid, tuple):
        grid = np.linspace(*grid)
    E = np.asarray(grid, dtype=float)
    if E.size < 2:
        raise GridError("grid needs at least two points")
    dE = E[1] - E[0]
    if not np.allclose(np.diff(E), dE, rtol=1e-8, atol=0):
        raise GridError("grid must be uniformly spaced")
    if dE > sigma:
        raise GridError(f"grid spacing {dE:.3e} eV exceeds broadening {sigma:.3e} eV")
    lo, hi = required_range(zpl, modes, sigma, T)
    if check_range and (E[0] > lo or E[-1] < hi):
        raise GridError(
            f"grid [{E[0]:.6f}, {E[-1]:.6f}] eV must cover [{lo:.6f}, {hi:.6f}] eV"
        )

    # x = zpl - E is the energy given to the lattice
    x0 = zpl - E[-1]
    M = 1
    while M < 2 * E.size:
        M *= 2
    dt = 2 * np.pi / (M * dE)
    k = np.fft.fftfreq(M, d=1.0 / M)  # integers 0..M/2-1, -M/2..-1
    t = k * dt
    nbar = _occupation(modes.hw, T)
    if len(modes):
        phase = np.exp(-1j * np.outer(t, modes.hw))
        St = phase @ (modes.S * (nbar + 1)) + np.conj(phase) @ (modes.S * nbar)
        S0 = float(np.sum(modes.S * (2 * nbar + 1)))
    else:
        St = np.zeros_like(t, dtype=complex)
        S0 = 0.0
    G = np.exp(St - S0 - 0.5 * (sigma * t) ** 2)
    # A(x0 + j dE) = (dt / 2pi) sum_k G(t_k) exp(i (x0 + j dE) t_k)
    A = np.fft.ifft(G * np.exp(1j * x0 * t)) * M * dt / (2 * np.pi)
    A = A.real[: E.size][::-1]  # index j runs over increasing x, i.e. decreasing E
    A = np.clip(A, 0.0, None)
    raw_area = float(np.trapezoid(A, E))
    I = A * (E / zpl) ** 3 if photon_factor else A
    I = np.where(E > 0, I, 0.0)
    area = float(np.trapezoid(I, E))
    if normalize and area > 0:
        I = I / area
    spec = Spectrum(E, I, sigma, zpl=zpl, normalized=normalize,
                    meta={"T": T, "photon_factor": photon_factor, "raw_area": raw_area,
                          "total_S": modes.total_S})
    return spec


def _spectral_function(spec: Spectrum):
    I = spec.intensity
    if spec.meta.get("photon_factor"):
        with np.errstate(divide="ignore", invalid="ignore"):
            I = np.where(spec.energy > 0, I / (spec.energy / spec.zpl) ** 3, 0.0)
    return I / np.trapezoid(I, spec.energy)


def replica_weights(spec: Spectrum, hw: float, n_max: int) -> np.ndarray:
    """Integrated weight of replica n (n = 0..n_max) at ``zpl - n hw``.

    Integrates the spectral function (photon prefactor removed) over
    windows of half-width hw/2 centred on each replica.
    """
    A = _spectral_function(spec)
    out = np.empty(n_max + 1)
    for n in range(n_max + 1):
        c = spec.zpl - n * hw
        mask = (spec.energy >= c - hw / 2) & (spec.energy < c + hw / 2)
        out[n] = np.trapezoid(A[mask], spec.energy[mask]) if mask.sum() > 1 else 0.0
    return out


def zpl_fraction(spec: Spectrum, window: float | None = None) -> float:
    """ZPL weight over total weight of the spectral function."""
    w = 3.0 * spec.sigma if window is None else window
    A = _spectral_function(spec)
    mask = np.abs(spec.energy - spec.zpl) <= w
    # a Gaussian line loses erfc(w / (sigma sqrt 2)) outside +-w; correct for it
    kept = erf(w / (spec.sigma * np.sqrt(2.0)))
    return float(np.trapezoid(A[mask], spec.energy[mask]) / kept)
