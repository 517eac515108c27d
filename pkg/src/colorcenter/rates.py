"""Radiative lifetime, Franck-Condon overlaps, golden-rule nonradiative rate and QE.

Nonradiative inputs use the 1D effective-mode convention: energies in eV,
mass-weighted displacement in amu^1/2 angstrom and the electron-phonon
coupling W_if in eV amu^-1/2 angstrom^-1.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from . import units as u

logger = logging.getLogger(__name__)

DEFAULT_SIGMA = 0.010
LEVEL_BUDGET = 200
TRUNCATION_TOL = 1e-6
STABILITY_TOL = 1e-9


class TruncationError(RuntimeError):
    """The vibrational sums did not converge within the level budget."""

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


@dataclass(frozen=True)
class RadiativeInputs:
    hw: float          # emission energy, eV
    mu_debye: float    # transition dipole, Debye
    n_index: float     # refractive index

    def __post_init__(self):
        if not self.hw > 0:
            raise ValueError("emission energy must be positive")
        if self.mu_debye < 0:
            raise ValueError("transition dipole must be non-negative")
        if self.n_index < 1:
            raise ValueError("refractive index must be >= 1")


def radiative_rate(inp: RadiativeInputs) -> float:
    """Spontaneous emission rate in 1/s."""
    omega = inp.hw / u.HBAR_EV_S
    mu = inp.mu_debye * u.DEBYE_C_M
    return inp.n_index * omega ** 3 * mu ** 2 / (
        3.0 * math.pi * u.VACUUM_PERMITTIVITY * u.HBAR_J_S * u.SPEED_OF_LIGHT ** 3
    )


def radiative_lifetime(inp: RadiativeInputs) -> float:
    """Radiative lifetime in ns; ``math.inf`` for a vanishing dipole."""
    if inp.mu_debye == 0:
        return math.inf
    return 1e9 / radiative_rate(inp)


def quantum_efficiency(tau_r: float, tau_nr: float) -> float:
    """tau_nr / (tau_r + tau_nr); infinite lifetimes are zero rates."""
    if tau_r <= 0 or tau_nr <= 0:
        raise ValueError("lifetimes must be positive")
    if math.isinf(tau_r) and math.isinf(tau_nr):
        raise ValueError("quantum efficiency undefined when both lifetimes are infinite")
    if math.isinf(tau_nr):
        return 1.0
    if math.isinf(tau_r):
        return 0.0
    return tau_nr / (tau_r + tau_nr)


# ----------------------------------------------------------- Franck-Condon


def _alpha(hw_ev: float) -> float:
    """omega / hbar in 1/(amu angstrom^2) for a quantum hw (eV)."""
    # hbar^2 / (amu angstrom^2) expressed in eV
    unit = u.HBAR_J_S ** 2 / (u.AMU_KG * u.ANGSTROM_M ** 2) / u.ELEMENTARY_CHARGE
    return hw_ev / unit


def displacement_from_relaxation(E_rel: float, hw: float) -> float:
    """Mass-weighted displacement (amu^1/2 angstrom) with E_rel = omega^2 dQ^2 / 2."""
    if E_rel < 0 or hw <= 0:
        raise ValueError("need E_rel >= 0 and hw > 0")
    omega = hw / u.HBAR_EV_S
    dq_si = math.sqrt(2.0 * E_rel * u.ELEMENTARY_CHARGE) / omega
    return dq_si / (math.sqrt(u.AMU_KG) * u.ANGSTROM_M)


def huang_rhys_from_displacement(dQ: float, hw: float) -> float:
    return 0.5 * _alpha(hw) * dQ * dQ


def hermite_functions(n_max: int, x) -> np.ndarray:
    """Normalized Hermite functions psi_0..psi_n_max at ``x`` (stable recurrence)."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(2, n_max + 1):
        out[n] = np.sqrt(2.0 / n) * x * out[n - 1] - np.sqrt((n - 1) / n) * out[n - 2]
    return out


def overlap_quadrature(hw_i, hw_f, dQ, n_i, n_f, n_points=None):
    """Overlap table by direct numerical integration of Hermite-function products.

    Uses the trapezoid rule on a uniform grid, which converges exponentially
    for these analytic, Gaussian-decaying integrands.
    """
    a_i, a_f = _alpha(hw_i), _alpha(hw_f)
    reach_i = (math.sqrt(2 * n_i + 1) + 12.0) / math.sqrt(a_i)
    reach_f = (math.sqrt(2 * n_f + 1) + 12.0) / math.sqrt(a_f)
    lo = min(dQ - reach_i, -reach_f)
    hi = max(dQ + reach_i, reach_f)
    if n_points is None:
        # resolve the shortest wavelength of the highest Hermite function
        kmax = max(math.sqrt(a_i * (2 * n_i + 1)), math.sqrt(a_f * (2 * n_f + 1)))
        n_points = int((hi - lo) * kmax * 4) + 2001
    Q = np.linspace(lo, hi, n_points)
    hi_f = hermite_functions(n_i - 1, np.sqrt(a_i) * (Q - dQ)) * (a_i ** 0.25)
    hf_f = hermite_functions(n_f - 1, np.sqrt(a_f) * Q) * (a_f ** 0.25)
    dq = Q[1] - Q[0]
    return (hi_f * dq) @ hf_f.T


@dataclass
class OverlapTable:
    overlap: np.ndarray   # <chi_i,m | chi_f,n>, shape (n_i + 1, n_f) internally trimmed
    q_matrix: np.ndarray  # <chi_i,m | Q - Q0 | chi_f,n>, shape (n_i, n_f)
    method: str = "recurrence"


def fc_overlap_table(hw_i: float, hw_f: float, dQ: float, n_max: int, m_max: int,
                     method: str = "recurrence") -> OverlapTable:
    """Overlap and coordinate matrices between displaced oscillator ladders.

    The initial (index m, energy ``hw_i``) oscillator is centred at ``dQ``,
    the final one (index n, ``hw_f``) at 0; ``Q0`` is the initial equilibrium.
    Tables cover m = 0..m_max and n = 0..n_max.
    """
    if n_max < 0 or m_max < 0:
        raise ValueError("level counts must be non-negative")
    n_i, n_f = m_max + 2, n_max + 1
    a_i, a_f = _alpha(hw_i), _alpha(hw_f)
    if method == "recurrence":
        S = _kernels.fc_overlap_table(a_i, a_f, float(dQ), n_i, n_f)
        # the transposed problem runs a different recurrence; disagreement
        # between the two exposes loss of accuracy in either
        S_t = _kernels.fc_overlap_table(a_f, a_i, -float(dQ), n_f, n_i).T
        if not (np.all(np.isfinite(S)) and np.all(np.isfinite(S_t))) or \
                np.abs(S - S_t).max() > STABILITY_TOL:
            logger.info("overlap recurrence unstable for %dx%d table; using quadrature", n_i, n_f)
            S = overlap_quadrature(hw_i, hw_f, dQ, n_i, n_f)
            method = "quadrature-fallback"
    elif method == "quadrature":
        S = overlap_quadrature(hw_i, hw_f, dQ, n_i, n_f)
    else:
        raise ValueError(f"unknown overlap method {method!r}")
    m = np.arange(m_max + 1)
    # (Q - dQ) chi_i,m = (sqrt(m) chi_i,m-1 + sqrt(m+1) chi_i,m+1) / sqrt(2 alpha_i)
    Qm = np.sqrt(m + 1)[:, None] * S[1:m_max + 2]
    Qm[1:] += np.sqrt(m[1:])[:, None] * S[:m_max]
    Qm /= np.sqrt(2.0 * a_i)
    return OverlapTable(S[: m_max + 1], Qm, method)


# -------------------------------------------------------- nonradiative


@dataclass
class NonradiativeInputs:
    g: int
    W_if: float
    hw_i: float
    hw_f: float
    dE: float
    dQ: float
    temperatures: np.ndarray = field(default_factory=lambda: np.array([0.0]))
    sigma: float = DEFAULT_SIGMA
    level_budget: int = LEVEL_BUDGET

    def __post_init__(self):
        self.temperatures = np.atleast_1d(np.asarray(self.temperatures, dtype=float))
        if int(self.g) != self.g or self.g < 1:
            raise ValueError("degeneracy must be an integer >= 1")
        if self.hw_i <= 0 or self.hw_f <= 0 or self.dE <= 0:
            raise ValueError("energies must be positive")
        if self.sigma <= 0:
            raise ValueError("smearing must be positive")
        if self.W_if < 0:
            raise ValueError("W_if must be non-negative")
        if np.any(self.temperatures < 0):
            raise ValueError("temperatures must be non-negative")


@dataclass
class RateResult:
    temperatures: np.ndarray
    tau_nr: np.ndarray            # ns
    tau_r: float | None = None    # ns
    qe: np.ndarray | None = None
    rates: np.ndarray | None = None  # 1/ns


def _boltzmann(hw, T, m_count):
    if T <= 0:
        w = np.zeros(m_count)
        w[0] = 1.0
        return w
    x = hw / (u.BOLTZMANN_EV_K * T)
    m = np.arange(m_count)
    return np.exp(-m * x) * (-np.expm1(-x))


def _level_counts(inp: NonradiativeInputs, T_max: float):
    if T_max > 0:
        x = inp.hw_i / (u.BOLTZMANN_EV_K * T_max)
        # remaining Boltzmann tail exp(-M x) below the truncation tolerance
        m_count = int(math.ceil(-math.log(TRUNCATION_TOL * 1e-2) / x)) + 1
    else:
        m_count = 1
    m_count = max(m_count, 1)
    e_top = inp.dE + (m_count - 1) * inp.hw_i + 8 * inp.sigma
    n_count = int(math.ceil(e_top / inp.hw_f)) + 10
    return m_count, n_count


def _rate_table(inp: NonradiativeInputs, m_count, n_count, table=None):
    """Per-initial-level rate r_m (1/s) for m < m_count."""
    if table is None:
        table = fc_overlap_table(inp.hw_i, inp.hw_f, inp.dQ, n_count - 1, m_count - 1)
    m = np.arange(m_count)[:, None]
    n = np.arange(n_count)[None, :]
    e_diff = inp.dE + m * inp.hw_i - n * inp.hw_f
    delta = np.exp(-0.5 * (e_diff / inp.sigma) ** 2) / (inp.sigma * math.sqrt(2 * math.pi))
    terms = (inp.W_if * table.q_matrix[:m_count, :n_count]) ** 2 * delta
    prefactor = 2 * math.pi / u.HBAR_EV_S * inp.g
    return prefactor * terms.sum(axis=1), prefactor * terms, table


def nonradiative_rate(inp: NonradiativeInputs, T: float | None = None) -> float:
    """Golden-rule nonradiative rate (1/ns) at temperature ``T`` (K)."""
    T = float(inp.temperatures[0] if T is None else T)
    return float(_rates_for(inp, np.array([T]))[0])


def _rates_for(inp: NonradiativeInputs, temps: np.ndarray) -> np.ndarray:
    if inp.W_if == 0:
        return np.zeros(temps.size)
    m_count, n_count = _level_counts(inp, float(temps.max()))
    if m_count + 1 > inp.level_budget or n_count > inp.level_budget:
        raise TruncationError(
            f"needs {m_count} initial and {n_count} final levels; budget {inp.level_budget}"
        )
    r_m, terms, _ = _rate_table(inp, m_count, n_count)
    # appended final levels must be negligible
    tail = terms[:, -5:].sum()
    if terms.sum() > 0 and tail > TRUNCATION_TOL * terms.sum():
        partial = r_m.sum()
        raise TruncationError("final-state sum not converged within level budget", partial=partial)
    out = np.empty(temps.size)
    for k, T in enumerate(temps):
        w = _boltzmann(inp.hw_i, T, m_count)
        out[k] = float(w @ r_m) * 1e-9
    return out


def lifetime_vs_temperature(inp: NonradiativeInputs, tau_r: float | None = None) -> RateResult:
    temps = inp.temperatures
    if temps.size == 0:
        raise ValueError("temperature grid is empty")
    if np.any(np.diff(temps) < 0):
        raise ValueError("temperature grid must be ascending")
    rates = _rates_for(inp, temps)
    with np.errstate(divide="ignore"):
        tau = np.where(rates > 0, 1.0 / np.where(rates > 0, rates, 1.0), np.inf)
    qe = None
    if tau_r is not None:
        qe = np.array([quantum_efficiency(tau_r, t) for t in tau])
    return RateResult(temps, tau, tau_r, qe, rates)
