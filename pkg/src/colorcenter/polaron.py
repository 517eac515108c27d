"""Vibronic Hamiltonian of the T x (e + t2) problem in a truncated oscillator basis.

Basis states are ``|orbital> |j, k, l, n, m>`` with occupations of the
``(theta, eps, xi, eta, zeta)`` modes and total phonon order ``<= cutoff``.
"""
from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.sparse as sp
from scipy import optimize

from . import _kernels
from .apes import VibronicParams
from .davidson import ConvergenceError, davidson

logger = logging.getLogger(__name__)

ORBITALS = ("x", "y", "z")
DEGENERACY_TOL = 1e-7


@dataclass(frozen=True)
class OscillatorBasisState:
    orbital: int
    occupations: tuple

    @property
    def order(self) -> int:
        return sum(self.occupations)


def phonon_configurations(cutoff: int) -> np.ndarray:
    """All 5-mode occupation vectors with total order <= cutoff, graded-lex order."""
    if cutoff < 0:
        raise ValueError("cutoff must be non-negative")
    rows = [c for c in itertools.product(range(cutoff + 1), repeat=5) if sum(c) <= cutoff]
    rows.sort(key=lambda c: (sum(c), c))
    return np.asarray(rows, dtype=np.int64).reshape(-1, 5)


def enumerate_basis(cutoff: int) -> list[OscillatorBasisState]:
    """Ordered basis: phonon configuration (graded lex) then orbital."""
    return [
        OscillatorBasisState(a, tuple(int(x) for x in occ))
        for occ in phonon_configurations(cutoff)
        for a in range(3)
    ]


def basis_dimension(cutoff: int) -> int:
    return 3 * comb(cutoff + 5, 5)


@dataclass
class VibronicHamiltonian:
    params: VibronicParams
    cutoff: int
    occupations: np.ndarray
    matrix: sp.csr_matrix

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def triplets_text(self) -> str:
        """Upper-triangle nonzeros as ``row col value`` lines."""
        coo = sp.triu(self.matrix).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return "".join(f"{coo.row[i]} {coo.col[i]} {coo.data[i]:.16e}\n" for i in order)

    def dump_triplets(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.triplets_text())


def assemble_hamiltonian(params: VibronicParams, cutoff: int, backend=None) -> VibronicHamiltonian:
    occ = phonon_configurations(cutoff)
    kern = _kernels if backend is None else backend
    rows, cols, vals = kern.vibronic_coo(occ, params.mode_energies, params.mode_couplings, params.delta)
    dim = 3 * occ.shape[0]
    H = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    H.sum_duplicates()
    H.eliminate_zeros()
    return VibronicHamiltonian(params, cutoff, occ, H)


@dataclass
class PolaronSpectrum:
    cutoff: int
    eigenvalues: np.ndarray
    levels: list = field(default_factory=list)  # (energy, degeneracy)

    @property
    def ground(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def gap(self) -> float:
        """Difference between the two lowest distinct levels."""
        if len(self.levels) < 2:
            raise ValueError("fewer than two distinct levels were computed")
        return self.levels[1][0] - self.levels[0][0]


def group_levels(values, tol=DEGENERACY_TOL):
    levels = []
    start = 0
    values = np.asarray(values)
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] - values[i - 1] > tol:
            levels.append((float(values[start:i].mean()), i - start))
            start = i
    return levels


def lowest_eigenpairs(H: VibronicHamiltonian, n: int = 6, tol: float = 1e-9, method="davidson",
                      return_vectors=False):
    """Lowest ``n`` vibronic eigenvalues (eV) with degeneracy grouping."""
    if n < 2:
        raise ValueError("need at least two eigenvalues")
    n = min(n, H.dimension)
    if method == "dense":
        w, v = np.linalg.eigh(H.matrix.toarray())
        w, v = w[:n], v[:, :n]
    elif method == "davidson":
        w, v = davidson(H.matrix, n, tol=tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    spec = PolaronSpectrum(H.cutoff, np.asarray(w), group_levels(w))
    return (spec, v) if return_vectors else spec


def _spectrum_with_two_levels(H, n_start=6, tol=1e-9):
    n = n_start
    while True:
        spec = lowest_eigenpairs(H, n, tol=tol)
        # the second level must be complete: at least one eigenvalue above it
        if len(spec.levels) >= 3 or n >= H.dimension:
            return spec
        n += 3


@dataclass
class GapResult:
    cutoffs: np.ndarray
    gaps: np.ndarray
    ground_energies: np.ndarray
    extrapolated: float | None
    fit_params: tuple | None  # (g_inf, a, b)
    fit_residual: float | None
    method: str
    fit_failed: bool = False


def exponential_extrapolation(orders, gaps, window=None, rel_tol=1e-3):
    """Fit ``g(O) = g_inf + a exp(-b O)`` over the trailing window.

    Returns ``(g_inf, params, residual, method, failed)``. When the fit's RMS
    residual exceeds ``rel_tol * |g_inf|`` (or the fit does not converge) the
    estimate falls back to Aitken extrapolation of the last three points.
    """
    orders = np.asarray(orders, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    if window is None:
        window = max(4, len(orders) - 5)
    window = min(window, len(orders))
    x, y = orders[-window:], gaps[-window:]
    spread = np.ptp(y)
    if spread <= 1e-12 * max(1.0, abs(y[-1])):
        return float(y[-1]), (float(y[-1]), 0.0, 0.0), 0.0, "constant", False

    def model(o, g, a, b):
        return g + a * np.exp(-b * (o - x[0]))

    fit = None
    failed = False
    best = None
    for b0 in (0.1, 0.3, 1.0, 3.0):
        p0 = (y[-1], y[0] - y[-1], b0)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                popt, _ = optimize.curve_fit(model, x, y, p0=p0, maxfev=20000)
        except (RuntimeError, optimize.OptimizeWarning):
            continue
        res = float(np.sqrt(np.mean((model(x, *popt) - y) ** 2)))
        if popt[2] > 0 and (best is None or res < best[1]):
            best = (popt, res)
    if best is not None:
        popt, res = best
        g_inf = float(popt[0])
        a = float(popt[1] * np.exp(popt[2] * x[0]))
        fit = (g_inf, a, float(popt[2]))
        if res <= rel_tol * abs(g_inf):
            return g_inf, fit, res, "exponential", False
    failed = True
    # Aitken delta-squared on the last three points
    if len(gaps) >= 3:
        g0, g1, g2 = gaps[-3:]
        d2 = g2 - 2 * g1 + g0
        est = g2 - (g2 - g1) ** 2 / d2 if abs(d2) > 1e-15 else g2
    else:
        est = gaps[-1]
    return float(est), fit, (None if best is None else best[1]), "aitken", failed


def polaronic_gap(params: VibronicParams, o_max: int = 10, o_min: int = 2, tol: float = 1e-9,
                  window=None) -> GapResult:
    """Polaronic gap for each cutoff in ``o_min..o_max`` and its extrapolation."""
    if o_max < 4:
        raise ValueError("o_max must be at least 4")
    orders, gaps, grounds = [], [], []
    for order in range(o_min, o_max + 1):
        H = assemble_hamiltonian(params, order)
        spec = _spectrum_with_two_levels(H, tol=tol)
        orders.append(order)
        gaps.append(spec.gap)
        grounds.append(spec.ground)
        logger.info("O=%d dim=%d E0=%.9f gap=%.9f", order, H.dimension, spec.ground, spec.gap)
    g_inf, fit, res, method, failed = exponential_extrapolation(orders, gaps, window=window)
    return GapResult(np.array(orders), np.array(gaps), np.array(grounds), g_inf, fit, res, method, failed)


def displaced_oscillator_ground(params: VibronicParams) -> float:
    """Exact ground energy for ``F_T = 0``, ``delta = 0`` (decoupled orbitals)."""
    if params.F_T != 0.0 or params.delta != 0.0:
        raise ValueError("closed form requires F_T = 0 and delta = 0")
    # each orbital sees a unit-length E-mode force F_E: shift -F_E^2 / (2 hw_E)
    return params.hw_E + 1.5 * params.hw_T - params.F_E ** 2 / (2.0 * params.hw_E)


def decoupled_gap(params: VibronicParams) -> float:
    """Gap of the uncoupled (F = 0) model: lowest of delta, hw_E, hw_T."""
    cands = [params.hw_E, params.hw_T]
    if params.delta > 0:
        cands.append(params.delta)
    elif params.delta < 0:
        # inverted crystal field: doublet below singlet
        cands.append(-params.delta)
    return min(cands)


__all__ = [
    "OscillatorBasisState", "VibronicHamiltonian", "PolaronSpectrum", "GapResult",
    "enumerate_basis", "phonon_configurations", "basis_dimension", "assemble_hamiltonian",
    "lowest_eigenpairs", "polaronic_gap", "exponential_extrapolation", "group_levels",
    "displaced_oscillator_ground", "decoupled_gap", "ConvergenceError",
]
