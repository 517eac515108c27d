"""Adiabatic potential-energy surfaces of the linear T x (e + t2) problem.

Coordinates are dimensionless normal coordinates ordered
``(Q_theta, Q_eps, Q_xi, Q_eta, Q_zeta)`` so that coupling constants carry eV.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

logger = logging.getLogger(__name__)

SQRT3 = np.sqrt(3.0)

COORDINATES = ("theta", "eps", "xi", "eta", "zeta")

# orbital operators acting on (t2x, t2y, t2z)
T_EPS = np.diag([SQRT3 / 2, -SQRT3 / 2, 0.0])
T_THETA = np.diag([-0.5, -0.5, 1.0])
T_XI = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
T_ETA = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
T_ZETA = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
# same order as COORDINATES
ORBITAL_OPERATORS = (T_THETA, T_EPS, T_XI, T_ETA, T_ZETA)
CRYSTAL_FIELD_PATTERN = np.ones((3, 3)) - np.eye(3)


class FitError(RuntimeError):
    """Raised when a surface fit cannot be performed."""


@dataclass(frozen=True)
class VibronicParams:
    """Parameters of the linear Jahn-Teller model (all energies in eV)."""

    F_E: float
    F_T: float
    hw_E: float
    hw_T: float
    delta: float = 0.0

    def __post_init__(self):
        if not (self.hw_E > 0 and self.hw_T > 0):
            raise ValueError("phonon energies must be positive")
        if self.F_E < 0 or self.F_T < 0:
            raise ValueError("coupling constants must be non-negative")
        for v in (self.F_E, self.F_T, self.hw_E, self.hw_T, self.delta):
            if not np.isfinite(v):
                raise ValueError("parameters must be finite")

    @classmethod
    def from_jt_energies(cls, E_JT_E, E_JT_T, hw_E, hw_T, delta=0.0):
        return cls(
            F_E=coupling_from_jt_energy(E_JT_E, hw_E, "E"),
            F_T=coupling_from_jt_energy(E_JT_T, hw_T, "T"),
            hw_E=hw_E,
            hw_T=hw_T,
            delta=delta,
        )

    @property
    def mode_energies(self) -> np.ndarray:
        return np.array([self.hw_E, self.hw_E, self.hw_T, self.hw_T, self.hw_T])

    @property
    def mode_couplings(self) -> np.ndarray:
        return np.array([self.F_E, self.F_E, self.F_T, self.F_T, self.F_T])


def _as_coordinate(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (5,):
        raise ValueError("configuration coordinate must have 5 components")
    if not np.all(np.isfinite(q)):
        raise ValueError("configuration coordinate must be finite")
    return q


def w_matrix(params: VibronicParams, q) -> np.ndarray:
    """Linear vibronic interaction matrix W(Q) on the t2 orbital triple."""
    q_th, q_ep, q_xi, q_et, q_ze = _as_coordinate(q)
    fe, ft = params.F_E, params.F_T
    return np.array(
        [
            [fe * (q_th / 2 - SQRT3 * q_ep / 2), -ft * q_ze, -ft * q_et],
            [-ft * q_ze, fe * (q_th / 2 + SQRT3 * q_ep / 2), -ft * q_xi],
            [-ft * q_et, -ft * q_xi, -fe * q_th],
        ]
    )


def apes_matrix(params: VibronicParams, q) -> np.ndarray:
    q = _as_coordinate(q)
    harmonic = 0.5 * params.hw_E * (q[0] ** 2 + q[1] ** 2) + 0.5 * params.hw_T * (
        q[2] ** 2 + q[3] ** 2 + q[4] ** 2
    )
    return (
        harmonic * np.eye(3)
        + w_matrix(params, q)
        - (params.delta / 3.0) * CRYSTAL_FIELD_PATTERN
    )


def apes_energies(params: VibronicParams, q) -> np.ndarray:
    """The three APES branch energies at ``q``, ascending."""
    return np.linalg.eigvalsh(apes_matrix(params, q))


def lowest_branch_and_gradient(params: VibronicParams, q):
    """Lowest branch energy and its gradient (Hellmann-Feynman)."""
    q = np.asarray(q, dtype=float)
    w, v = np.linalg.eigh(apes_matrix(params, q))
    c = v[:, 0]
    omega = params.mode_energies
    # dM/dQ_i = hw_i Q_i I - F_i T_i
    grad = omega * q - params.mode_couplings * np.array(
        [c @ T @ c for T in ORBITAL_OPERATORS]
    )
    return w[0], grad


def jt_energy_from_coupling(F: float, hw: float, mode: str) -> float:
    """Jahn-Teller energy of a single mode type from its linear coupling."""
    if hw <= 0:
        raise ValueError("phonon energy must be positive")
    mode = mode.upper()
    if mode == "E":
        return F * F / (2.0 * hw)
    if mode == "T":
        return F * F / (1.5 * hw)
    raise ValueError(f"mode must be 'E' or 'T', got {mode!r}")


def coupling_from_jt_energy(E_JT: float, hw: float, mode: str) -> float:
    if hw <= 0:
        raise ValueError("phonon energy must be positive")
    if E_JT < 0:
        raise ValueError("Jahn-Teller energy must be non-negative")
    mode = mode.upper()
    if mode == "E":
        return float(np.sqrt(2.0 * hw * E_JT))
    if mode == "T":
        return float(np.sqrt(1.5 * hw * E_JT))
    raise ValueError(f"mode must be 'E' or 'T', got {mode!r}")


# ---------------------------------------------------------------- fitting


@dataclass
class PesScan:
    """One-dimensional APES scan along a single coordinate."""

    coordinate: str
    q: np.ndarray
    energies: np.ndarray  # shape (npoints, nbranches), ascending per row

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        e = np.asarray(self.energies, dtype=float)
        if e.ndim == 1:
            e = e[:, None]
        self.energies = np.sort(e, axis=1)
        if self.coordinate not in COORDINATES:
            raise ValueError(f"unknown coordinate {self.coordinate!r}")
        if self.energies.shape[0] != self.q.size:
            raise ValueError("energy rows must match Q values")
        if not 1 <= self.energies.shape[1] <= 3:
            raise ValueError("scan must have 1 to 3 branches")
        dq = np.diff(self.q)
        if self.q.size > 1 and not (np.all(dq > 0) or np.all(dq < 0)):
            raise ValueError("Q values must be strictly monotone")


@dataclass
class FitResult:
    F: float
    hw: float
    rms: float
    mode: str
    coordinate: str
    method: str = "linear"


DEFAULT_COORDINATE = {"E": "theta", "T": "zeta"}


def _scan_design(scan: PesScan):
    rows_q, rows_c, target = [], [], []
    nb = scan.energies.shape[1]
    T = ORBITAL_OPERATORS[COORDINATES.index(scan.coordinate)]
    for qk, ek in zip(scan.q, scan.energies):
        if qk == 0.0:
            coefs = np.zeros(3)
        else:
            # branch ordering of c*F*Q for F > 0 depends only on sign(Q)
            coefs = np.sort(np.linalg.eigvalsh(-T) * qk) / qk
        for b in range(nb):
            rows_q.append(0.5 * qk * qk)
            rows_c.append(coefs[b] * qk)
            target.append(ek[b])
    A = np.column_stack([rows_q, rows_c])
    return A, np.asarray(target)


def fit_linear_jt(scan: PesScan, mode: str, delta: float = 0.0) -> FitResult:
    """Fit (F, hw) of the linear JT model to an ordered-branch APES scan.

    With ``delta == 0`` the branch energies are linear in ``(hw, F)`` once
    the branches are matched by energy ordering, so the fit is a linear
    least-squares problem. A nonzero crystal field falls back to a
    multi-start nonlinear least-squares fit.
    """
    mode = mode.upper()
    if mode not in ("E", "T"):
        raise ValueError("mode must be 'E' or 'T'")
    expected = ("theta", "eps") if mode == "E" else ("xi", "eta", "zeta")
    if scan.coordinate not in expected:
        raise FitError(f"coordinate {scan.coordinate!r} does not belong to a {mode} mode")
    if scan.q.size < 4:
        raise FitError("need at least 4 scan points")
    if not (np.any(scan.q > 0) and np.any(scan.q < 0)):
        raise FitError("scan must span both signs of Q")

    A, y = _scan_design(scan)
    if np.linalg.matrix_rank(A) < 2:
        raise FitError("rank-deficient design matrix (degenerate scan)")

    if delta == 0.0:
        (hw, F), *_ = np.linalg.lstsq(A, y, rcond=None)
        if F < 0:
            # F >= 0 by convention; negative solution means data inconsistent ordering
            F = 0.0
            hw = float(np.linalg.lstsq(A[:, :1], y, rcond=None)[0][0])
        if hw <= 0:
            raise FitError(f"fitted phonon energy is non-positive ({hw:.3e} eV)")
        rms = float(np.sqrt(np.mean((A @ np.array([hw, F]) - y) ** 2)))
        return FitResult(float(F), float(hw), rms, mode, scan.coordinate, "linear")
    return _fit_nonlinear(scan, mode, delta)


def scan_model(F: float, hw: float, mode: str, coordinate: str, q, delta=0.0, nbranches=3):
    """Model branch energies along one coordinate, shape (len(q), nbranches)."""
    idx = COORDINATES.index(coordinate)
    if mode == "E":
        p = VibronicParams(F_E=max(F, 0.0), F_T=0.0, hw_E=hw, hw_T=1.0, delta=delta)
    else:
        p = VibronicParams(F_E=0.0, F_T=max(F, 0.0), hw_E=1.0, hw_T=hw, delta=delta)
    out = np.empty((len(q), 3))
    for k, qk in enumerate(q):
        vec = np.zeros(5)
        vec[idx] = qk
        out[k] = apes_energies(p, vec)
    # the crystal-field offset at Q=0 is intrinsic to the model; keep it
    return out[:, :nbranches]


def _fit_nonlinear(scan: PesScan, mode: str, delta: float) -> FitResult:
    nb = scan.energies.shape[1]

    def resid(x):
        return (scan_model(x[0], x[1], mode, scan.coordinate, scan.q, delta, nb) - scan.energies).ravel()

    # linear solution ignoring delta supplies the scale for the starts
    A, y = _scan_design(scan)
    (hw0, F0), *_ = np.linalg.lstsq(A, y, rcond=None)
    hw0 = abs(hw0) if hw0 != 0 else 0.05
    F0 = abs(F0) if F0 != 0 else 0.05
    best = None
    for scale in np.logspace(-1, 1, 5):
        x0 = np.array([F0 * scale, hw0])
        try:
            sol = optimize.least_squares(
                resid, x0, bounds=([0.0, 1e-8], [np.inf, np.inf]),
                method="trf", xtol=1e-10, ftol=1e-14, gtol=1e-14,
            )
        except ValueError as exc:  # pragma: no cover - scipy diagnostics
            logger.debug("start %s failed: %s", x0, exc)
            continue
        cost = float(np.sqrt(np.mean(sol.fun ** 2)))
        key = (round(cost, 14), float(np.linalg.norm(sol.x)))
        if best is None or key < best[0]:
            best = (key, sol.x, cost)
    if best is None:
        raise FitError("nonlinear fit failed from all starting points")
    F, hw = best[1]
    return FitResult(float(F), float(hw), best[2], mode, scan.coordinate, "nonlinear")


# ---------------------------------------------------- stationary points


@dataclass
class StationaryResult:
    minimum_energy: float
    depth: float
    minima: list = field(default_factory=list)  # list of 5-vectors
    barrier: float | None = None
    saddle_energy: float | None = None
    converged: bool = True


class StationaryError(RuntimeError):
    pass


def _minimize_lowest(params, q0, maxiter):
    def fun(q):
        return lowest_branch_and_gradient(params, q)

    return optimize.minimize(fun, q0, jac=True, method="BFGS",
                             options={"gtol": 1e-10, "maxiter": maxiter})


def stationary_analysis(
    params: VibronicParams,
    n_starts: int = 20,
    radius: float = 4.0,
    seed: int = 0,
    maxiter: int = 2000,
    n_images: int = 25,
) -> StationaryResult:
    """Locate minima of the lowest APES sheet and the lowest barrier between them.

    Depth is measured from the lowest-branch energy at Q = 0. The barrier is
    the maximum along a relaxed minimum-energy path (string method) between
    the two lowest distinct minima; ``None`` when there is a single minimum.
    """
    rng = np.random.default_rng(seed)
    e_ref = apes_energies(params, np.zeros(5))[0]
    starts = [np.zeros(5) + 1e-3]
    while len(starts) < n_starts:
        v = rng.normal(size=5)
        v *= radius * rng.uniform() ** 0.2 / np.linalg.norm(v)
        starts.append(v)

    found = []
    n_fail = 0
    for q0 in starts:
        res = _minimize_lowest(params, q0, maxiter)
        if not res.success and np.linalg.norm(res.jac) > 1e-6:
            n_fail += 1
            continue
        found.append((float(res.fun), res.x))
    if not found:
        raise StationaryError(f"no start converged within {maxiter} iterations")

    found.sort(key=lambda t: t[0])
    e_min = found[0][0]
    minima = []
    for e, x in found:
        if e - e_min > 1e-7:
            continue
        if all(np.linalg.norm(x - m) > 1e-3 for m in minima):
            minima.append(x)

    result = StationaryResult(minimum_energy=e_min, depth=max(0.0, e_ref - e_min), minima=minima,
                              converged=n_fail == 0)
    if len(minima) >= 2:
        best = None
        for j in range(1, len(minima)):
            top = _string_barrier(params, minima[0], minima[j], n_images)
            if best is None or top < best:
                best = top
        result.saddle_energy = best
        result.barrier = best - e_min
    return result


def _string_barrier(params, a, b, n_images, n_iter=400, step=0.05):
    """Maximum energy along a relaxed path from ``a`` to ``b`` (simplified string method)."""
    s = np.linspace(0.0, 1.0, n_images)
    path = a[None, :] * (1 - s[:, None]) + b[None, :] * s[:, None]
    for _ in range(n_iter):
        for k in range(1, n_images - 1):
            _, g = lowest_branch_and_gradient(params, path[k])
            tau = path[k + 1] - path[k - 1]
            tau /= np.linalg.norm(tau) + 1e-300
            g_perp = g - (g @ tau) * tau
            path[k] -= step * g_perp / max(params.hw_E, params.hw_T)
        # redistribute images uniformly in arc length
        seg = np.linalg.norm(np.diff(path, axis=0), axis=1)
        arc = np.concatenate([[0.0], np.cumsum(seg)])
        if arc[-1] == 0:
            break
        arc /= arc[-1]
        path = np.column_stack([np.interp(s, arc, path[:, i]) for i in range(5)])
    energies = [apes_energies(params, p)[0] for p in path]
    k = int(np.argmax(energies))
    if 0 < k < n_images - 1:
        # refine the climbing image on the path tangent
        fine = np.linspace(path[k - 1], path[k + 1], 41)
        return float(max(apes_energies(params, p)[0] for p in fine))
    return float(energies[k])
