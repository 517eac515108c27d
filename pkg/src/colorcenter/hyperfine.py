"""Hyperfine tensors from a volumetric spin density.

Grid positions are in angstrom and the spin density in 1/angstrom^3.
Tensors are reported in MHz.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import _kernels
from . import units as u

logger = logging.getLogger(__name__)

ISOTROPY_TOL = 1e-9


class GridInputError(ValueError):
    pass


@dataclass
class Nucleus:
    label: str
    position: np.ndarray
    g_N: float
    gamma_N: float = 1.0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)


@dataclass
class SpinDensityGrid:
    """Uniform volumetric grid: point (i, j, k) sits at origin + i a + j b + k c."""

    origin: np.ndarray
    axes: np.ndarray          # rows are the step vectors a, b, c
    values: np.ndarray        # shape (n1, n2, n3)
    spin_z: float = 0.5
    nuclei: list = field(default_factory=list)

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float)
        self.axes = np.asarray(self.axes, dtype=float).reshape(3, 3)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3:
            raise GridInputError("values must be a 3D array")
        if abs(np.linalg.det(self.axes)) < 1e-14:
            raise GridInputError("grid axis vectors are linearly dependent")
        if not np.all(np.isfinite(self.values)):
            raise GridInputError("spin density contains non-finite values")
        if self.spin_z == 0:
            raise GridInputError("<S_z> must be nonzero")
        total = self.integrated_density()
        if total != 0 and abs(total - 2 * self.spin_z) > 0.05 * abs(2 * self.spin_z):
            warnings.warn(
                f"integrated spin density {total:.4f} differs from 2<S_z> = {2 * self.spin_z:.4f}",
                RuntimeWarning, stacklevel=2,
            )

    @property
    def shape(self):
        return self.values.shape

    @property
    def voxel_volume(self) -> float:
        return abs(float(np.linalg.det(self.axes)))

    @property
    def spacing(self) -> float:
        """Smallest step length."""
        return float(np.linalg.norm(self.axes, axis=1).min())

    def integrated_density(self) -> float:
        return float(self.values.sum() * self.voxel_volume)

    def points(self) -> np.ndarray:
        n1, n2, n3 = self.shape
        i, j, k = np.meshgrid(np.arange(n1), np.arange(n2), np.arange(n3), indexing="ij")
        frac = np.stack([i.ravel(), j.ravel(), k.ravel()], axis=1).astype(float)
        return self.origin + frac @ self.axes

    def fractional_index(self, r) -> np.ndarray:
        return np.linalg.solve(self.axes.T, np.asarray(r, dtype=float) - self.origin)

    def contains(self, r) -> bool:
        f = self.fractional_index(r)
        return bool(np.all(f >= -1e-9) and np.all(f <= np.array(self.shape) - 1 + 1e-9))

    def interpolate(self, r, order: int = 1) -> float:
        """Density at ``r``: trilinear (``order=1``) or cubic-spline (``order=3``)."""
        f = self.fractional_index(r)
        if order == 3:
            return float(ndimage.map_coordinates(self.values, f[:, None], order=3, mode="nearest")[0])
        if order != 1:
            raise ValueError("interpolation order must be 1 or 3")
        n = np.array(self.shape)
        f = np.clip(f, 0.0, n - 1)
        i0 = np.minimum(np.floor(f).astype(int), n - 2)
        i0 = np.maximum(i0, 0)
        t = f - i0
        val = 0.0
        for dx in (0, 1):
            for dy in (0, 1):
                for dz in (0, 1):
                    w = (t[0] if dx else 1 - t[0]) * (t[1] if dy else 1 - t[1]) * (t[2] if dz else 1 - t[2])
                    if w:
                        ix = min(i0[0] + dx, n[0] - 1)
                        iy = min(i0[1] + dy, n[1] - 1)
                        iz = min(i0[2] + dz, n[2] - 1)
                        val += w * self.values[ix, iy, iz]
        return float(val)


@dataclass
class HyperfineTensor:
    matrix: np.ndarray       # MHz
    principal: np.ndarray    # (A_xx, A_yy, A_zz)
    theta: float             # degrees
    contact: float           # MHz, isotropic Fermi-contact contribution
    dipolar: np.ndarray      # MHz, traceless part
    isotropic: bool = False
    label: str = ""


def hyperfine_prefactor(g_N: float, gamma_N: float = 1.0, g_e: float = u.ELECTRON_G) -> float:
    """(mu0/4pi) g mu_B g_N gamma_N mu_N / h in MHz angstrom^3."""
    k = (u.VACUUM_PERMEABILITY / (4 * math.pi)) * g_e * u.BOHR_MAGNETON * g_N * gamma_N * u.NUCLEAR_MAGNETON
    return k / u.PLANCK_J_S / u.ANGSTROM_M ** 3 / 1e6


def dipolar_integral(grid: SpinDensityGrid, center, r_min: float, backend=None) -> np.ndarray:
    """Int rho(r) (3 x_i x_j - r^2 delta_ij) / r^5 d^3r excluding r < r_min (1/angstrom^3)."""
    kern = _kernels if backend is None else backend
    pts = grid.points()
    # nodes lying on the exclusion sphere count as outside, independent of roundoff
    cut = float(r_min) * (1.0 - 1e-9)
    return kern.dipolar_sum(pts, grid.values.ravel(), np.asarray(center, float), cut) * grid.voxel_volume


def hyperfine_tensor(
    grid: SpinDensityGrid,
    nucleus: int | Nucleus = 0,
    exclusion_radius: float | None = None,
    grouping: str = "printed",
    c_axis=(0.0, 0.0, 1.0),
    reference=None,
    g_e: float = u.ELECTRON_G,
    interpolation: int = 1,
) -> HyperfineTensor:
    """Hyperfine tensor of one nucleus.

    ``grouping="printed"`` uses the kernel
    ``(4 pi / 3) [delta_ij delta(r) - (3 x_i x_j - r^2 delta_ij) / (2 r^5)]``;
    ``grouping="conventional"`` uses ``(8 pi / 3) delta_ij delta(r) +
    (3 x_i x_j - r^2 delta_ij) / r^5``.
    """
    nuc = grid.nuclei[nucleus] if isinstance(nucleus, int) else nucleus
    if not grid.contains(nuc.position):
        raise GridInputError(f"nucleus {nuc.label!r} lies outside the grid")
    r_min = grid.spacing if exclusion_radius is None else float(exclusion_radius)
    if r_min > 10 * grid.spacing:
        raise GridInputError("exclusion radius exceeds ten grid spacings")
    if r_min < 0:
        raise GridInputError("exclusion radius must be non-negative")

    K = hyperfine_prefactor(nuc.g_N, nuc.gamma_N, g_e) / grid.spin_z
    rho0 = grid.interpolate(nuc.position, order=interpolation)
    D = dipolar_integral(grid, nuc.position, r_min)
    if grouping == "printed":
        contact = K * (4 * math.pi / 3) * rho0
        dip = -K * (4 * math.pi / 3) * 0.5 * D
    elif grouping == "conventional":
        contact = K * (8 * math.pi / 3) * rho0
        dip = K * D
    else:
        raise ValueError(f"unknown grouping {grouping!r}")
    A = contact * np.eye(3) + dip
    A = 0.5 * (A + A.T)
    principal, theta, iso = principal_analysis(A, c_axis, reference=reference)
    return HyperfineTensor(A, principal, theta, contact, dip, iso, nuc.label)


def principal_analysis(A, c_axis=(0.0, 0.0, 1.0), reference=None, tol=1e-9):
    """Principal values ``(A_xx, A_yy, A_zz)`` and polar angle of the A_zz axis.

    A_zz is the eigenvalue of largest magnitude; the other two follow in
    order of decreasing magnitude. The eigenvector sign is fixed so that it
    has a non-negative projection on ``reference`` (default: ``c_axis``),
    which maps theta to [0, 90] deg unless a reference is given.
    Returns ``(principal, theta_deg, isotropic)``.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (3, 3):
        raise ValueError("hyperfine tensor must be 3x3")
    scale = max(1.0, np.abs(A).max())
    if np.abs(A - A.T).max() > tol * scale:
        raise ValueError("hyperfine tensor is not symmetric")
    c = np.asarray(c_axis, dtype=float)
    c = c / np.linalg.norm(c)
    w, v = np.linalg.eigh(0.5 * (A + A.T))
    order = np.argsort(-np.abs(w), kind="stable")
    zz = order[0]
    rest = order[1:]
    principal = np.array([w[rest[0]], w[rest[1]], w[zz]])
    isotropic = bool(np.ptp(w) <= ISOTROPY_TOL * scale)
    if isotropic:
        return principal, 0.0, True
    vec = v[:, zz]
    ref = c if reference is None else np.asarray(reference, dtype=float)
    if vec @ ref < 0:
        vec = -vec
    cos = float(np.clip(vec @ c, -1.0, 1.0))
    return principal, math.degrees(math.acos(cos)), False
