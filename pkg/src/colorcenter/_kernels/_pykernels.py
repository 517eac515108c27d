"""Pure-Python/numpy implementations of the hot kernels.

Signatures must match ``_ckernels.pyx``.
"""
import math

import numpy as np

SQRT3_2 = math.sqrt(3.0) / 2.0

# coupling channels per mode (theta, eps, xi, eta, zeta): list of
# (orbital_a, orbital_b, orbital-operator element) with a <= b
_CHANNELS = (
    ((0, 0, -0.5), (1, 1, -0.5), (2, 2, 1.0)),           # T_theta
    ((0, 0, SQRT3_2), (1, 1, -SQRT3_2)),                 # T_eps
    ((1, 2, 1.0),),                                       # T_xi
    ((0, 2, 1.0),),                                       # T_eta
    ((0, 1, 1.0),),                                       # T_zeta
)


def _keys(occ, base):
    k = np.zeros(occ.shape[0], dtype=np.int64)
    for c in range(occ.shape[1]):
        k = k * base + occ[:, c]
    return k


def vibronic_coo(occ, hw, F, delta):
    """COO triplets (both triangles) of the vibronic Hamiltonian.

    Parameters
    ----------
    occ : (P, 5) int64 array
        phonon configurations in basis order; state index = 3*p + orbital
    hw, F : (5,) float arrays
        per-mode phonon energy and coupling (E, E, T, T, T)
    delta : float
        crystal-field parameter
    """
    occ = np.ascontiguousarray(occ, dtype=np.int64)
    P = occ.shape[0]
    cutoff = int(occ.sum(axis=1).max()) if P else 0
    base = cutoff + 2
    keys = _keys(occ, base)
    order = np.argsort(keys)
    sorted_keys = keys[order]
    total = occ.sum(axis=1)

    rows, cols, vals = [], [], []
    # diagonal
    diag_p = occ @ hw + 0.5 * hw.sum()
    idx = np.arange(3 * P, dtype=np.int64)
    rows.append(idx)
    cols.append(idx)
    vals.append(np.repeat(diag_p, 3))

    # crystal field on orbitals: -delta/3 (T_xi + T_eta + T_zeta)
    if delta != 0.0:
        base_idx = 3 * np.arange(P, dtype=np.int64)
        for a, b in ((0, 1), (0, 2), (1, 2)):
            v = np.full(P, -delta / 3.0)
            rows += [base_idx + a, base_idx + b]
            cols += [base_idx + b, base_idx + a]
            vals += [v, v]

    # linear coupling: p -> p + e_mode, element -F * T[a,b] * sqrt(n+1)/sqrt(2)
    src = np.nonzero(total < cutoff)[0]
    for mode in range(5):
        if F[mode] == 0.0:
            continue
        raised = occ[src].copy()
        raised[:, mode] += 1
        pos = np.searchsorted(sorted_keys, _keys(raised, base))
        dst = order[pos]
        amp = -F[mode] * np.sqrt((occ[src, mode] + 1) / 2.0)
        for a, b, t in _CHANNELS[mode]:
            v = amp * t
            rows += [3 * dst + a, 3 * src + b]
            cols += [3 * src + b, 3 * dst + a]
            vals += [v, v]
            if a != b:
                rows += [3 * dst + b, 3 * src + a]
                cols += [3 * src + a, 3 * dst + b]
                vals += [v, v]
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def fc_overlap_table(alpha_i, alpha_f, d, n_i, n_f):
    """Overlaps <chi_i,m | chi_f,n> of two displaced 1D oscillators.

    ``alpha = omega/hbar`` in inverse length^2 units of the coordinate;
    the initial oscillator is centred at ``d``, the final one at 0. Returns
    an ``(n_i, n_f)`` array filled by the ladder-operator recurrence.
    """
    r = math.sqrt(alpha_i / alpha_f)
    p = 0.5 * (r + 1.0 / r)
    s = 0.5 * (r - 1.0 / r)
    u = math.sqrt(alpha_i / 2.0) * d
    v = math.sqrt(alpha_f / 2.0) * d
    p2 = p * p
    cm = s * v - u          # row (initial index) recurrence
    cn = v + s * u          # column (final index) recurrence
    out = np.zeros((n_i, n_f))
    if n_i == 0 or n_f == 0:
        return out
    out[0, 0] = math.sqrt(2.0 * math.sqrt(alpha_i * alpha_f) / (alpha_i + alpha_f)) * math.exp(
        -alpha_i * alpha_f * d * d / (2.0 * (alpha_i + alpha_f))
    )
    row0 = out[0]
    for n in range(n_f - 1):
        val = cn * row0[n]
        if n > 0:
            val -= s * p * math.sqrt(n) * row0[n - 1]
        row0[n + 1] = val / (p2 * math.sqrt(n + 1))
    for m in range(n_i - 1):
        cur = out[m]
        prev = out[m - 1] if m > 0 else None
        nxt = out[m + 1]
        sm = math.sqrt(m + 1)
        for n in range(n_f):
            val = cm * cur[n]
            if n > 0:
                val += p * math.sqrt(n) * cur[n - 1]
            if m > 0:
                val += s * p * math.sqrt(m) * prev[n]
            nxt[n] = val / (p2 * sm)
    return out


def dipolar_sum(points, values, center, r_min):
    """Sum over grid points of rho (3 x_i x_j - r^2 delta_ij) / r^5 for r >= r_min.

    Returns the 3x3 (unscaled by the volume element) matrix.
    """
    out = np.zeros((3, 3))
    chunk = 200_000
    for start in range(0, values.size, chunk):
        x = points[start:start + chunk] - center
        rho = values[start:start + chunk]
        r2 = np.einsum("ij,ij->i", x, x)
        keep = (r2 >= r_min * r_min) & (rho != 0.0)
        if not np.any(keep):
            continue
        x = x[keep]
        r2 = r2[keep]
        w = rho[keep] / (r2 * r2 * np.sqrt(r2))
        out += 3.0 * np.einsum("k,ki,kj->ij", w, x, x)
        out -= np.eye(3) * np.sum(w * r2)
    return out
