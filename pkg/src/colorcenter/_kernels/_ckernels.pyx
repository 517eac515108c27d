# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels (see ``_pykernels`` for the reference)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp

cnp.import_array()

cdef double SQRT3_2 = 0.8660254037844386


cdef inline long long _key(const long long[:, ::1] occ, Py_ssize_t p, long long base,
                           int bump):
    cdef long long k = 0
    cdef int c
    for c in range(5):
        k = k * base + occ[p, c] + (1 if c == bump else 0)
    return k


def vibronic_coo(occ_in, hw_in, F_in, double delta):
    cdef cnp.ndarray[cnp.int64_t, ndim=2] occ_arr = np.ascontiguousarray(occ_in, dtype=np.int64)
    cdef const long long[:, ::1] occ = occ_arr
    cdef double[::1] hw = np.ascontiguousarray(hw_in, dtype=np.float64)
    cdef double[::1] F = np.ascontiguousarray(F_in, dtype=np.float64)
    cdef Py_ssize_t P = occ.shape[0]
    cdef Py_ssize_t p, q, lo, hi, mid
    cdef int mode, c, a, b
    cdef long long cutoff = 0, tot, base, key
    for p in range(P):
        tot = 0
        for c in range(5):
            tot += occ[p, c]
        if tot > cutoff:
            cutoff = tot
    base = cutoff + 2

    cdef cnp.ndarray[cnp.int64_t, ndim=1] keys_arr = np.empty(P, dtype=np.int64)
    cdef long long[::1] keys = keys_arr
    for p in range(P):
        keys[p] = _key(occ, p, base, -1)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order_arr = np.argsort(keys_arr, kind="stable").astype(np.int64)
    cdef long long[::1] order = order_arr
    cdef cnp.ndarray[cnp.int64_t, ndim=1] skeys_arr = keys_arr[order_arr]
    cdef long long[::1] skeys = skeys_arr

    # upper bound on entries: diag + crystal field + 5 modes x 6 entries each
    cdef Py_ssize_t cap = 3 * P + 6 * P + P * 5 * 12
    cdef cnp.ndarray[cnp.int64_t, ndim=1] rows_arr = np.empty(cap, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cols_arr = np.empty(cap, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vals_arr = np.empty(cap, dtype=np.float64)
    cdef long long[::1] rows = rows_arr
    cdef long long[::1] cols = cols_arr
    cdef double[::1] vals = vals_arr
    cdef Py_ssize_t nnz = 0
    cdef double zpe = 0.0, e, amp, cf = -delta / 3.0
    for c in range(5):
        zpe += 0.5 * hw[c]

    # diagonal first, to match the reference ordering
    for p in range(P):
        e = zpe
        for c in range(5):
            e += hw[c] * occ[p, c]
        for a in range(3):
            rows[nnz] = 3 * p + a
            cols[nnz] = 3 * p + a
            vals[nnz] = e
            nnz += 1
    if delta != 0.0:
        for a, b in ((0, 1), (0, 2), (1, 2)):
            for p in range(P):
                rows[nnz] = 3 * p + a; cols[nnz] = 3 * p + b; vals[nnz] = cf; nnz += 1
                rows[nnz] = 3 * p + b; cols[nnz] = 3 * p + a; vals[nnz] = cf; nnz += 1

    cdef double tab[5][3][3]
    cdef int na[5]
    # (orbital a, orbital b, element) per mode, a <= b
    cdef int ta[5][3]
    cdef int tb[5][3]
    tab[0][0][0] = -0.5; ta[0][0] = 0; tb[0][0] = 0
    tab[0][1][0] = -0.5; ta[0][1] = 1; tb[0][1] = 1
    tab[0][2][0] = 1.0;  ta[0][2] = 2; tb[0][2] = 2
    na[0] = 3
    tab[1][0][0] = SQRT3_2;  ta[1][0] = 0; tb[1][0] = 0
    tab[1][1][0] = -SQRT3_2; ta[1][1] = 1; tb[1][1] = 1
    na[1] = 2
    tab[2][0][0] = 1.0; ta[2][0] = 1; tb[2][0] = 2; na[2] = 1
    tab[3][0][0] = 1.0; ta[3][0] = 0; tb[3][0] = 2; na[3] = 1
    tab[4][0][0] = 1.0; ta[4][0] = 0; tb[4][0] = 1; na[4] = 1

    cdef int ch
    cdef double t, v
    cdef Py_ssize_t src, dst
    for mode in range(5):
        if F[mode] == 0.0:
            continue
        for src in range(P):
            tot = 0
            for c in range(5):
                tot += occ[src, c]
            if tot >= cutoff:
                continue
            key = _key(occ, src, base, mode)
            lo = 0
            hi = P
            while lo < hi:
                mid = (lo + hi) >> 1
                if skeys[mid] < key:
                    lo = mid + 1
                else:
                    hi = mid
            dst = order[lo]
            amp = -F[mode] * sqrt((occ[src, mode] + 1) / 2.0)
            for ch in range(na[mode]):
                a = ta[mode][ch]
                b = tb[mode][ch]
                v = amp * tab[mode][ch][0]
                rows[nnz] = 3 * dst + a; cols[nnz] = 3 * src + b; vals[nnz] = v; nnz += 1
                rows[nnz] = 3 * src + b; cols[nnz] = 3 * dst + a; vals[nnz] = v; nnz += 1
                if a != b:
                    rows[nnz] = 3 * dst + b; cols[nnz] = 3 * src + a; vals[nnz] = v; nnz += 1
                    rows[nnz] = 3 * src + a; cols[nnz] = 3 * dst + b; vals[nnz] = v; nnz += 1
    return rows_arr[:nnz].copy(), cols_arr[:nnz].copy(), vals_arr[:nnz].copy()


def fc_overlap_table(double alpha_i, double alpha_f, double d, int n_i, int n_f):
    cdef double r = sqrt(alpha_i / alpha_f)
    cdef double p = 0.5 * (r + 1.0 / r)
    cdef double s = 0.5 * (r - 1.0 / r)
    cdef double u = sqrt(alpha_i / 2.0) * d
    cdef double v = sqrt(alpha_f / 2.0) * d
    cdef double p2 = p * p
    cdef double cm = s * v - u
    cdef double cn = v + s * u
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_arr = np.zeros((n_i, n_f))
    cdef double[:, ::1] out = out_arr
    cdef int m, n
    cdef double val, sm
    if n_i == 0 or n_f == 0:
        return out_arr
    out[0, 0] = sqrt(2.0 * sqrt(alpha_i * alpha_f) / (alpha_i + alpha_f)) * exp(
        -alpha_i * alpha_f * d * d / (2.0 * (alpha_i + alpha_f)))
    for n in range(n_f - 1):
        val = cn * out[0, n]
        if n > 0:
            val -= s * p * sqrt(<double>n) * out[0, n - 1]
        out[0, n + 1] = val / (p2 * sqrt(<double>(n + 1)))
    for m in range(n_i - 1):
        sm = sqrt(<double>(m + 1))
        for n in range(n_f):
            val = cm * out[m, n]
            if n > 0:
                val += p * sqrt(<double>n) * out[m, n - 1]
            if m > 0:
                val += s * p * sqrt(<double>m) * out[m - 1, n]
            out[m + 1, n] = val / (p2 * sm)
    return out_arr


def dipolar_sum(points_in, values_in, center_in, double r_min):
    cdef double[:, ::1] pts = np.ascontiguousarray(points_in, dtype=np.float64)
    cdef double[::1] rho = np.ascontiguousarray(values_in, dtype=np.float64).ravel()
    cdef double[::1] c = np.ascontiguousarray(center_in, dtype=np.float64)
    cdef Py_ssize_t k, N = rho.shape[0]
    cdef double x, y, z, r2, w, rmin2 = r_min * r_min
    cdef double sxx = 0, syy = 0, szz = 0, sxy = 0, sxz = 0, syz = 0, sr2 = 0
    for k in range(N):
        if rho[k] == 0.0:
            continue
        x = pts[k, 0] - c[0]
        y = pts[k, 1] - c[1]
        z = pts[k, 2] - c[2]
        r2 = x * x + y * y + z * z
        if r2 < rmin2:
            continue
        w = rho[k] / (r2 * r2 * sqrt(r2))
        sxx += w * x * x
        syy += w * y * y
        szz += w * z * z
        sxy += w * x * y
        sxz += w * x * z
        syz += w * y * z
        sr2 += w * r2
    out = np.empty((3, 3))
    out[0, 0] = 3 * sxx - sr2
    out[1, 1] = 3 * syy - sr2
    out[2, 2] = 3 * szz - sr2
    out[0, 1] = out[1, 0] = 3 * sxy
    out[0, 2] = out[2, 0] = 3 * sxz
    out[1, 2] = out[2, 1] = 3 * syz
    return out
