# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Signatures and results match ``_kernels_py``."""
import numpy as np

from libc.math cimport fabs


def ordered_mask(const double[:, :, ::1] paths, lower=None):
    cdef Py_ssize_t B = paths.shape[0], k = paths.shape[1], n = paths.shape[2]
    cdef Py_ssize_t b, i, j
    cdef const double[::1] low
    cdef bint has_lower = lower is not None
    cdef bint ok
    out = np.zeros(B, dtype=np.bool_)
    cdef unsigned char[::1] o = out.view(np.uint8)
    if has_lower:
        low = np.ascontiguousarray(lower, dtype=np.float64)
    with nogil:
        for b in range(B):
            ok = True
            for j in range(n):
                for i in range(k - 1):
                    if paths[b, i, j] <= paths[b, i + 1, j]:
                        ok = False
                        break
                if ok and has_lower and paths[b, k - 1, j] <= low[j]:
                    ok = False
                if not ok:
                    break
            o[b] = ok
    return out


def jammed_flags(const double[::1] points, double delta):
    cdef Py_ssize_t n = points.shape[0], i
    out = np.zeros(n, dtype=np.bool_)
    cdef unsigned char[::1] o = out.view(np.uint8)
    with nogil:
        for i in range(n - 1):
            if fabs(points[i + 1] - points[i]) <= delta:
                o[i] = 1
                o[i + 1] = 1
    return out


cdef Py_ssize_t _greedy(const double[::1] z, Py_ssize_t n, double delta,
                        Py_ssize_t[:, ::1] pairs) noexcept nogil:
    cdef Py_ssize_t i = 0, m = 0
    while i < n - 1:
        if fabs(z[i + 1] - z[i]) <= delta:
            pairs[m, 0] = i
            pairs[m, 1] = i + 1
            m += 1
            i += 2
        else:
            i += 1
    return m


def greedy_pairs(const double[::1] z, double delta):
    cdef Py_ssize_t n = z.shape[0]
    pairs = np.zeros((max(n // 2, 1), 2), dtype=np.intp)
    cdef Py_ssize_t[:, ::1] p = pairs
    cdef Py_ssize_t m
    with nogil:
        m = _greedy(z, n, delta, p)
    return pairs[:m]


def matching_violations(const double[::1] values, const Py_ssize_t[::1] offsets,
                        const double[::1] deltas):
    cdef Py_ssize_t n_cfg = offsets.shape[0] - 1, c, i, lo, hi, n, L, m, bad = 0
    cdef Py_ssize_t maxlen = 0
    cdef double d
    for c in range(n_cfg):
        if offsets[c + 1] - offsets[c] > maxlen:
            maxlen = offsets[c + 1] - offsets[c]
    zbuf = np.empty(max(maxlen, 1), dtype=np.float64)
    pbuf = np.empty((max(maxlen // 2, 1), 2), dtype=np.intp)
    cdef double[::1] z = zbuf
    cdef Py_ssize_t[:, ::1] p = pbuf
    with nogil:
        for c in range(n_cfg):
            lo = offsets[c]
            hi = offsets[c + 1]
            n = hi - lo
            d = deltas[c]
            L = 0
            for i in range(n):
                if (i > 0 and fabs(values[lo + i] - values[lo + i - 1]) <= d) or \
                   (i < n - 1 and fabs(values[lo + i + 1] - values[lo + i]) <= d):
                    z[L] = values[lo + i]
                    L += 1
            m = _greedy(z, L, d, p)
            if m < L // 3:
                bad += 1
    return bad


def lag_sup(const double[:, ::1] values, const double[::1] drift,
            const double[::1] inv_norm):
    cdef Py_ssize_t M = values.shape[0], N = values.shape[1], r, i, j
    cdef double best, x, dr
    out = np.zeros(M, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for r in range(M):
            best = 0.0
            dr = drift[r]
            for i in range(N - 1):
                for j in range(i + 1, N):
                    x = fabs(values[r, j] - values[r, i] - dr * (j - i)) * inv_norm[j - i]
                    if x > best:
                        best = x
            o[r] = best
    return out
