# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pairwise log-scale scan kernels.

Semantics are documented once in _pure.py; the two backends are
interchangeable and cross-checked in tests/test_kernels.py.  Pair
differences are iterated (never individual orbits), which is exact for
lattice-preserving matrices and numerically stable.  The 2-D case (the
common one) has a fully unrolled scan.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

NOT_ON_LEAF = -32768

BACKEND = "compiled"

cdef short _NOL = -32768
cdef int _MAXD = 16


cdef inline double _wrap1(double v) nogil:
    # round-to-nearest via truncating cast; much faster than llround
    if v >= 0.5:
        v -= <double><long long>(v + 0.5)
    elif v < -0.5:
        v -= <double><long long>(v - 0.5)
    return v


# ---------------------------------------------------------------------------
# 2-D specialization


cdef short _scan_one_sided_2(double a00, double a01, double a10, double a11,
                             double b00, double b01, double b10, double b11,
                             double dx, double dy, double eps2,
                             int n_max) nogil:
    cdef double x = dx, y = dy, t
    cdef int k, worst = -1
    if x * x + y * y > eps2:
        worst = 0
    for k in range(1, n_max + 1):
        t = _wrap1(a00 * x + a01 * y)
        y = _wrap1(a10 * x + a11 * y)
        x = t
        if x * x + y * y > eps2:
            worst = k
    if worst == n_max:
        return _NOL
    if worst >= 0:
        return <short>(-worst - 1)
    x = dx
    y = dy
    for k in range(1, n_max + 1):
        t = _wrap1(b00 * x + b01 * y)
        y = _wrap1(b10 * x + b11 * y)
        x = t
        if x * x + y * y > eps2:
            return <short>(k - 1)
    return <short>n_max


cdef short _scan_standard_2(double a00, double a01, double a10, double a11,
                            double b00, double b01, double b10, double b11,
                            double dx, double dy, double eps2,
                            int n_max) nogil:
    cdef double fx = dx, fy = dy, bx = dx, by = dy, t
    cdef int r
    if fx * fx + fy * fy > eps2:
        return -1
    for r in range(1, n_max + 1):
        t = _wrap1(a00 * fx + a01 * fy)
        fy = _wrap1(a10 * fx + a11 * fy)
        fx = t
        t = _wrap1(b00 * bx + b01 * by)
        by = _wrap1(b10 * bx + b11 * by)
        bx = t
        if fx * fx + fy * fy > eps2 or bx * bx + by * by > eps2:
            return <short>(r - 1)
    return <short>n_max


# ---------------------------------------------------------------------------
# 4-D specialization


cdef inline void _step4(const double* m, double* v) nogil:
    cdef double r0, r1, r2, r3
    r0 = m[0] * v[0] + m[1] * v[1] + m[2] * v[2] + m[3] * v[3]
    r1 = m[4] * v[0] + m[5] * v[1] + m[6] * v[2] + m[7] * v[3]
    r2 = m[8] * v[0] + m[9] * v[1] + m[10] * v[2] + m[11] * v[3]
    r3 = m[12] * v[0] + m[13] * v[1] + m[14] * v[2] + m[15] * v[3]
    v[0] = _wrap1(r0)
    v[1] = _wrap1(r1)
    v[2] = _wrap1(r2)
    v[3] = _wrap1(r3)


cdef inline double _norm24(double* v) nogil:
    return v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]


cdef short _scan_one_sided_4(const double* tail, const double* lead,
                             double* delta0, double eps2, int n_max) nogil:
    cdef double cur[4]
    cdef int k, c, worst = -1
    for c in range(4):
        cur[c] = delta0[c]
    if _norm24(cur) > eps2:
        worst = 0
    for k in range(1, n_max + 1):
        _step4(tail, cur)
        if _norm24(cur) > eps2:
            worst = k
    if worst == n_max:
        return _NOL
    if worst >= 0:
        return <short>(-worst - 1)
    for c in range(4):
        cur[c] = delta0[c]
    for k in range(1, n_max + 1):
        _step4(lead, cur)
        if _norm24(cur) > eps2:
            return <short>(k - 1)
    return <short>n_max


cdef short _scan_standard_4(const double* a, const double* b,
                            double* delta0, double eps2, int n_max) nogil:
    cdef double fwd[4]
    cdef double bwd[4]
    cdef int r, c
    for c in range(4):
        fwd[c] = delta0[c]
        bwd[c] = delta0[c]
    if _norm24(fwd) > eps2:
        return -1
    for r in range(1, n_max + 1):
        _step4(a, fwd)
        _step4(b, bwd)
        if _norm24(fwd) > eps2 or _norm24(bwd) > eps2:
            return <short>(r - 1)
    return <short>n_max


# ---------------------------------------------------------------------------
# generic dimension


cdef inline void _step(const double[:, ::1] m, double* src, double* dst,
                       Py_ssize_t d) nogil:
    cdef Py_ssize_t r, c
    cdef double acc
    for r in range(d):
        acc = 0.0
        for c in range(d):
            acc += m[r, c] * src[c]
        dst[r] = _wrap1(acc)


cdef inline double _norm2(double* v, Py_ssize_t d) nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t c
    for c in range(d):
        acc += v[c] * v[c]
    return acc


cdef short _scan_one_sided(const double[:, ::1] tail, const double[:, ::1] lead,
                           double* delta0, double eps2, int n_max,
                           Py_ssize_t d) nogil:
    cdef double cur[16]
    cdef double nxt[16]
    cdef Py_ssize_t c
    cdef int k, worst = -1
    for c in range(d):
        cur[c] = delta0[c]
    if _norm2(cur, d) > eps2:
        worst = 0
    for k in range(1, n_max + 1):
        _step(tail, cur, nxt, d)
        for c in range(d):
            cur[c] = nxt[c]
        if _norm2(cur, d) > eps2:
            worst = k
    if worst == n_max:
        return _NOL
    if worst >= 0:
        return <short>(-worst - 1)
    for c in range(d):
        cur[c] = delta0[c]
    for k in range(1, n_max + 1):
        _step(lead, cur, nxt, d)
        for c in range(d):
            cur[c] = nxt[c]
        if _norm2(cur, d) > eps2:
            return <short>(k - 1)
    return <short>n_max


cdef short _scan_standard(const double[:, ::1] a, const double[:, ::1] b,
                          double* delta0, double eps2, int n_max,
                          Py_ssize_t d) nogil:
    cdef double fwd[16]
    cdef double bwd[16]
    cdef double tmp[16]
    cdef Py_ssize_t c
    cdef int r
    for c in range(d):
        fwd[c] = delta0[c]
        bwd[c] = delta0[c]
    if _norm2(fwd, d) > eps2:
        return -1
    for r in range(1, n_max + 1):
        _step(a, fwd, tmp, d)
        for c in range(d):
            fwd[c] = tmp[c]
        _step(b, bwd, tmp, d)
        for c in range(d):
            bwd[c] = tmp[c]
        if _norm2(fwd, d) > eps2 or _norm2(bwd, d) > eps2:
            return <short>(r - 1)
    return <short>n_max


cdef short _scan_pair(const double[:, ::1] a, const double[:, ::1] b,
                      const double[:, ::1] pts, Py_ssize_t i, Py_ssize_t j,
                      double eps2, int side, int n_max, Py_ssize_t d) nogil:
    cdef double delta0[16]
    cdef double am[16]
    cdef double bm[16]
    cdef Py_ssize_t c, r
    for c in range(d):
        delta0[c] = _wrap1(pts[i, c] - pts[j, c])
    if d == 2:
        if side == 1:
            return _scan_one_sided_2(a[0, 0], a[0, 1], a[1, 0], a[1, 1],
                                     b[0, 0], b[0, 1], b[1, 0], b[1, 1],
                                     delta0[0], delta0[1], eps2, n_max)
        if side == -1:
            return _scan_one_sided_2(b[0, 0], b[0, 1], b[1, 0], b[1, 1],
                                     a[0, 0], a[0, 1], a[1, 0], a[1, 1],
                                     delta0[0], delta0[1], eps2, n_max)
        return _scan_standard_2(a[0, 0], a[0, 1], a[1, 0], a[1, 1],
                                b[0, 0], b[0, 1], b[1, 0], b[1, 1],
                                delta0[0], delta0[1], eps2, n_max)
    if d == 4:
        for r in range(4):
            for c in range(4):
                am[4 * r + c] = a[r, c]
                bm[4 * r + c] = b[r, c]
        if side == 1:
            return _scan_one_sided_4(am, bm, delta0, eps2, n_max)
        if side == -1:
            return _scan_one_sided_4(bm, am, delta0, eps2, n_max)
        return _scan_standard_4(am, bm, delta0, eps2, n_max)
    if side == 1:
        return _scan_one_sided(a, b, delta0, eps2, n_max, d)
    if side == -1:
        return _scan_one_sided(b, a, delta0, eps2, n_max, d)
    return _scan_standard(a, b, delta0, eps2, n_max, d)


def ell_matrix(points, m_fwd, m_bwd, eps0, side, n_max):
    """Pairwise log-scale readings; see _pure.ell_matrix."""
    cdef double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef double[:, ::1] a = np.ascontiguousarray(m_fwd, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(m_bwd, dtype=np.float64)
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t d = pts.shape[1]
    if d > _MAXD:
        raise ValueError(f"dimension {d} exceeds the kernel limit {_MAXD}")
    cdef double eps2 = float(eps0) * float(eps0)
    cdef int side_c = int(side)
    cdef int n_max_c = int(n_max)
    out_arr = np.empty((n, n), dtype=np.int16)
    cdef short[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef short v
    with nogil:
        for i in range(n):
            out[i, i] = <short>n_max_c
            for j in range(i + 1, n):
                v = _scan_pair(a, b, pts, i, j, eps2, side_c, n_max_c, d)
                out[i, j] = v
                out[j, i] = v
    return out_arr


def ell_pairs(points, m_fwd, m_bwd, ii, jj, eps0, side, n_max):
    """Log-scale readings for an explicit pair list; see _pure.ell_pairs."""
    cdef double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef double[:, ::1] a = np.ascontiguousarray(m_fwd, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(m_bwd, dtype=np.float64)
    cdef Py_ssize_t d = pts.shape[1]
    if d > _MAXD:
        raise ValueError(f"dimension {d} exceeds the kernel limit {_MAXD}")
    cdef double eps2 = float(eps0) * float(eps0)
    cdef int side_c = int(side)
    cdef int n_max_c = int(n_max)
    cdef Py_ssize_t[::1] iv = np.ascontiguousarray(ii, dtype=np.intp)
    cdef Py_ssize_t[::1] jv = np.ascontiguousarray(jj, dtype=np.intp)
    cdef Py_ssize_t p = iv.shape[0]
    out_arr = np.empty(p, dtype=np.int16)
    cdef short[::1] out = out_arr
    cdef Py_ssize_t q
    with nogil:
        for q in range(p):
            out[q] = _scan_pair(a, b, pts, iv[q], jv[q], eps2, side_c, n_max_c, d)
    return out_arr
