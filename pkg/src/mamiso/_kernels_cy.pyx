# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel backend.

Same contracts as mamiso._kernels_np; sequential C loops instead of
vectorized numpy, so results can differ from the fallback at the level
of float summation-order noise.
"""

import numpy as np

from libc.math cimport INFINITY, cos, sin, sqrt


cdef inline double _im_product(double ur, double ui, double vr, double vi) nogil:
    # Im{(ur + j ui)(vr + j vi)}
    return ur * vi + ui * vr


cdef void _responses(double tx, double ty, double complex[::1] gains, double[:, ::1] rho,
                     Py_ssize_t[::1] offsets, double kwave, double complex[::1] out) nogil:
    cdef Py_ssize_t k, l
    cdef double ph, c, s, gr, gi, hr, hi
    for k in range(offsets.shape[0] - 1):
        hr = 0.0
        hi = 0.0
        for l in range(offsets[k], offsets[k + 1]):
            ph = kwave * (tx * rho[l, 0] + ty * rho[l, 1])
            c = cos(ph)
            s = sin(ph)
            gr = gains[l].real
            gi = gains[l].imag
            hr += gr * c + gi * s
            hi += gi * c - gr * s
        out[k] = hr + 1j * hi


cdef double _fp_value(double tx, double ty, double complex[::1] linear, double[::1] quadratic,
                      double complex[::1] gains, double[:, ::1] rho,
                      Py_ssize_t[::1] offsets, double kwave) nogil:
    cdef Py_ssize_t k, l
    cdef double ph, c, s, gr, gi, hr, hi, total = 0.0
    for k in range(offsets.shape[0] - 1):
        hr = 0.0
        hi = 0.0
        for l in range(offsets[k], offsets[k + 1]):
            ph = kwave * (tx * rho[l, 0] + ty * rho[l, 1])
            c = cos(ph)
            s = sin(ph)
            gr = gains[l].real
            gi = gains[l].imag
            hr += gr * c + gi * s
            hi += gi * c - gr * s
        total += 2.0 * (hr * linear[k].real + hi * linear[k].imag) \
            - quadratic[k] * (hr * hr + hi * hi)
    return total


cdef void _weighted_grad(double tx, double ty, double complex[::1] weights,
                         double complex[::1] gains, double[:, ::1] rho,
                         Py_ssize_t[::1] offsets, double kwave, double* gx, double* gy) nogil:
    cdef Py_ssize_t k, l
    cdef double ph, c, s, gr, gi, vr, vi, im, sx = 0.0, sy = 0.0
    for k in range(offsets.shape[0] - 1):
        for l in range(offsets[k], offsets[k + 1]):
            ph = kwave * (tx * rho[l, 0] + ty * rho[l, 1])
            c = cos(ph)
            s = sin(ph)
            gr = gains[l].real
            gi = gains[l].imag
            vr = gr * c + gi * s
            vi = gi * c - gr * s
            im = _im_product(weights[k].real, weights[k].imag, vr, vi)
            sx += im * rho[l, 0]
            sy += im * rho[l, 1]
    gx[0] = 2.0 * kwave * sx
    gy[0] = 2.0 * kwave * sy


cdef void _fp_grad(double tx, double ty, double complex[::1] linear, double[::1] quadratic,
                   double complex[::1] gains, double[:, ::1] rho,
                   Py_ssize_t[::1] offsets, double kwave, double* gx, double* gy) nogil:
    cdef Py_ssize_t k, l
    cdef double ph, c, s, gr, gi, hr, hi, ur, ui, vr, vi, im, sx = 0.0, sy = 0.0
    for k in range(offsets.shape[0] - 1):
        hr = 0.0
        hi = 0.0
        for l in range(offsets[k], offsets[k + 1]):
            ph = kwave * (tx * rho[l, 0] + ty * rho[l, 1])
            c = cos(ph)
            s = sin(ph)
            gr = gains[l].real
            gi = gains[l].imag
            hr += gr * c + gi * s
            hi += gi * c - gr * s
        # weight = conj(linear_k) - quadratic_k * conj(h_k)
        ur = linear[k].real - quadratic[k] * hr
        ui = quadratic[k] * hi - linear[k].imag
        for l in range(offsets[k], offsets[k + 1]):
            ph = kwave * (tx * rho[l, 0] + ty * rho[l, 1])
            c = cos(ph)
            s = sin(ph)
            gr = gains[l].real
            gi = gains[l].imag
            vr = gr * c + gi * s
            vi = gi * c - gr * s
            im = _im_product(ur, ui, vr, vi)
            sx += im * rho[l, 0]
            sy += im * rho[l, 1]
    gx[0] = 2.0 * kwave * sx
    gy[0] = 2.0 * kwave * sy


cdef bint _feasible(double tx, double ty, double[:, ::1] positions, Py_ssize_t n,
                    double region, double spacing) nogil:
    cdef Py_ssize_t i
    cdef double dx, dy, s2 = spacing * spacing
    if tx < 0.0 or tx > region or ty < 0.0 or ty > region:
        return False
    for i in range(positions.shape[0]):
        if i == n:
            continue
        dx = positions[i, 0] - tx
        dy = positions[i, 1] - ty
        if dx * dx + dy * dy < s2:
            return False
    return True


cdef double _trace_inv(double complex[:, ::1] work, double complex[::1] col,
                       Py_ssize_t K) nogil:
    """In-place Cholesky of work, then tr(inv) = ||L^{-1}||_F^2; INFINITY if not PD."""
    cdef Py_ssize_t i, j, m
    cdef double complex acc
    cdef double pivot, total = 0.0
    for j in range(K):
        acc = work[j, j]
        for m in range(j):
            acc = acc - work[j, m] * work[j, m].conjugate()
        pivot = acc.real
        if pivot <= 0.0:
            return INFINITY
        pivot = sqrt(pivot)
        work[j, j] = pivot
        for i in range(j + 1, K):
            acc = work[i, j]
            for m in range(j):
                acc = acc - work[i, m] * work[j, m].conjugate()
            work[i, j] = acc / pivot
    for j in range(K):
        for i in range(j, K):
            if i == j:
                acc = 1.0
            else:
                acc = 0.0
            for m in range(j, i):
                acc = acc - work[i, m] * col[m]
            col[i] = acc / work[i, i].real
            total += col[i].real * col[i].real + col[i].imag * col[i].imag
    return total


cdef double _zf_value(double tx, double ty, double complex[:, ::1] gram_minus,
                      double complex[::1] gains, double[:, ::1] rho,
                      Py_ssize_t[::1] offsets, double kwave,
                      double complex[::1] row, double complex[:, ::1] work,
                      double complex[::1] col) nogil:
    cdef Py_ssize_t K = offsets.shape[0] - 1, i, j
    cdef double t
    _responses(tx, ty, gains, rho, offsets, kwave, row)
    for i in range(K):
        for j in range(K):
            work[i, j] = gram_minus[i, j] + row[i].conjugate() * row[j]
    t = _trace_inv(work, col, K)
    return -t


# ---------------------------------------------------------------------------
# python-visible wrappers

def channel_gains(points, gains, rho, offsets, kwave):
    """Channel responses h_k(t) for M positions: returns (M, K) complex."""
    pts = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
    cdef double[:, ::1] pview = pts
    cdef double complex[::1] gview = np.ascontiguousarray(gains, dtype=np.complex128)
    cdef double[:, ::1] rview = np.ascontiguousarray(rho, dtype=np.float64)
    cdef Py_ssize_t[::1] oview = np.ascontiguousarray(offsets, dtype=np.intp)
    cdef double kw = kwave
    cdef Py_ssize_t m
    out = np.empty((pts.shape[0], oview.shape[0] - 1), dtype=np.complex128)
    cdef double complex[:, ::1] oview2 = out
    with nogil:
        for m in range(pview.shape[0]):
            _responses(pview[m, 0], pview[m, 1], gview, rview, oview, kw, oview2[m])
    return out


def fp_value(t, linear, quadratic, gains, rho, offsets, kwave):
    """Per-antenna placement objective sum_k 2Re{conj(h_k) c_k} - d_k |h_k|^2."""
    cdef double complex[::1] lv = np.ascontiguousarray(linear, dtype=np.complex128)
    cdef double[::1] qv = np.ascontiguousarray(quadratic, dtype=np.float64)
    cdef double complex[::1] gv = np.ascontiguousarray(gains, dtype=np.complex128)
    cdef double[:, ::1] rv = np.ascontiguousarray(rho, dtype=np.float64)
    cdef Py_ssize_t[::1] ov = np.ascontiguousarray(offsets, dtype=np.intp)
    cdef double tx = t[0], ty = t[1], kw = kwave, res
    with nogil:
        res = _fp_value(tx, ty, lv, qv, gv, rv, ov, kw)
    return res


def fp_grad(t, linear, quadratic, gains, rho, offsets, kwave):
    """Analytic gradient of fp_value with respect to t."""
    cdef double complex[::1] lv = np.ascontiguousarray(linear, dtype=np.complex128)
    cdef double[::1] qv = np.ascontiguousarray(quadratic, dtype=np.float64)
    cdef double complex[::1] gv = np.ascontiguousarray(gains, dtype=np.complex128)
    cdef double[:, ::1] rv = np.ascontiguousarray(rho, dtype=np.float64)
    cdef Py_ssize_t[::1] ov = np.ascontiguousarray(offsets, dtype=np.intp)
    cdef double tx = t[0], ty = t[1], kw = kwave, gx = 0.0, gy = 0.0
    with nogil:
        _fp_grad(tx, ty, lv, qv, gv, rv, ov, kw, &gx, &gy)
    return np.array([gx, gy])


def phase_weighted_grad(t, weights, gains, rho, offsets, kwave):
    """2*kwave * sum_{k,l} Im{w_k gain_l e^{-j kwave t.rho_l}} rho_l."""
    cdef double complex[::1] wv = np.ascontiguousarray(weights, dtype=np.complex128)
    cdef double complex[::1] gv = np.ascontiguousarray(gains, dtype=np.complex128)
    cdef double[:, ::1] rv = np.ascontiguousarray(rho, dtype=np.float64)
    cdef Py_ssize_t[::1] ov = np.ascontiguousarray(offsets, dtype=np.intp)
    cdef double tx = t[0], ty = t[1], kw = kwave, gx = 0.0, gy = 0.0
    with nogil:
        _weighted_grad(tx, ty, wv, gv, rv, ov, kw, &gx, &gy)
    return np.array([gx, gy])


def fp_line_search(t0, step_dir, linear, quadratic, gains, rho, offsets, kwave,
                   positions, n, region, spacing, step_init, step_min):
    """Backtracking ascent step for antenna n on the local FP objective.

    Returns (position, objective, accepted); see the numpy backend for
    the step-halving and feasibility contract.
    """
    cdef double complex[::1] lv = np.ascontiguousarray(linear, dtype=np.complex128)
    cdef double[::1] qv = np.ascontiguousarray(quadratic, dtype=np.float64)
    cdef double complex[::1] gv = np.ascontiguousarray(gains, dtype=np.complex128)
    cdef double[:, ::1] rv = np.ascontiguousarray(rho, dtype=np.float64)
    cdef Py_ssize_t[::1] ov = np.ascontiguousarray(offsets, dtype=np.intp)
    cdef double[:, ::1] pv = np.ascontiguousarray(positions, dtype=np.float64)
    cdef Py_ssize_t idx = n
    cdef double tx0 = t0[0], ty0 = t0[1], gx = step_dir[0], gy = step_dir[1]
    cdef double reg = region, sp = spacing, u = step_init, umin = step_min
    cdef double kw = kwave, f0, f = 0.0, cx = 0.0, cy = 0.0
    cdef bint accepted = False
    with nogil:
        f0 = _fp_value(tx0, ty0, lv, qv, gv, rv, ov, kw)
        while True:
            cx = tx0 + u * gx
            cy = ty0 + u * gy
            u *= 0.5
            if _feasible(cx, cy, pv, idx, reg, sp):
                f = _fp_value(cx, cy, lv, qv, gv, rv, ov, kw)
                if f > f0:
                    accepted = True
                    break
            if u < umin:
                break
    if accepted:
        return np.array([cx, cy]), f, True
    return np.array([tx0, ty0]), f0, False


def zf_value(t, gram_minus, gains, rho, offsets, kwave):
    """-tr((H^H H)^{-1}) with antenna n moved to t; -inf if not invertible."""
    cdef double complex[:, ::1] gm = np.ascontiguousarray(gram_minus, dtype=np.complex128)
    cdef double complex[::1] gv = np.ascontiguousarray(gains, dtype=np.complex128)
    cdef double[:, ::1] rv = np.ascontiguousarray(rho, dtype=np.float64)
    cdef Py_ssize_t[::1] ov = np.ascontiguousarray(offsets, dtype=np.intp)
    cdef Py_ssize_t K = ov.shape[0] - 1
    row = np.empty(K, dtype=np.complex128)
    work = np.empty((K, K), dtype=np.complex128)
    col = np.empty(K, dtype=np.complex128)
    cdef double complex[::1] rowv = row
    cdef double complex[:, ::1] workv = work
    cdef double complex[::1] colv = col
    cdef double tx = t[0], ty = t[1], kw = kwave, res
    with nogil:
        res = _zf_value(tx, ty, gm, gv, rv, ov, kw, rowv, workv, colv)
    return res


def zf_line_search(t0, step_dir, gram_minus, gains, rho, offsets, kwave,
                   positions, n, region, spacing, step_init, step_min):
    """Backtracking ascent step for antenna n on -tr((H^H H)^{-1})."""
    cdef double complex[:, ::1] gm = np.ascontiguousarray(gram_minus, dtype=np.complex128)
    cdef double complex[::1] gv = np.ascontiguousarray(gains, dtype=np.complex128)
    cdef double[:, ::1] rv = np.ascontiguousarray(rho, dtype=np.float64)
    cdef Py_ssize_t[::1] ov = np.ascontiguousarray(offsets, dtype=np.intp)
    cdef double[:, ::1] pv = np.ascontiguousarray(positions, dtype=np.float64)
    cdef Py_ssize_t idx = n, K = ov.shape[0] - 1
    row = np.empty(K, dtype=np.complex128)
    work = np.empty((K, K), dtype=np.complex128)
    col = np.empty(K, dtype=np.complex128)
    cdef double complex[::1] rowv = row
    cdef double complex[:, ::1] workv = work
    cdef double complex[::1] colv = col
    cdef double tx0 = t0[0], ty0 = t0[1], gx = step_dir[0], gy = step_dir[1]
    cdef double reg = region, sp = spacing, u = step_init, umin = step_min
    cdef double kw = kwave, f0, f = 0.0, cx = 0.0, cy = 0.0
    cdef bint accepted = False
    with nogil:
        f0 = _zf_value(tx0, ty0, gm, gv, rv, ov, kw, rowv, workv, colv)
        while True:
            cx = tx0 + u * gx
            cy = ty0 + u * gy
            u *= 0.5
            if _feasible(cx, cy, pv, idx, reg, sp):
                f = _zf_value(cx, cy, gm, gv, rv, ov, kw, rowv, workv, colv)
                if f > f0:
                    accepted = True
                    break
            if u < umin:
                break
    if accepted:
        return np.array([cx, cy]), f, True
    return np.array([tx0, ty0]), f0, False
