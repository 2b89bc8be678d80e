"""Pure-numpy kernel backend.

Reference implementations of the hot evaluation kernels: per-position
channel responses, the per-antenna placement objective and gradient, and
the backtracking line searches.  mamiso._kernels_cy provides the same
functions compiled; mamiso.kernels selects between them at import.

Path data arrives flattened across users: ``gains`` (total,) complex,
``rho`` (total, 2) direction vectors, ``offsets`` (K+1,) delimiting each
user's slice, and ``kwave`` = 2*pi/wavelength.
"""

import numpy as np


def channel_gains(points, gains, rho, offsets, kwave):
    """Channel responses h_k(t) for M positions: returns (M, K) complex."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    phased = np.exp(-1j * kwave * (points @ rho.T)) * gains
    return np.add.reduceat(phased, offsets[:-1], axis=1)


def fp_value(t, linear, quadratic, gains, rho, offsets, kwave):
    """Per-antenna placement objective sum_k 2Re{conj(h_k) c_k} - d_k |h_k|^2."""
    t = np.asarray(t, dtype=float)
    phased = gains * np.exp(-1j * kwave * (rho @ t))
    h = np.add.reduceat(phased, offsets[:-1])
    return float(np.sum(2.0 * np.real(np.conj(h) * linear) - quadratic * np.abs(h) ** 2))


def phase_weighted_grad(t, weights, gains, rho, offsets, kwave):
    """2*kwave * sum_{k,l} Im{w_k gain_l e^{-j kwave t.rho_l}} rho_l.

    Shared inner form of both placement gradients; ``weights`` is one
    complex coefficient per user.
    """
    t = np.asarray(t, dtype=float)
    phased = gains * np.exp(-1j * kwave * (rho @ t))
    w = np.repeat(weights, np.diff(offsets)) * phased
    return 2.0 * kwave * (w.imag @ rho)


def fp_grad(t, linear, quadratic, gains, rho, offsets, kwave):
    """Analytic gradient of fp_value with respect to t."""
    t = np.asarray(t, dtype=float)
    phased = gains * np.exp(-1j * kwave * (rho @ t))
    h = np.add.reduceat(phased, offsets[:-1])
    weights = np.conj(linear) - quadratic * np.conj(h)
    w = np.repeat(weights, np.diff(offsets)) * phased
    return 2.0 * kwave * (w.imag @ rho)


def _feasible(cand, positions, n, region, spacing):
    if cand[0] < 0.0 or cand[0] > region or cand[1] < 0.0 or cand[1] > region:
        return False
    d2 = np.sum((positions - cand) ** 2, axis=1)
    d2[n] = np.inf
    return bool(np.all(d2 >= spacing * spacing))


def fp_line_search(t0, step_dir, linear, quadratic, gains, rho, offsets, kwave,
                   positions, n, region, spacing, step_init, step_min):
    """Backtracking ascent step for antenna n on the local FP objective.

    Candidates t0 + u*step_dir with u halved from step_init; the first
    feasible candidate that strictly improves the objective is committed,
    and the incoming position is kept once u drops below step_min.
    Returns (position, objective, accepted).
    """
    t0 = np.asarray(t0, dtype=float)
    f0 = fp_value(t0, linear, quadratic, gains, rho, offsets, kwave)
    u = step_init
    while True:
        cand = t0 + u * step_dir
        u *= 0.5
        if _feasible(cand, positions, n, region, spacing):
            f = fp_value(cand, linear, quadratic, gains, rho, offsets, kwave)
            if f > f0:
                return cand, f, True
        if u < step_min:
            return t0, f0, False


def _neg_trace_inv(gram):
    """-tr(gram^{-1}) via Cholesky; -inf when gram is not positive definite."""
    try:
        low = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        return -np.inf
    low_inv = np.linalg.inv(low)
    return -float(np.sum(np.abs(low_inv) ** 2))


def zf_value(t, gram_minus, gains, rho, offsets, kwave):
    """-tr((H^H H)^{-1}) with antenna n moved to t.

    ``gram_minus`` is the Gram matrix of the other N-1 rows; the row at t
    contributes the rank-one update conj(r) r^T.
    """
    t = np.asarray(t, dtype=float)
    row = channel_gains(t[None, :], gains, rho, offsets, kwave)[0]
    gram = gram_minus + np.outer(np.conj(row), row)
    return _neg_trace_inv(gram)


def zf_line_search(t0, step_dir, gram_minus, gains, rho, offsets, kwave,
                   positions, n, region, spacing, step_init, step_min):
    """Backtracking ascent step for antenna n on -tr((H^H H)^{-1})."""
    t0 = np.asarray(t0, dtype=float)
    f0 = zf_value(t0, gram_minus, gains, rho, offsets, kwave)
    u = step_init
    while True:
        cand = t0 + u * step_dir
        u *= 0.5
        if _feasible(cand, positions, n, region, spacing):
            f = zf_value(cand, gram_minus, gains, rho, offsets, kwave)
            if f > f0:
                return cand, f, True
        if u < step_min:
            return t0, f0, False
