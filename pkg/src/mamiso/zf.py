"""Zero-forcing beamformer and its closed-form sum-rate."""

from __future__ import annotations

import numpy as np

from .errors import SingularGramError
from .fp import LN2, BeamMatrix

COND_LIMIT = 1e12


def _gram_trace_inv(H):
    """(gram, tr(gram^{-1})) with a condition-number guard.

    A loud failure on an ill-conditioned Gram matrix beats silently
    reporting a garbage rate; random continuous channels are almost
    surely well inside the guard.
    """
    H = np.asarray(H, dtype=complex)
    n, k = H.shape
    if n < k:
        raise ValueError(f"zero-forcing needs at least as many antennas as users ({n} < {k})")
    gram = H.conj().T @ H
    gram = 0.5 * (gram + gram.conj().T)
    if np.linalg.cond(gram) > COND_LIMIT:
        raise SingularGramError("channel Gram matrix is singular or near-singular")
    gram_inv = np.linalg.inv(gram)
    return gram, gram_inv, float(np.trace(gram_inv).real)


def zf_beamformer(H, power_budget: float) -> BeamMatrix:
    """sqrt(p / tr((H^H H)^{-1})) * H (H^H H)^{-1}.

    Nulls all inter-user interference (H^H W is a scaled identity) and
    transmits exactly the power budget.
    """
    if power_budget < 0:
        raise ValueError("power budget must be nonnegative")
    H = np.asarray(H, dtype=complex)
    _, gram_inv, trace_inv = _gram_trace_inv(H)
    weights = np.sqrt(power_budget / trace_inv) * (H @ gram_inv)
    return BeamMatrix(matrix=weights, power_budget=power_budget)


def zf_sum_rate(H, power_budget: float, noise_power) -> float:
    """sum_k log2(1 + p / noise_k / tr((H^H H)^{-1})), bits/s/Hz.

    Algebraically identical to the generic sum-rate of zf_beamformer's
    output: every user sees signal power p / tr((H^H H)^{-1}) and zero
    interference.
    """
    if power_budget < 0:
        raise ValueError("power budget must be nonnegative")
    H = np.asarray(H, dtype=complex)
    noise = np.broadcast_to(np.asarray(noise_power, dtype=float), (H.shape[1],))
    if np.any(noise <= 0):
        raise ValueError("noise powers must be positive")
    _, _, trace_inv = _gram_trace_inv(H)
    snr = power_budget / (noise * trace_inv)
    return float(np.sum(np.log1p(snr)) / LN2)
