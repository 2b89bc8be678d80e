"""Fractional-programming core for sum-rate maximization.

The log-of-SINR objective is lifted into a block-concave surrogate with
two auxiliary vectors: a rate weight per user (optimal value = that
user's SINR) and a complex scalar per user (optimal value = the MMSE
receive scalar a_k / B_k).  With the auxiliaries fixed, the beamformer
update is a convex quadratic whose closed form is a ridge-regularized
solve, with the ridge multiplier pinned to the transmit power budget by
bisection on an eigendecomposition of the quadratic term.

Rates are in bits/s/Hz throughout (base-2 logs); the surrogate is the
natural-log expression scaled by 1/ln 2 so that it both matches the
sum-rate exactly at updated auxiliaries and increases monotonically
under every block update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BracketingError

LN2 = float(np.log(2.0))

# power bisection tolerances: relative power residual (half the 1e-8
# budget contract, leaving headroom for re-summation noise), bracket
# width floor
POWER_RTOL = 5e-9
WIDTH_FLOOR = 4e-16


@dataclass(frozen=True)
class BeamMatrix:
    """Transmit beamformer: one complex column per user, plus the power budget."""

    matrix: np.ndarray  # (N, K) complex
    power_budget: float  # watts

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if self.power_budget < 0:
            raise ValueError("power budget must be nonnegative")
        if self.tx_power > self.power_budget * (1.0 + 1e-9):
            raise ValueError(
                f"transmit power {self.tx_power:.6e} exceeds budget {self.power_budget:.6e}"
            )

    @property
    def tx_power(self) -> float:
        """tr(W W^H)."""
        return float(np.sum(np.abs(self.matrix) ** 2))


@dataclass(frozen=True)
class FpAuxiliaries:
    """Surrogate auxiliaries: per-user rate weights and MMSE scalars."""

    rate_weights: np.ndarray  # (K,) real, = SINR at the update point
    mmse_gains: np.ndarray    # (K,) complex, = a_k / B_k at the update point


def _as_matrix(beam) -> np.ndarray:
    if isinstance(beam, BeamMatrix):
        return beam.matrix
    return np.asarray(beam, dtype=complex)


def _check_dims(H, W, noise_power):
    H = np.asarray(H, dtype=complex)
    W = _as_matrix(W)
    if H.ndim != 2 or W.shape != H.shape:
        raise ValueError(f"H {H.shape} and W {W.shape} must be equal (N, K) matrices")
    noise = np.broadcast_to(np.asarray(noise_power, dtype=float), (H.shape[1],))
    if np.any(noise <= 0):
        raise ValueError("noise powers must be positive")
    return H, W, noise


def compute_sinr(H, W, noise_power) -> np.ndarray:
    """Per-user SINR |h_k^H w_k|^2 / (sum_{k'!=k} |h_k^H w_{k'}|^2 + noise_k)."""
    H, W, noise = _check_dims(H, W, noise_power)
    cross = np.abs(W.conj().T @ H) ** 2  # cross[i, k] = |w_i^H h_k|^2
    signal = np.diagonal(cross).copy()
    interference = cross.sum(axis=0) - signal
    return signal / (interference + noise)


def sum_rate(H, W, noise_power) -> float:
    """Sum of log2(1 + SINR_k), bits/s/Hz."""
    return float(np.sum(np.log1p(compute_sinr(H, W, noise_power))) / LN2)


def update_auxiliaries(H, W, noise_power) -> FpAuxiliaries:
    """Conditionally optimal auxiliaries for the current (H, W).

    Rate weights equal compute_sinr exactly; the MMSE scalars are
    a_k / B_k with a_k = w_k^H h_k and B_k the total received power at
    user k including noise.
    """
    H, W, noise = _check_dims(H, W, noise_power)
    sinr = compute_sinr(H, W, noise)
    cross = W.conj().T @ H
    a = np.diagonal(cross)
    b_total = noise + np.sum(np.abs(cross) ** 2, axis=0)
    return FpAuxiliaries(rate_weights=sinr, mmse_gains=a / b_total)


def fp_objective(H, W, aux: FpAuxiliaries, noise_power) -> float:
    """Surrogate objective value, bits/s/Hz.

    Equals sum_rate(H, W, noise) when the auxiliaries come from
    update_auxiliaries on the same (H, W); never exceeds it.
    """
    H, W, noise = _check_dims(H, W, noise_power)
    lam = np.asarray(aux.rate_weights, dtype=float)
    beta = np.asarray(aux.mmse_gains, dtype=complex)
    if np.any(lam <= -1.0):
        raise ValueError("rate weights must exceed -1")
    cross = W.conj().T @ H
    a = np.diagonal(cross)
    b_total = noise + np.sum(np.abs(cross) ** 2, axis=0)
    quad_part = 2.0 * np.real(np.conj(beta) * a) - np.abs(beta) ** 2 * b_total
    return float((np.sum(np.log1p(lam)) - np.sum(lam) + np.sum((1.0 + lam) * quad_part)) / LN2)


def build_quadratic_terms(H, aux: FpAuxiliaries):
    """Coefficients of the beamformer subproblem.

    Returns the Hermitian PSD matrix sum_k (1+lam_k)|beta_k|^2 h_k h_k^H
    and the (N, K) matrix with columns (1+lam_k) conj(beta_k) h_k; the
    beamformer update minimizes tr(W^H quad W) - 2 Re tr(W^H linear)
    under the power budget.
    """
    H = np.asarray(H, dtype=complex)
    lam = np.asarray(aux.rate_weights, dtype=float)
    beta = np.asarray(aux.mmse_gains, dtype=complex)
    weights = (1.0 + lam) * np.abs(beta) ** 2
    quad = (H * weights) @ H.conj().T
    quad = 0.5 * (quad + quad.conj().T)
    linear = H * ((1.0 + lam) * np.conj(beta))
    return quad, linear


def _eig_terms(quad, linear):
    """Eigenvalues of quad (clipped at 0) and row energies of Q^H linear."""
    eigvals, vecs = np.linalg.eigh(quad)
    eigvals = np.maximum(eigvals, 0.0)
    projected = vecs.conj().T @ linear
    energies = np.sum(np.abs(projected) ** 2, axis=1)
    return eigvals, energies, vecs, projected


def _power_of_mu(eigvals, energies, mu) -> float:
    """tr(linear^H (quad + mu I)^{-2} linear) in eigen-coordinates.

    At mu = 0 a pseudo-inverse is used on the null space: components with
    energy there make the power infinite (the constraint is then active).
    """
    if mu > 0.0:
        return float(np.sum(energies / (eigvals + mu) ** 2))
    scale = float(eigvals.max(initial=0.0))
    null = eigvals <= 1e-12 * scale if scale > 0.0 else np.ones_like(eigvals, dtype=bool)
    total = float(energies.sum())
    if total > 0.0 and np.any(energies[null] > 1e-12 * total):
        return np.inf
    live = ~null
    if not np.any(live):
        return 0.0
    return float(np.sum(energies[live] / eigvals[live] ** 2))


def ridge_power(quad, linear, mu) -> float:
    """Transmit power of the ridge solution (quad + mu I)^{-1} linear."""
    eigvals, energies, _, _ = _eig_terms(quad, linear)
    return _power_of_mu(eigvals, energies, mu)


def _solve_mu(eigvals, energies, power_budget) -> float:
    if _power_of_mu(eigvals, energies, 0.0) <= power_budget:
        return 0.0
    total = float(energies.sum())
    hi = np.sqrt(total / power_budget)
    for _ in range(200):
        if _power_of_mu(eigvals, energies, hi) < power_budget:
            break
        hi *= 2.0
    else:
        raise BracketingError("power curve failed to drop below the budget")
    lo = 0.0
    while True:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:  # float resolution exhausted
            return float(hi)
        power = _power_of_mu(eigvals, energies, mid)
        # land on the feasible side: power in [p(1 - rtol), p]
        if 0.0 <= power_budget - power <= POWER_RTOL * power_budget:
            return float(mid)
        if power > power_budget:
            lo = mid
        else:
            hi = mid
        if hi - lo <= WIDTH_FLOOR * hi:
            return float(hi)


def solve_ridge_multiplier(quad, linear, power_budget) -> float:
    """Smallest mu >= 0 making the ridge solution meet the power budget.

    Returns 0 when the unconstrained (pseudo-inverse) solution already
    fits; otherwise bisects the strictly decreasing power curve until the
    power residual is within POWER_RTOL of the budget.
    """
    if power_budget <= 0:
        raise ValueError("power budget must be positive")
    eigvals, energies, _, _ = _eig_terms(quad, linear)
    if float(energies.sum()) == 0.0:
        return 0.0
    return _solve_mu(eigvals, energies, power_budget)


def update_beamformer(H, aux: FpAuxiliaries, noise_power, power_budget,
                      return_multiplier: bool = False):
    """Closed-form beamformer update (quad + mu I)^{-1} linear.

    mu comes from solve_ridge_multiplier; when mu = 0 and quad is
    singular the pseudo-inverse solve is used (the linear term has no
    null-space component in that branch, so any minimum-norm solution is
    a valid minimizer).
    """
    del noise_power  # the subproblem depends on (H, aux) only
    if power_budget <= 0:
        raise ValueError("power budget must be positive")
    quad, linear = build_quadratic_terms(H, aux)
    eigvals, energies, vecs, projected = _eig_terms(quad, linear)
    mu = _solve_mu(eigvals, energies, power_budget) if float(energies.sum()) > 0.0 else 0.0
    shifted = eigvals + mu
    if mu == 0.0:
        scale = float(eigvals.max(initial=0.0))
        cutoff = 1e-12 * scale
        inv = np.where(shifted > cutoff, 1.0 / np.where(shifted > cutoff, shifted, 1.0), 0.0)
    else:
        inv = 1.0 / shifted
    weights = vecs @ (projected * inv[:, None])
    beam = BeamMatrix(matrix=weights, power_budget=power_budget)
    if return_multiplier:
        return beam, float(mu)
    return beam
