import numpy as np
import pytest

from mamiso import (BeamMatrix, FpAuxiliaries, build_quadratic_terms, compute_sinr,
                    fp_objective, ridge_power, solve_ridge_multiplier, sum_rate,
                    update_auxiliaries, update_beamformer)
from mamiso.fp import LN2
from conftest import rand_channel


def sinr_oracle(H, W, noise):
    """Scalar double-loop re-evaluation of the SINR definition."""
    n, k = H.shape
    out = np.zeros(k)
    for i in range(k):
        signal = abs(np.vdot(W[:, i], H[:, i])) ** 2
        interference = 0.0
        for j in range(k):
            if j != i:
                interference += abs(np.vdot(W[:, j], H[:, i])) ** 2
        out[i] = signal / (interference + noise[i])
    return out


class TestComputeSinr:
    def test_single_user(self):
        rng = np.random.default_rng(0)
        H = rand_channel(rng, 4, 1)
        W = rand_channel(rng, 4, 1)
        expected = abs(np.vdot(W[:, 0], H[:, 0])) ** 2 / 2.5
        assert compute_sinr(H, W, [2.5])[0] == pytest.approx(expected, rel=1e-12)

    def test_interference_free(self):
        # orthogonal channels and per-user beams: cross terms are exactly zero
        H = np.eye(4, dtype=complex)[:, :3]
        W = H * np.array([2.0, 0.5, 1.5])
        noise = np.array([1.0, 2.0, 0.5])
        expected = np.array([4.0, 0.25, 2.25]) / noise
        np.testing.assert_allclose(compute_sinr(H, W, noise), expected, rtol=1e-14)

    def test_double_loop_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            H = rand_channel(rng, 4, 3)
            W = rand_channel(rng, 4, 3)
            noise = rng.uniform(0.1, 2.0, 3)
            np.testing.assert_allclose(compute_sinr(H, W, noise),
                                       sinr_oracle(H, W, noise), rtol=1e-12)

    def test_nonnegative(self):
        rng = np.random.default_rng(2)
        H = rand_channel(rng, 5, 4)
        W = rand_channel(rng, 5, 4)
        assert np.all(compute_sinr(H, W, np.ones(4)) >= 0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            compute_sinr(np.zeros((3, 2), complex), np.zeros((3, 3), complex), np.ones(2))

    def test_bad_noise(self):
        with pytest.raises(ValueError):
            compute_sinr(np.zeros((3, 2), complex), np.zeros((3, 2), complex), [1.0, 0.0])


class TestSumRate:
    def test_zero_beamformer(self):
        H = rand_channel(np.random.default_rng(3), 4, 2)
        assert sum_rate(H, np.zeros_like(H), np.ones(2)) == 0.0

    def test_unit_sinr_four_users(self):
        H = np.eye(4, dtype=complex)
        W = np.eye(4, dtype=complex)  # per-user SNR 1 at unit noise
        assert sum_rate(H, W, np.ones(4)) == pytest.approx(4.0, abs=1e-12)

    def test_compose_with_oracle(self):
        rng = np.random.default_rng(4)
        H = rand_channel(rng, 4, 3)
        W = rand_channel(rng, 4, 3)
        noise = rng.uniform(0.5, 1.5, 3)
        expected = np.sum(np.log2(1.0 + sinr_oracle(H, W, noise)))
        assert sum_rate(H, W, noise) == pytest.approx(expected, rel=1e-12)


class TestAuxiliaries:
    def test_rate_weights_equal_sinr_exactly(self):
        rng = np.random.default_rng(5)
        H = rand_channel(rng, 4, 3)
        W = rand_channel(rng, 4, 3)
        noise = rng.uniform(0.5, 1.5, 3)
        aux = update_auxiliaries(H, W, noise)
        np.testing.assert_array_equal(aux.rate_weights, compute_sinr(H, W, noise))

    def test_single_user_collinear(self):
        h = np.array([1.0, 2.0, -1.0], dtype=complex)[:, None]
        w = 0.3 * h
        a = np.vdot(w, h)  # real here
        noise = 1.7
        aux = update_auxiliaries(h, w, [noise])
        assert aux.mmse_gains[0] == pytest.approx(a / (noise + abs(a) ** 2), rel=1e-12)

    def test_zero_beamformer(self):
        H = rand_channel(np.random.default_rng(6), 3, 2)
        aux = update_auxiliaries(H, np.zeros_like(H), np.ones(2))
        np.testing.assert_array_equal(aux.rate_weights, np.zeros(2))
        np.testing.assert_array_equal(aux.mmse_gains, np.zeros(2))


def objective_oracle(H, W, lam, beta, noise):
    """Term-by-term evaluation of the documented surrogate expression."""
    total = float(np.sum(np.log2(1.0 + lam)))
    rest = -float(np.sum(lam))
    for k in range(H.shape[1]):
        a = np.vdot(W[:, k], H[:, k])
        b_total = noise[k]
        for i in range(H.shape[1]):
            b_total += abs(np.vdot(W[:, i], H[:, k])) ** 2
        q = 2 * np.real(np.conj(beta[k]) * a) - abs(beta[k]) ** 2 * b_total
        rest += (1 + lam[k]) * q
    return total + rest / LN2


class TestFpObjective:
    def test_tightness(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n, k = rng.integers(1, 6), rng.integers(1, 5)
            H = rand_channel(rng, n, k)
            W = rand_channel(rng, n, k)
            noise = rng.uniform(0.2, 2.0, k)
            aux = update_auxiliaries(H, W, noise)
            rate = sum_rate(H, W, noise)
            assert abs(fp_objective(H, W, aux, noise) - rate) <= 1e-9 * (1 + abs(rate))

    def test_zero_beamformer_nonpositive(self):
        rng = np.random.default_rng(8)
        H = rand_channel(rng, 3, 2)
        lam = rng.uniform(0.0, 5.0, 2)
        aux = FpAuxiliaries(rate_weights=lam, mmse_gains=np.zeros(2, complex))
        value = fp_objective(H, np.zeros_like(H), aux, np.ones(2))
        expected = np.sum(np.log2(1 + lam)) - np.sum(lam) / LN2
        assert value == pytest.approx(expected, rel=1e-12)
        assert value <= 1e-12

    def test_term_by_term_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            H = rand_channel(rng, 4, 3)
            W = rand_channel(rng, 4, 3)
            noise = rng.uniform(0.2, 2.0, 3)
            lam = rng.uniform(0.0, 4.0, 3)
            beta = (rng.standard_normal(3) + 1j * rng.standard_normal(3)) * 0.3
            aux = FpAuxiliaries(rate_weights=lam, mmse_gains=beta)
            ref = objective_oracle(H, W, lam, beta, noise)
            assert fp_objective(H, W, aux, noise) == pytest.approx(ref, rel=1e-10)

    def test_invalid_rate_weight(self):
        H = rand_channel(np.random.default_rng(10), 3, 2)
        aux = FpAuxiliaries(rate_weights=np.array([-1.5, 0.0]),
                            mmse_gains=np.zeros(2, complex))
        with pytest.raises(ValueError):
            fp_objective(H, np.zeros_like(H), aux, np.ones(2))


class TestBlockAscent:
    """Each block update never decreases the surrogate, from any start."""

    def _random_state(self, rng, n=4, k=3):
        H = rand_channel(rng, n, k)
        W = rand_channel(rng, n, k)
        noise = rng.uniform(0.3, 1.5, k)
        lam = rng.uniform(0.0, 4.0, k)
        beta = 0.5 * (rng.standard_normal(k) + 1j * rng.standard_normal(k))
        return H, W, noise, FpAuxiliaries(lam, beta)

    def test_joint_auxiliary_update(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            H, W, noise, aux0 = self._random_state(rng)
            before = fp_objective(H, W, aux0, noise)
            after = fp_objective(H, W, update_auxiliaries(H, W, noise), noise)
            assert after >= before - 1e-8 * abs(before)

    def test_mmse_scalar_update_alone(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            H, W, noise, aux0 = self._random_state(rng)
            best = update_auxiliaries(H, W, noise)
            aux1 = FpAuxiliaries(aux0.rate_weights, best.mmse_gains)
            before = fp_objective(H, W, aux0, noise)
            after = fp_objective(H, W, aux1, noise)
            assert after >= before - 1e-8 * abs(before)

    def test_rate_weight_update_after_mmse(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            H, W, noise, aux0 = self._random_state(rng)
            best = update_auxiliaries(H, W, noise)
            staged = FpAuxiliaries(aux0.rate_weights, best.mmse_gains)
            before = fp_objective(H, W, staged, noise)
            after = fp_objective(H, W, best, noise)
            assert after >= before - 1e-8 * abs(before)

    def test_beamformer_update(self):
        rng = np.random.default_rng(14)
        for _ in range(50):
            H, W, noise, _ = self._random_state(rng)
            aux = update_auxiliaries(H, W, noise)
            budget = float(np.sum(np.abs(W) ** 2)) * rng.uniform(0.5, 2.0)
            scale = np.sqrt(budget / np.sum(np.abs(W) ** 2)) * rng.uniform(0.2, 1.0)
            feasible_W = W * scale
            before = fp_objective(H, feasible_W, aux, noise)
            beam = update_beamformer(H, aux, noise, budget)
            after = fp_objective(H, beam.matrix, aux, noise)
            assert after >= before - 1e-8 * abs(before)


def quad_oracle(H, lam, beta):
    n, k = H.shape
    quad = np.zeros((n, n), complex)
    linear = np.zeros((n, k), complex)
    for i in range(k):
        h = H[:, i]
        quad += (1 + lam[i]) * abs(beta[i]) ** 2 * np.outer(h, np.conj(h))
        linear[:, i] = (1 + lam[i]) * np.conj(beta[i]) * h
    return quad, linear


class TestQuadraticTerms:
    def test_single_user_rank_one(self):
        rng = np.random.default_rng(15)
        H = rand_channel(rng, 4, 1)
        aux = FpAuxiliaries(np.array([2.0]), np.array([0.5 + 0.2j]))
        quad, _ = build_quadratic_terms(H, aux)
        eigvals = np.linalg.eigvalsh(quad)
        assert eigvals[-1] > 0
        assert np.all(eigvals[:-1] <= 1e-10 * eigvals[-1])

    def test_psd(self):
        rng = np.random.default_rng(16)
        for _ in range(20):
            H = rand_channel(rng, 4, 3)
            aux = FpAuxiliaries(rng.uniform(0, 5, 3),
                                0.4 * (rng.standard_normal(3) + 1j * rng.standard_normal(3)))
            quad, _ = build_quadratic_terms(H, aux)
            eigvals = np.linalg.eigvalsh(quad)
            assert eigvals.min() >= -1e-10 * np.linalg.norm(quad)

    def test_summation_oracle(self):
        rng = np.random.default_rng(17)
        H = rand_channel(rng, 5, 3)
        lam = rng.uniform(0, 5, 3)
        beta = 0.4 * (rng.standard_normal(3) + 1j * rng.standard_normal(3))
        quad, linear = build_quadratic_terms(H, FpAuxiliaries(lam, beta))
        quad_ref, linear_ref = quad_oracle(H, lam, beta)
        np.testing.assert_allclose(quad, quad_ref, rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(linear, linear_ref, rtol=1e-12)


class TestRidgeMultiplier:
    def test_inactive_constraint(self):
        # well-conditioned quad with a tiny linear term: unconstrained fits
        rng = np.random.default_rng(18)
        basis = np.linalg.qr(rand_channel(rng, 4, 4))[0]
        quad = basis @ np.diag([1.0, 2.0, 3.0, 4.0]) @ basis.conj().T
        linear = 1e-3 * rand_channel(rng, 4, 2)
        assert solve_ridge_multiplier(quad, linear, 100.0) == 0.0

    def test_identity_closed_form(self):
        d = 3.0 + 4.0j  # |d| = 5
        p = 4.0
        linear = np.zeros((3, 1), complex)
        linear[0, 0] = d
        mu = solve_ridge_multiplier(np.eye(3, dtype=complex), linear, p)
        assert mu == pytest.approx(abs(d) / np.sqrt(p) - 1.0, rel=1e-8)

    def test_power_met_when_active(self):
        rng = np.random.default_rng(19)
        for _ in range(20):
            H = rand_channel(rng, 4, 3)
            aux = FpAuxiliaries(rng.uniform(0.5, 5, 3),
                                (rng.standard_normal(3) + 1j * rng.standard_normal(3)))
            budget = 0.01 * rng.uniform(0.5, 2.0)
            beam, mu = update_beamformer(H, aux, np.ones(3), budget, return_multiplier=True)
            if mu > 0:
                assert abs(beam.tx_power - budget) <= 1e-8 * budget
            else:
                assert beam.tx_power <= budget * (1 + 1e-9)

    def test_power_curve_strictly_decreasing(self):
        rng = np.random.default_rng(20)
        H = rand_channel(rng, 4, 3)
        aux = FpAuxiliaries(rng.uniform(0.5, 5, 3),
                            (rng.standard_normal(3) + 1j * rng.standard_normal(3)))
        quad, linear = build_quadratic_terms(H, aux)
        grid = np.geomspace(1e-3, 1e3, 40)
        values = [ridge_power(quad, linear, mu) for mu in grid]
        assert np.all(np.diff(values) < 0)

    def test_bad_budget(self):
        with pytest.raises(ValueError):
            solve_ridge_multiplier(np.eye(2, dtype=complex), np.zeros((2, 1), complex), 0.0)


def pg_oracle(quad, linear, budget, iters=60_000):
    """Projected-gradient solve of the beamformer subproblem (independent path)."""
    lipschitz = max(np.linalg.eigvalsh(quad).max(), 1e-12)
    step = 1.0 / lipschitz
    W = np.zeros_like(linear)
    for _ in range(iters):
        W = W - step * (quad @ W - linear)
        power = np.sum(np.abs(W) ** 2)
        if power > budget:
            W *= np.sqrt(budget / power)
    return W


def quad_value(quad, linear, W):
    return float(np.real(np.trace(W.conj().T @ quad @ W)
                         - 2 * np.real(np.trace(W.conj().T @ linear))))


class TestUpdateBeamformer:
    def test_single_user_matched_direction(self):
        rng = np.random.default_rng(21)
        H = rand_channel(rng, 4, 1)
        aux = update_auxiliaries(H, 0.3 * H, np.ones(1))
        beam = update_beamformer(H, aux, np.ones(1), 2.0)
        w = beam.matrix[:, 0]
        cosine = abs(np.vdot(w, H[:, 0])) / (np.linalg.norm(w) * np.linalg.norm(H[:, 0]))
        assert cosine == pytest.approx(1.0, abs=1e-9)

    def test_inactive_equals_direct_solve(self):
        rng = np.random.default_rng(22)
        H = rand_channel(rng, 2, 3)  # K > N keeps quad nonsingular
        aux = FpAuxiliaries(rng.uniform(0.5, 2, 3),
                            0.5 * (rng.standard_normal(3) + 1j * rng.standard_normal(3)))
        quad, linear = build_quadratic_terms(H, aux)
        beam, mu = update_beamformer(H, aux, np.ones(3), 1e9, return_multiplier=True)
        assert mu == 0.0
        np.testing.assert_allclose(beam.matrix, np.linalg.solve(quad, linear), rtol=1e-9)

    def test_projected_gradient_oracle(self):
        rng = np.random.default_rng(23)
        for _ in range(5):
            H = rand_channel(rng, 3, 2)
            aux = FpAuxiliaries(rng.uniform(0.5, 4, 2),
                                0.7 * (rng.standard_normal(2) + 1j * rng.standard_normal(2)))
            quad, linear = build_quadratic_terms(H, aux)
            budget = rng.uniform(0.2, 2.0)
            beam = update_beamformer(H, aux, np.ones(2), budget)
            ref = pg_oracle(quad, linear, budget)
            v_alg = quad_value(quad, linear, beam.matrix)
            v_ref = quad_value(quad, linear, ref)
            assert abs(v_alg - v_ref) <= 1e-6 * max(1.0, abs(v_ref))


class TestBeamMatrix:
    def test_budget_violation_rejected(self):
        with pytest.raises(ValueError):
            BeamMatrix(matrix=np.ones((2, 2), complex), power_budget=1.0)

    def test_tx_power(self):
        beam = BeamMatrix(matrix=np.eye(2, dtype=complex), power_budget=2.0)
        assert beam.tx_power == pytest.approx(2.0)
