import numpy as np
import pytest

from mamiso import SingularGramError, compute_sinr, sum_rate, zf_beamformer, zf_sum_rate
from conftest import rand_channel


class TestZfBeamformer:
    def test_orthonormal_columns_closed_form(self):
        rng = np.random.default_rng(0)
        H = np.linalg.qr(rand_channel(rng, 5, 3))[0]
        p = 2.0
        beam = zf_beamformer(H, p)
        np.testing.assert_allclose(beam.matrix, np.sqrt(p / 3) * H, rtol=1e-10)

    def test_nulling(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            H = rand_channel(rng, 5, 3)
            beam = zf_beamformer(H, 1.0)
            cross = H.conj().T @ beam.matrix
            diag = np.abs(np.diagonal(cross))
            off = np.abs(cross - np.diag(np.diagonal(cross)))
            assert off.max() < 1e-8 * diag.min()

    def test_scaled_identity_product(self):
        rng = np.random.default_rng(2)
        H = rand_channel(rng, 4, 4)
        p = 3.0
        beam = zf_beamformer(H, p)
        gram_inv_trace = np.trace(np.linalg.inv(H.conj().T @ H)).real
        expected = np.sqrt(p / gram_inv_trace) * np.eye(4)
        np.testing.assert_allclose(H.conj().T @ beam.matrix, expected, atol=1e-10 * abs(expected).max())

    def test_power_exact(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            H = rand_channel(rng, 6, 4)
            p = rng.uniform(0.1, 10.0)
            beam = zf_beamformer(H, p)
            assert abs(beam.tx_power - p) <= 1e-10 * p

    def test_underdetermined_rejected(self):
        with pytest.raises(ValueError):
            zf_beamformer(np.ones((2, 3), complex), 1.0)

    def test_singular_gram(self):
        h = np.array([1.0, 2.0, 1.0j], dtype=complex)
        H = np.column_stack([h, h])  # duplicated user channel
        with pytest.raises(SingularGramError):
            zf_beamformer(H, 1.0)


class TestZfSumRate:
    def test_zero_power(self):
        rng = np.random.default_rng(4)
        H = rand_channel(rng, 4, 3)
        assert zf_sum_rate(H, 0.0, np.ones(3)) == 0.0

    def test_single_user_closed_form(self):
        rng = np.random.default_rng(5)
        h = rand_channel(rng, 4, 1)
        p, noise = 2.0, 0.7
        expected = np.log2(1 + p * np.linalg.norm(h) ** 2 / noise)
        assert zf_sum_rate(h, p, [noise]) == pytest.approx(expected, rel=1e-12)

    def test_matches_generic_sum_rate(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            H = rand_channel(rng, 5, 3)
            p = rng.uniform(0.1, 5.0)
            noise = rng.uniform(0.2, 2.0, 3)
            beam = zf_beamformer(H, p)
            generic = sum_rate(H, beam.matrix, noise)
            assert abs(zf_sum_rate(H, p, noise) - generic) < 1e-9

    def test_interference_below_signal_floor(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            H = rand_channel(rng, 5, 3)
            beam = zf_beamformer(H, 1.0)
            cross = np.abs(H.conj().T @ beam.matrix) ** 2
            signal = np.diagonal(cross)
            interference = cross - np.diag(signal)
            assert interference.max() < 1e-16 * signal.min()

    def test_scale_covariance(self):
        rng = np.random.default_rng(8)
        H = rand_channel(rng, 4, 3)
        p, noise = 1.0, np.ones(3)
        c = 2.5
        snr = lambda M: p / (np.trace(np.linalg.inv(M.conj().T @ M)).real)
        assert snr(c * H) == pytest.approx(c ** 2 * snr(H), rel=1e-10)
        base = zf_sum_rate(H, p, noise)
        scaled = zf_sum_rate(c * H, p, noise)
        assert scaled == pytest.approx(3 * np.log2(1 + c ** 2 * snr(H)), rel=1e-10)
        assert scaled > base
