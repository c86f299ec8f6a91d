import math

import numpy as np
import pytest
from scipy import special

from rician_hwi.channel import SystemConfig, UlaGeometry, los_spectrum, rate_coefficients, ula_los
from rician_hwi.errors import ConfigError
from rician_hwi.exact_rate import exact_rate
from rician_hwi.monte_carlo import (estimate, instantaneous_rate, mc_eigen_samples, mc_rate,
                                    paired_loss, sample_rates)
from rician_hwi.rng import RandomStream


def los(nt, nr, profile="uniform-angle"):
    return ula_los(nt, UlaGeometry.preset(nr, profile))


class TestInstantaneous:
    def test_zero_snr(self):
        assert instantaneous_rate(np.eye(2), SystemConfig(2, 2, 0.1, 0.1, rho=0)) == 0.0

    def test_diagonal(self):
        r = instantaneous_rate(np.eye(2), SystemConfig(2, 2, rho=3.0))
        assert r == pytest.approx(2 * math.log2(2.5), rel=1e-14)

    @pytest.mark.parametrize("nt,nr", [(2, 3), (3, 2), (2, 2)])
    def test_inverse_oracle(self, nt, nr):
        g = np.random.default_rng(7)
        H = g.standard_normal((nr, nt)) + 1j * g.standard_normal((nr, nt))
        config = SystemConfig(nt, nr, 0.15, 0.1, K=1.0, rho=10.0)
        W = H.conj().T @ H if nt < nr else H @ H.conj().T
        q = W.shape[0]
        rho = config.rho
        Phi = (rho * config.delta_t ** 2 / nt) * W + (rho * config.delta_r ** 2 + 1) * np.eye(q)
        M = np.eye(q) + (rho / nt) * W @ np.linalg.inv(Phi)
        ref = math.log2(abs(np.linalg.det(M)))
        assert instantaneous_rate(H, config) == pytest.approx(ref, rel=1e-12)

    def test_receive_only_distortion(self):
        # no W-dependent noise term: plain log-det at the reduced SNR
        g = np.random.default_rng(8)
        H = g.standard_normal((3, 3)) + 1j * g.standard_normal((3, 3))
        config = SystemConfig(3, 3, 0.0, 0.2, rho=10.0)
        W = H @ H.conj().T
        sinr = (config.rho / 3) / (config.rho * 0.04 + 1)
        ref = math.log2(np.linalg.det(np.eye(3) + sinr * W).real)
        assert instantaneous_rate(H, config) == pytest.approx(ref, rel=1e-12)

    def test_batch(self):
        g = np.random.default_rng(9)
        H = g.standard_normal((4, 2, 3)) + 1j * g.standard_normal((4, 2, 3))
        config = SystemConfig(3, 2, 0.1, 0.1, rho=5.0)
        np.testing.assert_allclose(instantaneous_rate(H, config),
                                   [instantaneous_rate(h, config) for h in H], rtol=1e-13)


class TestMcRate:
    def test_siso_rayleigh_closed_form(self):
        config = SystemConfig(1, 1, K=0.0, rho=10.0)
        res = mc_rate(config, np.ones((1, 1)), 1_000_000, RandomStream(11))
        ref = math.exp(0.1) * special.exp1(0.1) / math.log(2)
        assert ref == pytest.approx(2.9065, abs=1e-4)
        assert abs(res.rate - ref) < 3 * res.uncertainty

    def test_deterministic_limit(self):
        Hbar = los(2, 2)
        config = SystemConfig(2, 2, K=1e12, rho=10.0)
        res = mc_rate(config, Hbar, 1000, RandomStream(1))
        a = rate_coefficients(config).a
        ref = math.log2(np.linalg.det(np.eye(2) + a * Hbar @ Hbar.conj().T).real)
        assert res.uncertainty < 1e-4
        assert res.rate == pytest.approx(ref, abs=1e-4)

    def test_matches_exact(self):
        Hbar = los(2, 2)
        config = SystemConfig(2, 2, 0.15, 0.15, K=1.0, rho=10.0)
        mc = mc_rate(config, Hbar, 100_000, RandomStream(3))
        ex = exact_rate(config, los_spectrum(Hbar, 1.0))
        assert abs(mc.rate - ex.rate) < 3 * mc.uncertainty
        assert mc.method == "mc"

    def test_worker_independent(self):
        Hbar = los(3, 2)
        config = SystemConfig(3, 2, 0.1, 0.1, K=2.0, rho=10.0)
        runs = [mc_rate(config, Hbar, 50_000, RandomStream(5, 2), workers=w) for w in (1, 3, 8)]
        assert runs[0] == runs[1] == runs[2]
        other = mc_rate(config, Hbar, 50_000, RandomStream(5, 3), workers=1)
        assert other.rate != runs[0].rate

    def test_chunking_is_invisible(self):
        # a large matrix forces several chunks; prefixes must agree trial by trial
        Hbar = los(64, 64)
        config = SystemConfig(64, 64, 0.1, 0.1, K=1.0, rho=10.0)
        long = sample_rates(config, Hbar, 600, RandomStream(2), workers=2)
        short = sample_rates(config, Hbar, 300, RandomStream(2), workers=1)
        np.testing.assert_array_equal(long[:300], short)

    def test_standard_error_scaling(self):
        Hbar = los(2, 2)
        config = SystemConfig(2, 2, 0.15, 0.15, K=1.0, rho=10.0)
        small = mc_rate(config, Hbar, 1_000, RandomStream(4))
        large = mc_rate(config, Hbar, 100_000, RandomStream(4))
        assert small.uncertainty / large.uncertainty == pytest.approx(10.0, rel=0.2)

    def test_estimate(self):
        e = estimate(np.array([1.0, 2.0, 3.0, 4.0]))
        assert e.mean == 2.5
        assert e.std_error == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
        with pytest.raises(ConfigError):
            estimate(np.array([1.0]))

    def test_trial_floor(self):
        with pytest.raises(ConfigError):
            mc_rate(SystemConfig(2, 2), los(2, 2), 99, RandomStream())


class TestEigenSamples:
    def test_moments(self):
        Hbar = los(3, 2)
        config = SystemConfig(3, 2, K=1.0, rho=1.0)
        ev = mc_eigen_samples(config, Hbar, 20_000, RandomStream(6))
        assert ev.shape == (40_000,)
        assert np.all(ev >= 0)
        # E[tr W] = Nr Nt, so the pooled mean is p; trials are the independent units
        per_trial = ev.reshape(-1, 2).mean(axis=1)
        se = per_trial.std(ddof=1) / math.sqrt(len(per_trial))
        assert abs(ev.mean() - 3.0) < 3 * se

    def test_trial_floor(self):
        with pytest.raises(ConfigError):
            mc_eigen_samples(SystemConfig(2, 2), los(2, 2), 999, RandomStream())


class TestPairedLoss:
    def test_identical(self):
        x = np.random.default_rng(1).random(100) + 1
        e = paired_loss(x, x)
        assert e.mean == 0.0 and e.std_error == pytest.approx(0.0, abs=1e-15)

    def test_scaled(self):
        x = np.random.default_rng(1).random(100) + 1
        assert paired_loss(x, 0.8 * x).mean == pytest.approx(0.2, rel=1e-12)
