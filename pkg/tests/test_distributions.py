import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn
from scipy.stats import laplace, norm

from epreg.distributions import (
    EpPrior,
    SpikeSlab,
    ep_density,
    ep_kurtosis,
    ep_sample,
    shape_from_kurtosis,
    spike_slab_sample,
)
from epreg.errors import DomainError


class TestEpPrior:
    def test_invalid_parameters(self):
        for tau2, q in [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, -2.0),
                        (np.nan, 1.0), (1.0, np.inf)]:
            with pytest.raises(DomainError):
                EpPrior(tau2, q)

    @pytest.mark.parametrize("tau2", [0.25, 1.0, 7.5])
    @pytest.mark.parametrize("q", [0.3, 0.5, 1.0, 2.0, 4.0])
    def test_penalty_closed_form(self, tau2, q):
        expected = tau2 ** (-q / 2) * (gamma_fn(3 / q) / gamma_fn(1 / q)) ** (q / 2)
        assert EpPrior(tau2, q).penalty == pytest.approx(expected, rel=1e-12)

    def test_laplace_and_normal_special_cases(self):
        # same variance implies pointwise equal densities
        xs = np.linspace(-4.0, 4.0, 17)
        tau2 = 2.0
        lap = laplace.pdf(xs, scale=np.sqrt(tau2 / 2.0))
        assert np.allclose(ep_density(xs, EpPrior(tau2, 1.0)), lap, rtol=1e-12)
        assert np.allclose(
            ep_density(xs, EpPrior(tau2, 2.0)), norm.pdf(xs, scale=np.sqrt(tau2)),
            rtol=1e-12,
        )


class TestEpDensity:
    def test_normal_at_zero(self):
        assert ep_density(0.0, EpPrior(1.0, 2.0)) == pytest.approx(
            1.0 / np.sqrt(2.0 * np.pi), rel=1e-12
        )

    def test_laplace_at_zero(self):
        # direct evaluation: (1/2) sqrt(Gamma(3)/Gamma(1)^3) = sqrt(2)/2
        assert ep_density(0.0, EpPrior(1.0, 1.0)) == pytest.approx(
            np.sqrt(2.0) / 2.0, rel=1e-12
        )

    def test_laplace_at_one(self):
        expected = np.sqrt(2.0) / 2.0 * np.exp(-np.sqrt(2.0))
        assert ep_density(1.0, EpPrior(1.0, 1.0)) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.1719, abs=5e-5)

    @pytest.mark.parametrize("q", [0.25, 0.5, 1.0, 2.0, 4.0])
    def test_integrates_to_one(self, q):
        val, _ = quad(
            lambda b: ep_density(b, EpPrior(1.7, q)), -np.inf, np.inf, limit=200
        )
        assert val == pytest.approx(1.0, abs=1e-8)

    def test_symmetry(self):
        prior = EpPrior(0.8, 0.6)
        xs = np.linspace(0.0, 5.0, 33)
        assert np.array_equal(ep_density(xs, prior), ep_density(-xs, prior))

    def test_nonfinite_beta_rejected(self):
        with pytest.raises(DomainError):
            ep_density(np.nan, EpPrior(1.0, 1.0))
        with pytest.raises(DomainError):
            ep_density(np.array([0.0, np.inf]), EpPrior(1.0, 1.0))

    def test_peaked_but_finite_below_one(self):
        # q < 1 densities stay finite at the origin
        assert np.isfinite(ep_density(0.0, EpPrior(1.0, 0.25)))


class TestEpSample:
    def test_determinism(self):
        prior = EpPrior(1.0, 0.7)
        a = ep_sample(1000, prior, np.random.default_rng(5))
        b = ep_sample(1000, prior, np.random.default_rng(5))
        assert np.array_equal(a, b)

    def test_normal_case_kurtosis(self):
        s = ep_sample(10**6, EpPrior(1.0, 2.0), np.random.default_rng(0))
        kurt = np.mean(s**4) / np.mean(s**2) ** 2
        assert kurt == pytest.approx(3.0, abs=0.02)

    def test_laplace_case_moments(self):
        s = ep_sample(10**6, EpPrior(4.0, 1.0), np.random.default_rng(1))
        assert s.var() == pytest.approx(4.0, abs=0.05)
        kurt = np.mean(s**4) / np.mean(s**2) ** 2
        assert kurt == pytest.approx(6.0, abs=0.1)

    @pytest.mark.parametrize("q,tau2", [(0.5, 1.0), (2.0, 3.0), (4.0, 0.5)])
    def test_variance_matches(self, q, tau2):
        # 4 Monte Carlo standard errors of the sample variance
        n = 10**6
        prior = EpPrior(tau2, q)
        s = ep_sample(n, prior, np.random.default_rng(int(10 * q)))
        mu4 = ep_kurtosis(q) * tau2**2
        se = np.sqrt((mu4 - tau2**2) / n)
        assert abs(s.var() - tau2) < 4 * se

    def test_count_validation(self):
        with pytest.raises(DomainError):
            ep_sample(0, EpPrior(1.0, 1.0), np.random.default_rng(0))


class TestKurtosisMap:
    def test_known_values(self):
        assert ep_kurtosis(1.0) == pytest.approx(6.0, rel=1e-12)
        assert ep_kurtosis(2.0) == pytest.approx(3.0, rel=1e-12)
        # Gamma(10) Gamma(2) / Gamma(6)^2 = 362880 / 14400
        assert ep_kurtosis(0.5) == pytest.approx(25.2, rel=1e-12)

    def test_monotone_decreasing(self):
        qs = np.linspace(0.1, 10.0, 200)
        vals = [ep_kurtosis(q) for q in qs]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            ep_kurtosis(0.0)
        with pytest.raises(DomainError):
            ep_kurtosis(-1.0)

    def test_large_q_no_overflow(self):
        # log-gamma path: tiny arguments must not overflow
        val = ep_kurtosis(1e4)
        assert np.isfinite(val) and 1.79 < val < 1.81


class TestShapeFromKurtosis:
    def test_known_inverses(self):
        assert shape_from_kurtosis(6.0) == pytest.approx(1.0, abs=1e-10)
        assert shape_from_kurtosis(3.0) == pytest.approx(2.0, abs=1e-10)
        assert shape_from_kurtosis(25.2) == pytest.approx(0.5, abs=1e-8)

    def test_roundtrip_on_grid(self):
        for q in np.linspace(0.1, 4.0, 40):
            assert shape_from_kurtosis(ep_kurtosis(q)) == pytest.approx(q, abs=1e-8)

    def test_identity_on_kurtosis_interval(self):
        for kurt in np.linspace(3.1, 30.0, 28):
            assert ep_kurtosis(shape_from_kurtosis(kurt)) == pytest.approx(
                kurt, abs=1e-8
            )

    def test_below_three_is_fine(self):
        q = shape_from_kurtosis(2.5)
        assert q > 2.0

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            shape_from_kurtosis(1.5)
        with pytest.raises(DomainError):
            shape_from_kurtosis(np.nan)
        with pytest.raises(DomainError):
            shape_from_kurtosis(np.inf)


class TestSpikeSlab:
    def test_parameter_validation(self):
        for pi in [0.0, -0.1, 1.5]:
            with pytest.raises(DomainError):
                SpikeSlab(pi, 1.0)
        with pytest.raises(DomainError):
            SpikeSlab(0.5, 0.0)

    def test_no_spike_is_normal(self):
        s = spike_slab_sample(10**6, SpikeSlab(1.0, 1.0), np.random.default_rng(2))
        assert np.all(s != 0.0)
        kurt = np.mean(s**4) / np.mean(s**2) ** 2
        assert kurt == pytest.approx(3.0, abs=0.05)

    def test_half_slab_matches_laplace_kurtosis(self):
        ss = SpikeSlab(0.5, 1.0)
        assert ss.kurtosis == pytest.approx(ep_kurtosis(1.0), rel=1e-12)
        assert ss.kurtosis == 6.0
        s = spike_slab_sample(10**6, ss, np.random.default_rng(3))
        kurt = np.mean(s**4) / np.mean(s**2) ** 2
        assert kurt == pytest.approx(6.0, abs=0.15)

    def test_sparse_slab_kurtosis(self):
        s = spike_slab_sample(10**6, SpikeSlab(0.1, 1.0), np.random.default_rng(4))
        kurt = np.mean(s**4) / np.mean(s**2) ** 2
        assert kurt == pytest.approx(30.0, abs=1.5)
        assert np.mean(s == 0.0) == pytest.approx(0.9, abs=0.01)
        assert s.var() == pytest.approx(1.0, abs=0.05)

    def test_determinism(self):
        ss = SpikeSlab(0.3, 2.0)
        a = spike_slab_sample(500, ss, np.random.default_rng(6))
        b = spike_slab_sample(500, ss, np.random.default_rng(6))
        assert np.array_equal(a, b)
