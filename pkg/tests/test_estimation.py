import numpy as np
import pytest
from scipy.optimize import brentq

from epreg.data import RegressionData
from epreg.distributions import EpPrior, ep_sample
from epreg.errors import ClampedKurtosisWarning, DegenerateInputError, DomainError
from epreg.estimation import (
    estimate_shape,
    estimate_variances,
    variance_objective,
)
from epreg.testing import empirical_kurtosis, ols_estimate


def _dense_objective(tau2, sigma2, y, X):
    cov = X @ X.T * tau2 + sigma2 * np.eye(len(y))
    sign, logdet = np.linalg.slogdet(cov)
    assert sign > 0
    return logdet + y @ np.linalg.solve(cov, y)


class TestVarianceObjective:
    def test_scalar_reduction(self):
        # single observation, unit design: log(t2 + s2) + y^2/(t2 + s2)
        data = RegressionData(y=np.array([2.0]), X=np.array([[1.0]]))
        val = variance_objective(0.7, 0.5, data)
        assert val == pytest.approx(np.log(1.2) + 4.0 / 1.2, rel=1e-12)

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((5, 3))
        y = rng.standard_normal(5)
        data = RegressionData(y=y, X=X)
        for tau2, sigma2 in [(0.5, 1.0), (2.0, 0.1), (0.0, 3.0), (1e-3, 1e3)]:
            assert variance_objective(tau2, sigma2, data) == pytest.approx(
                _dense_objective(tau2, sigma2, y, X), rel=1e-10
            )

    def test_scalar_minimizer_at_y_squared(self):
        y1 = 1.7
        data = RegressionData(y=np.array([y1]), X=np.array([[1.0]]))
        best = y1**2
        base = variance_objective(0.0, best, data)
        for s in [0.5 * best, 0.9 * best, 1.1 * best, 2.0 * best]:
            assert variance_objective(0.0, s, data) > base

    def test_domain_errors(self):
        data = RegressionData(y=np.ones(4), X=np.eye(4))
        with pytest.raises(DomainError):
            variance_objective(-1.0, 1.0, data)
        with pytest.raises(DomainError):
            variance_objective(0.0, 0.0, data)


class TestEstimateVariances:
    def test_consistency_light(self):
        # truth (1, 1); heavier version lives in the acceptance suite
        rng = np.random.default_rng(1)
        sig, tau = [], []
        for _ in range(30):
            X = rng.standard_normal((200, 100))
            beta = ep_sample(100, EpPrior(1.0, 1.0), rng)
            y = X @ beta + rng.standard_normal(200)
            ve = estimate_variances(RegressionData(y=y, X=X))
            sig.append(ve.sigma2)
            tau.append(ve.tau2)
        assert np.mean(sig) == pytest.approx(1.0, abs=0.25)
        assert np.mean(tau) == pytest.approx(1.0, abs=0.25)

    def test_scaling_by_constant(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((40, 10))
        y = X @ rng.standard_normal(10) + rng.standard_normal(40)
        base = estimate_variances(RegressionData(y=y, X=X))
        scaled = estimate_variances(RegressionData(y=3.0 * y, X=X))
        assert scaled.sigma2 == pytest.approx(9.0 * base.sigma2, rel=1e-8)
        assert scaled.tau2 == pytest.approx(9.0 * base.tau2, rel=1e-8)

    def test_column_permutation_invariance(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((30, 8))
        y = X @ rng.standard_normal(8) + rng.standard_normal(30)
        perm = rng.permutation(8)
        a = estimate_variances(RegressionData(y=y, X=X))
        b = estimate_variances(RegressionData(y=y, X=X[:, perm]))
        assert b.sigma2 == pytest.approx(a.sigma2, rel=1e-10)
        assert b.tau2 == pytest.approx(a.tau2, rel=1e-10)

    @pytest.mark.parametrize("seed", [10, 11, 12, 13, 14])
    def test_beats_grid_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n, p = rng.integers(10, 60), rng.integers(3, 40)
        X = rng.standard_normal((n, p))
        y = X @ rng.standard_normal(p) + rng.standard_normal(n)
        data = RegressionData(y=y, X=X)
        result = estimate_variances(data)
        grid = np.logspace(-3, 3, 50)
        best = min(
            variance_objective(t, s, data) for t in grid for s in grid
        )
        assert result.objective <= best + 1e-6

    def test_boundary_solution_flagged(self):
        # wide designs push the noise variance to zero for some draws
        rng = np.random.default_rng(0)
        X = rng.standard_normal((40, 80))
        beta = rng.laplace(0.0, np.sqrt(0.5), 80)
        y = X @ beta + rng.standard_normal(40)
        ve = estimate_variances(RegressionData(y=y, X=X))
        assert ve.sigma2 == 0.0
        assert ve.at_boundary
        assert ve.tau2 > 0.0

    def test_not_both_zero(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((20, 5))
        y = X @ rng.standard_normal(5) + rng.standard_normal(20)
        ve = estimate_variances(RegressionData(y=y, X=X))
        assert (ve.sigma2, ve.tau2) != (0.0, 0.0)

    def test_zero_response_rejected(self):
        with pytest.raises(DegenerateInputError):
            estimate_variances(RegressionData(y=np.zeros(6), X=np.eye(6)))


def _exact_kurtosis_vector(rng, p, target=6.0):
    """Vector whose empirical kurtosis is exactly the target.

    Starts from near-constant magnitudes (kurtosis close to 1) and grows a
    single coordinate until the target is crossed.
    """
    signs = np.where(rng.random(p) < 0.5, -1.0, 1.0)
    b = signs * rng.uniform(0.5, 1.5, p)

    def gap(t):
        b2 = b.copy()
        b2[0] = t
        return empirical_kurtosis(b2) - target

    assert gap(0.0) < 0
    hi = 1.0
    while gap(hi) < 0:
        hi *= 2.0
    t = brentq(gap, 0.0, hi, xtol=1e-14)
    b[0] = t
    return b


class TestEstimateShape:
    def test_noiseless_laplace_kurtosis_gives_one(self):
        rng = np.random.default_rng(5)
        beta = _exact_kurtosis_vector(rng, 50, target=6.0)
        X = rng.standard_normal((120, 50))
        data = RegressionData(y=X @ beta, X=X)
        est = estimate_shape(data, kind="ols")
        assert est.kurtosis == pytest.approx(6.0, abs=1e-6)
        assert est.q == pytest.approx(1.0, abs=1e-6)
        assert not est.clamped

    def test_auto_dispatch(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((30, 50))
        y = X @ ep_sample(50, EpPrior(1.0, 1.0), rng) + rng.standard_normal(30)
        est = estimate_shape(RegressionData(y=y, X=X))
        assert est.kind == "ridge"

    def test_small_q_truth_centers_below_one(self):
        rng = np.random.default_rng(7)
        qs = []
        for _ in range(30):
            X = rng.standard_normal((200, 100))
            beta = ep_sample(100, EpPrior(1.0, 0.25), rng)
            y = X @ beta + rng.standard_normal(200)
            qs.append(estimate_shape(RegressionData(y=y, X=X), kind="ols").q)
        assert np.median(qs) < 1.0

    def test_large_q_estimates_more_variable(self):
        rng = np.random.default_rng(8)

        def iqr_of_estimates(q_true):
            qs = []
            for _ in range(40):
                X = rng.standard_normal((200, 100))
                beta = ep_sample(100, EpPrior(1.0, q_true), rng)
                y = X @ beta + rng.standard_normal(200)
                with np.errstate(all="ignore"):
                    qs.append(
                        estimate_shape(RegressionData(y=y, X=X), kind="ols").q
                    )
            lo, hi = np.percentile(qs, [25, 75])
            return hi - lo

        assert iqr_of_estimates(4.0) > iqr_of_estimates(0.25)

    def test_clamped_below_range(self):
        # constant-magnitude coefficients put the statistic at 1
        rng = np.random.default_rng(9)
        X, _ = np.linalg.qr(rng.standard_normal((40, 10)))
        beta = np.where(rng.random(10) < 0.5, 1.0, -1.0)
        data = RegressionData(y=X @ beta, X=X)
        with pytest.warns(ClampedKurtosisWarning):
            est = estimate_shape(data, kind="ols")
        assert est.clamped
        assert est.kurtosis == pytest.approx(1.9)
        assert est.q > 2.0

    def test_invalid_kind(self):
        data = RegressionData(y=np.ones(4), X=np.eye(4))
        with pytest.raises(DomainError):
            estimate_shape(data, kind="oracle")
