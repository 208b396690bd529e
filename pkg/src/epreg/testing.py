"""Kurtosis-based test of a Laplace prior for regression coefficients.

The test statistic is the empirical kurtosis of a coefficient estimate
(least squares when the design allows it, a correlation-scaled ridge
estimate otherwise), compared against Monte Carlo quantiles of its null
distribution under i.i.d. Laplace coefficients.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import RegressionData
from .errors import (
    DegenerateInputError,
    DomainError,
    NotIdentifiableError,
    StandardizationWarning,
)

__all__ = [
    "DesignDecomposition",
    "BiasConstants",
    "TestOutcome",
    "empirical_kurtosis",
    "ols_estimate",
    "ridge_estimate",
    "choose_delta2",
    "design_decomposition",
    "null_statistic_sample",
    "null_quantiles",
    "laplace_test",
    "oracle_test",
    "bias_constants",
    "corrected_kurtosis",
    "proposition_bound",
]

# reciprocal condition number of X'X below which the least-squares
# statistic is abandoned for the ridge one
RCOND_THRESHOLD = 1e-5

# eigenvalues of the correlation matrix below this are treated as zero
EIGENVALUE_CLAMP = 1e-12


def empirical_kurtosis(values) -> float:
    """Fourth-over-squared-second empirical moment of a vector.

    Invariant to rescaling of the input by any nonzero constant.
    """
    b = np.asarray(values, dtype=float)
    if b.ndim != 1 or b.size < 2:
        raise DomainError(f"need a 1-D vector of length >= 2, got shape {b.shape}")
    b2 = b * b
    m2 = b2.mean()
    if m2 == 0.0:
        raise DegenerateInputError("all entries are zero")
    m4 = (b2 * b2).mean()
    return float(m4 / m2**2)


def _gram_rcond(X: np.ndarray) -> float:
    s = np.linalg.svd(X, compute_uv=False)
    if s[0] == 0.0:
        return 0.0
    return float((s[-1] / s[0]) ** 2)


def ols_estimate(data: RegressionData) -> np.ndarray:
    """Least-squares coefficients; requires n >= p and a well-posed Gram matrix."""
    X, y = data.X, data.y
    n, p = X.shape
    if n < p:
        raise NotIdentifiableError(
            f"least squares needs n >= p (got n={n}, p={p}); use the ridge path"
        )
    if _gram_rcond(X) < RCOND_THRESHOLD:
        raise NotIdentifiableError(
            "X'X is numerically rank deficient; use the ridge path"
        )
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    return beta


@dataclass(frozen=True)
class DesignDecomposition:
    """Correlation-scale factorization of a Gram matrix.

    ``gram`` = X'X, ``scale`` = sqrt(diag(X'X)), ``corr`` the correlation
    matrix with gram = scale * corr * scale, ``eigenvalues`` its spectrum in
    descending order, ``delta2`` the ridge constant, and ``ridge_op`` the
    matrix mapping X'y to the ridge estimate.
    """

    gram: np.ndarray
    scale: np.ndarray
    corr: np.ndarray
    eigenvalues: np.ndarray
    delta2: float
    ridge_op: np.ndarray
    null_map: np.ndarray
    sigma_delta: np.ndarray

    @property
    def p(self) -> int:
        return self.gram.shape[0]

    @property
    def trace_ratio(self) -> float:
        """tr(sigma_delta)/p, the noise scale of the ridge statistic."""
        return float(np.trace(self.sigma_delta) / self.p)


def choose_delta2(eigenvalues) -> float:
    """Recommended ridge constant: (1 - min eigenvalue), floored at zero."""
    eta = np.asarray(eigenvalues, dtype=float)
    if np.any(eta < -1e-8):
        raise DomainError("correlation eigenvalues must be nonnegative")
    return float(max(0.0, 1.0 - eta.min()))


def design_decomposition(X: np.ndarray, delta2: float | None = None) -> DesignDecomposition:
    """Build the correlation-scale decomposition used by the ridge test.

    When ``delta2`` is omitted the recommended rule (1 - min eigenvalue)+ is
    applied, with eigenvalues below 1e-12 clamped to zero first.
    """
    X = np.asarray(X, dtype=float)
    gram = X.T @ X
    diag = np.diag(gram).copy()
    if np.any(diag <= 0):
        j = int(np.argmin(diag))
        raise DegenerateInputError(f"column {j} of X has zero norm")
    scale = np.sqrt(diag)
    corr = gram / np.outer(scale, scale)
    eta = np.linalg.eigvalsh(corr)[::-1].copy()
    eta[eta < EIGENVALUE_CLAMP] = 0.0
    if delta2 is None:
        delta2 = choose_delta2(eta)
    elif delta2 < 0:
        raise DomainError(f"delta2 must be >= 0, got {delta2}")
    shifted = corr + delta2 * np.eye(corr.shape[0])
    try:
        shrink = np.linalg.inv(shifted)
    except np.linalg.LinAlgError:
        raise NotIdentifiableError(
            "correlation matrix plus delta2*I is singular; delta2=0 with a "
            "rank-deficient design"
        ) from None
    inv_scale = 1.0 / scale
    ridge_op = shrink * np.outer(inv_scale, inv_scale)
    null_map = (shrink @ corr) * np.outer(inv_scale, scale)
    sigma_delta = (shrink @ corr @ shrink) * np.outer(inv_scale, inv_scale)
    return DesignDecomposition(
        gram=gram,
        scale=scale,
        corr=corr,
        eigenvalues=eta,
        delta2=float(delta2),
        ridge_op=ridge_op,
        null_map=null_map,
        sigma_delta=sigma_delta,
    )


def ridge_estimate(data: RegressionData, decomp: DesignDecomposition) -> np.ndarray:
    """Correlation-scaled ridge estimate of the coefficients."""
    return decomp.ridge_op @ (data.X.T @ data.y)


def null_statistic_sample(
    p: int,
    mc_reps: int,
    rng: np.random.Generator,
    null_map: np.ndarray | None = None,
) -> np.ndarray:
    """Monte Carlo draws of the null statistic.

    Each replicate draws a unit-scale Laplace vector of length ``p``
    (any scale gives the same statistic), optionally pushes it through the
    ridge shrinkage map, and records its empirical kurtosis.
    """
    if mc_reps < 1:
        raise DomainError("mc_reps must be >= 1")
    out = np.empty(mc_reps)
    batch = max(1, int(4_000_000 // max(p, 1)))
    done = 0
    while done < mc_reps:
        b = min(batch, mc_reps - done)
        draws = rng.laplace(0.0, 1.0, size=(b, p))
        if null_map is not None:
            draws = draws @ null_map.T
        sq = draws * draws
        m2 = sq.mean(axis=1)
        m4 = (sq * sq).mean(axis=1)
        out[done : done + b] = m4 / m2**2
        done += b
    return out


def null_quantiles(
    decomp: DesignDecomposition | None,
    p: int,
    alpha: float,
    mc_reps: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Monte Carlo (alpha/2, 1 - alpha/2) quantiles of the null statistic."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    if mc_reps < 1000:
        raise DomainError(f"mc_reps must be >= 1000, got {mc_reps}")
    null_map = decomp.null_map if decomp is not None else None
    sample = null_statistic_sample(p, mc_reps, rng, null_map=null_map)
    lower = float(np.quantile(sample, alpha / 2.0, method="linear"))
    upper = float(np.quantile(sample, 1.0 - alpha / 2.0, method="linear"))
    return lower, upper


@dataclass(frozen=True)
class TestOutcome:
    """Result of the Laplace-prior kurtosis test."""

    statistic: float
    lower_quantile: float
    upper_quantile: float
    reject: bool
    null_tail_prob: float
    kind: str  # "oracle" | "ols" | "ridge"
    mc_reps: int
    delta2: float | None = None
    trace_diagnostic: float | None = None


def _outcome_from_sample(statistic, sample, alpha, kind, delta2, diagnostic):
    lower = float(np.quantile(sample, alpha / 2.0, method="linear"))
    upper = float(np.quantile(sample, 1.0 - alpha / 2.0, method="linear"))
    tail = float(np.mean(sample <= statistic))
    reject = not (lower < statistic < upper)
    return TestOutcome(
        statistic=float(statistic),
        lower_quantile=lower,
        upper_quantile=upper,
        reject=bool(reject),
        null_tail_prob=tail,
        kind=kind,
        mc_reps=int(sample.size),
        delta2=delta2,
        trace_diagnostic=diagnostic,
    )


def laplace_test(
    data: RegressionData,
    alpha: float = 0.05,
    mc_reps: int = 1_000_000,
    rng: np.random.Generator | None = None,
) -> TestOutcome:
    """Test whether a Laplace prior is consistent with the coefficients.

    Dispatches to the least-squares statistic when n > p and X'X is well
    conditioned, otherwise to the ridge statistic with the recommended
    delta2 rule.  The trace diagnostic reported with the outcome is the
    design-dependent scale of the statistic's estimation error; the test is
    trustworthy when it is small.
    """
    if rng is None:
        rng = np.random.default_rng()
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    data.validate()
    if np.all(data.y == 0.0):
        raise DegenerateInputError("response vector is identically zero")
    X = data.X
    n, p = X.shape
    col_ss = np.sum(X * X, axis=0)
    if np.max(np.abs(col_ss / n - 1.0)) > 0.01:
        warnings.warn(
            "columns of X do not have squared norm n; the test is calibrated "
            "for standardized designs",
            StandardizationWarning,
            stacklevel=2,
        )
    use_ols = n > p and _gram_rcond(X) >= RCOND_THRESHOLD
    if use_ols:
        beta_hat = ols_estimate(data)
        statistic = empirical_kurtosis(beta_hat)
        sample = null_statistic_sample(p, mc_reps, rng)
        gram = X.T @ X
        diagnostic = float(np.trace(np.linalg.inv(gram)) / p)
        return _outcome_from_sample(statistic, sample, alpha, "ols", None, diagnostic)
    decomp = design_decomposition(X)
    beta_hat = ridge_estimate(data, decomp)
    statistic = empirical_kurtosis(beta_hat)
    sample = null_statistic_sample(p, mc_reps, rng, null_map=decomp.null_map)
    return _outcome_from_sample(
        statistic, sample, alpha, "ridge", decomp.delta2, decomp.trace_ratio
    )


def oracle_test(
    beta: np.ndarray,
    alpha: float = 0.05,
    mc_reps: int = 1_000_000,
    rng: np.random.Generator | None = None,
) -> TestOutcome:
    """Kurtosis test applied to directly observed coefficients."""
    if rng is None:
        rng = np.random.default_rng()
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    statistic = empirical_kurtosis(beta)
    sample = null_statistic_sample(len(beta), mc_reps, rng)
    return _outcome_from_sample(statistic, sample, alpha, "oracle", None, None)


@dataclass(frozen=True)
class BiasConstants:
    """Design constants for de-biasing the ridge-path kurtosis estimate.

    ``m2_factor`` scales the second moment of the shrunk coefficients,
    ``m4_factor`` weights their kurtosis in the fourth moment and
    ``m4_shift`` is the Gaussian cross-term offset.  All three are 1, 1, 0
    for an identity design, making the correction the identity map.
    """

    m2_factor: float
    m4_factor: float
    m4_shift: float


def bias_constants(decomp: DesignDecomposition) -> BiasConstants:
    """Compute the de-biasing constants from a design decomposition."""
    A = decomp.ridge_op @ decomp.gram
    p = A.shape[0]
    sq = A * A
    m2_factor = float(sq.sum() / p)
    m4_factor = float((sq * sq).sum() / p)
    col_sq = sq.sum(axis=0)  # diagonal of X'X D^2 X'X
    m4_shift = float(3.0 * ((col_sq**2).sum() / p - m4_factor))
    return BiasConstants(m2_factor=m2_factor, m4_factor=m4_factor, m4_shift=m4_shift)


def corrected_kurtosis(statistic: float, constants: BiasConstants) -> float:
    """De-bias a ridge-path kurtosis statistic."""
    if constants.m4_factor <= 0:
        raise DomainError("m4_factor must be positive")
    a2 = constants.m2_factor**2
    return float((a2 / constants.m4_factor) * (statistic - constants.m4_shift / a2))


def proposition_bound(
    data: RegressionData,
    decomp: DesignDecomposition | None,
    beta_ref: np.ndarray,
    sigma2: float,
) -> float:
    """Leading term of the statistic's mean squared surrogate error.

    Diagnostic only; uses the least-squares trace when ``decomp`` is None
    and the ridge trace otherwise.
    """
    b = np.asarray(beta_ref, dtype=float)
    b2 = b * b
    m2 = b2.mean()
    if m2 == 0.0:
        raise DegenerateInputError("reference coefficients are all zero")
    m6 = (b2 * b2 * b2).mean()
    if decomp is None:
        gram = data.X.T @ data.X
        trace_ratio = float(np.trace(np.linalg.inv(gram)) / gram.shape[0])
    else:
        trace_ratio = decomp.trace_ratio
    return float(16.0 * sigma2 * (m6 / m2**4) * trace_ratio)
