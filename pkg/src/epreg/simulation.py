"""Two-stage adaptive estimation and the simulation harness around it.

The adaptive procedure tests the Laplace prior first and only estimates a
shape parameter when the test rejects; the harness reproduces the level,
power, estimation-error and model-selection experiments on exponential
power and spike-and-slab truths.
"""

from __future__ import annotations

import csv
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import RegressionData
from .distributions import EpPrior, SpikeSlab, ep_sample, spike_slab_sample
from .errors import (
    BoundaryVarianceError,
    ClampedKurtosisWarning,
    DomainError,
    NonUniqueModeWarning,
    StandardizationWarning,
)
from .estimation import estimate_shape, estimate_variances
from .solvers import ModeFit, PosteriorDraws, coordinate_descent_mode, gibbs_sampler
from .testing import (
    TestOutcome,
    design_decomposition,
    empirical_kurtosis,
    laplace_test,
    null_statistic_sample,
)

__all__ = [
    "AdaptiveConfig",
    "AdaptiveResult",
    "Scenario",
    "SimReport",
    "adaptive_estimate",
    "run_power_study",
    "run_estimation_study",
    "write_power_csv",
    "write_estimation_csv",
]

# substream indices under a replicate/master seed; fixed so the accept
# branch of the adaptive fit is bit-identical to a pure Laplace fit
_STREAM_DATA = 0
_STREAM_TEST = 1
_STREAM_MODE = 2
_STREAM_GIBBS = 3

# threshold of the large-error selection metric
SELECTION_ERROR_THRESHOLD = 0.1


def _substream(seed_seq: np.random.SeedSequence, index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(
            entropy=seed_seq.entropy, spawn_key=seed_seq.spawn_key + (index,)
        )
    )


@dataclass(frozen=True)
class AdaptiveConfig:
    """Knobs for the adaptive fit; defaults match the simulation studies."""

    alpha: float = 0.05
    mc_reps: int = 100_000
    iters: int = 10_500
    burn_in: int = 500
    thinning: int = 1
    max_iter: int = 2000
    tol: float = 1e-10
    restarts: int = 100

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must be in (0, 1), got {self.alpha}")
        for name in ("mc_reps", "iters", "burn_in", "thinning", "max_iter", "restarts"):
            if getattr(self, name) < 0 or (name != "burn_in" and getattr(self, name) == 0):
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")


@dataclass(frozen=True)
class AdaptiveResult:
    """Everything the two-stage procedure produced for one dataset."""

    test: TestOutcome
    sigma2: float
    tau2: float
    q_used: float
    q_estimate: float | None
    mode: ModeFit | None
    draws: PosteriorDraws | None

    @property
    def posterior_mean(self) -> np.ndarray | None:
        return None if self.draws is None else self.draws.mean


def adaptive_estimate(
    data: RegressionData,
    seed: int,
    config: AdaptiveConfig | None = None,
    summary: str = "both",
    force_q: float | None = None,
    skip_test: bool = False,
) -> AdaptiveResult:
    """Run the two-stage adaptive fit on one dataset.

    Tests the Laplace prior, picks q (1 on accept, the kurtosis-inverted
    estimate on reject, ``force_q`` if given), estimates the variances, and
    computes the requested posterior summaries ("mode", "mean" or "both").
    ``skip_test`` always uses the estimated shape (the ungated variant).
    Raises BoundaryVarianceError when the variance estimate degenerates.
    Solver streams depend only on ``seed``, so two calls that agree on q
    produce bit-identical fits.
    """
    if config is None:
        config = AdaptiveConfig()
    if summary not in ("mode", "mean", "both"):
        raise DomainError(f"summary must be 'mode', 'mean' or 'both', got {summary!r}")
    root = np.random.SeedSequence(seed)

    outcome = laplace_test(
        data, alpha=config.alpha, mc_reps=config.mc_reps, rng=_substream(root, _STREAM_TEST)
    )
    q_estimate = None
    if outcome.reject or skip_test or force_q is not None:
        q_estimate = estimate_shape(data, kind=outcome.kind).q
    if force_q is not None:
        q_used = force_q
    elif skip_test or outcome.reject:
        q_used = q_estimate
    else:
        q_used = 1.0

    variances = estimate_variances(data)
    if variances.sigma2 == 0.0:
        raise BoundaryVarianceError(
            "variance estimation hit the sigma2 = 0 boundary; coefficient "
            "estimation is not meaningful",
            estimates=variances,
        )
    prior = EpPrior(tau2=variances.tau2, q=q_used) if variances.tau2 > 0 else None
    if prior is None:
        raise BoundaryVarianceError(
            "variance estimation hit the tau2 = 0 boundary; the prior is degenerate",
            estimates=variances,
        )

    mode = None
    if summary in ("mode", "both"):
        mode = coordinate_descent_mode(
            data,
            prior,
            variances.sigma2,
            max_iter=config.max_iter,
            tol=config.tol,
            restarts=config.restarts,
            rng=_substream(root, _STREAM_MODE),
        )
    draws = None
    if summary in ("mean", "both"):
        draws = gibbs_sampler(
            data,
            prior,
            variances.sigma2,
            iters=config.iters,
            burn_in=config.burn_in,
            thinning=config.thinning,
            rng=_substream(root, _STREAM_GIBBS),
        )
    return AdaptiveResult(
        test=outcome,
        sigma2=variances.sigma2,
        tau2=variances.tau2,
        q_used=q_used,
        q_estimate=q_estimate,
        mode=mode,
        draws=draws,
    )


@dataclass(frozen=True)
class Scenario:
    """One simulation cell: dimensions, a coefficient truth and noise."""

    n: int
    p: int
    truth: EpPrior | SpikeSlab
    sigma2: float = 1.0

    @property
    def label(self) -> str:
        if isinstance(self.truth, EpPrior):
            kind = f"ep_q{self.truth.q:g}"
        else:
            kind = f"ss_pi{self.truth.pi:g}"
        return f"n{self.n}_p{self.p}_{kind}"

    def draw_coefficients(self, rng: np.random.Generator) -> np.ndarray:
        if isinstance(self.truth, EpPrior):
            return ep_sample(self.p, self.truth, rng)
        return spike_slab_sample(self.p, self.truth, rng)


@dataclass
class SimReport:
    """Per-scenario simulation results, one entry per completed replicate."""

    scenario: Scenario
    seed: int
    replicates: int
    reject: np.ndarray
    statistics: np.ndarray
    kind: str
    boundary_regenerations: int = 0
    mse_adaptive: np.ndarray = field(default=None)
    mse_laplace: np.ndarray = field(default=None)
    mse_ungated: np.ndarray = field(default=None)
    q_estimates: np.ndarray = field(default=None)
    q_clamped: np.ndarray = field(default=None)
    sigma2_estimates: np.ndarray = field(default=None)
    tau2_estimates: np.ndarray = field(default=None)
    zero_agreement_adaptive: np.ndarray = field(default=None)
    zero_agreement_laplace: np.ndarray = field(default=None)
    large_error_adaptive: np.ndarray = field(default=None)
    large_error_laplace: np.ndarray = field(default=None)
    min_ess_adaptive: np.ndarray = field(default=None)
    min_ess_laplace: np.ndarray = field(default=None)

    @property
    def rejection_rate(self) -> float:
        return float(np.mean(self.reject))

    @property
    def rejection_se(self) -> float:
        r = self.rejection_rate
        return float(np.sqrt(r * (1.0 - r) / len(self.reject)))


def _scenario_design(scenario: Scenario, seed: int):
    """Fixed design (and shared test machinery) for n <= p scenarios."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0xD, 0)))
    return rng.standard_normal((scenario.n, scenario.p))


def _replicate_rng(seed: int, rep: int, attempt: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(rep, attempt))


def _simulate_dataset(scenario, rep_seq, X_fixed):
    rng = _substream(rep_seq, _STREAM_DATA)
    if X_fixed is None:
        X = rng.standard_normal((scenario.n, scenario.p))
    else:
        X = X_fixed
    beta = scenario.draw_coefficients(rng)
    y = X @ beta + np.sqrt(scenario.sigma2) * rng.standard_normal(scenario.n)
    return RegressionData(y=y, X=X), beta


def _shared_null(scenario, X_fixed, alpha, mc_reps, seed):
    """Null quantiles shared across replicates of one scenario.

    The least-squares null depends only on p; the ridge null additionally
    depends on the (fixed) design.
    """
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(0xD, 1))
    )
    if X_fixed is None:
        sample = null_statistic_sample(scenario.p, mc_reps, rng)
        return None, sample
    decomp = design_decomposition(X_fixed)
    sample = null_statistic_sample(scenario.p, mc_reps, rng, null_map=decomp.null_map)
    return decomp, sample


def _test_with_shared_null(data, decomp, null_sample, alpha):
    """Evaluate the test statistic against a precomputed null sample."""
    from .testing import _outcome_from_sample, ols_estimate, ridge_estimate

    if decomp is None:
        beta_hat = ols_estimate(data)
        kind = "ols"
        delta2 = None
    else:
        beta_hat = ridge_estimate(data, decomp)
        kind = "ridge"
        delta2 = decomp.delta2
    statistic = empirical_kurtosis(beta_hat)
    diagnostic = decomp.trace_ratio if decomp is not None else None
    return _outcome_from_sample(statistic, null_sample, alpha, kind, delta2, diagnostic)


def _power_replicate(args):
    scenario, seed, rep, X_fixed, decomp, null_sample, alpha = args
    data, _ = _simulate_dataset(scenario, _replicate_rng(seed, rep), X_fixed)
    outcome = _test_with_shared_null(data, decomp, null_sample, alpha)
    return rep, outcome.statistic, outcome.reject

def run_power_study(
    scenarios,
    replicates: int,
    alpha: float = 0.05,
    seed: int = 0,
    mc_reps: int = 100_000,
    workers: int = 1,
) -> list[SimReport]:
    """Rejection-rate study over a scenario grid.

    Fresh designs per replicate when n > p; one fixed design per scenario
    (with the null sample computed once) when n <= p.  Deterministic for a
    given seed regardless of ``workers``.
    """
    if not scenarios:
        raise DomainError("scenario grid is empty")
    reports = []
    for scenario in scenarios:
        X_fixed = _scenario_design(scenario, seed) if scenario.n <= scenario.p else None
        decomp, null_sample = _shared_null(scenario, X_fixed, alpha, mc_reps, seed)
        args = [
            (scenario, seed, rep, X_fixed, decomp, null_sample, alpha)
            for rep in range(replicates)
        ]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(_power_replicate, args, chunksize=8))
        else:
            rows = [_power_replicate(a) for a in args]
        rows.sort(key=lambda r: r[0])
        stats = np.array([r[1] for r in rows])
        rejects = np.array([r[2] for r in rows])
        reports.append(
            SimReport(
                scenario=scenario,
                seed=seed,
                replicates=replicates,
                reject=rejects,
                statistics=stats,
                kind="ols" if X_fixed is None else "ridge",
            )
        )
    return reports


def _selection_metrics(beta_true, beta_hat):
    zero_agreement = float(np.mean((beta_true == 0.0) == (beta_hat == 0.0)))
    large_error = float(
        np.mean(np.abs(beta_true - beta_hat) > SELECTION_ERROR_THRESHOLD)
    )
    return zero_agreement, large_error


def _estimation_replicate(args):
    (scenario, seed, rep, X_fixed, decomp, null_sample, alpha, config) = args
    max_attempts = 50
    for attempt in range(max_attempts):
        rep_seq = _replicate_rng(seed, rep, attempt)
        data, beta_true = _simulate_dataset(scenario, rep_seq, X_fixed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StandardizationWarning)
            warnings.simplefilter("ignore", NonUniqueModeWarning)
            warnings.simplefilter("ignore", ClampedKurtosisWarning)
            outcome = _test_with_shared_null(data, decomp, null_sample, alpha)
            variances = estimate_variances(data)
            if variances.sigma2 == 0.0 or variances.tau2 == 0.0:
                continue  # regenerate; count reported per scenario
            shape = estimate_shape(data, kind=outcome.kind)
            sigma2 = variances.sigma2
            prior_kwargs = dict(
                max_iter=config.max_iter, tol=config.tol, restarts=config.restarts
            )
            arms = {}
            for name, q in (("laplace", 1.0), ("ep", shape.q)):
                root = np.random.SeedSequence(entropy=seed, spawn_key=(rep, attempt, 2))
                prior = EpPrior(tau2=variances.tau2, q=q)
                mode = coordinate_descent_mode(
                    data, prior, sigma2,
                    rng=_substream(root, _STREAM_MODE), **prior_kwargs,
                )
                draws = gibbs_sampler(
                    data, prior, sigma2,
                    iters=config.iters, burn_in=config.burn_in,
                    thinning=config.thinning, rng=_substream(root, _STREAM_GIBBS),
                )
                arms[name] = (mode, draws)
        mode_l, draws_l = arms["laplace"]
        mode_e, draws_e = arms["ep"]
        mse_l = float(np.mean((draws_l.mean - beta_true) ** 2))
        mse_e = float(np.mean((draws_e.mean - beta_true) ** 2))
        mse_gated = mse_e if outcome.reject else mse_l
        mode_gated = mode_e if outcome.reject else mode_l
        draws_gated = draws_e if outcome.reject else draws_l
        za_a, le_a = _selection_metrics(beta_true, mode_gated.beta)
        za_l, le_l = _selection_metrics(beta_true, mode_l.beta)
        return dict(
            rep=rep,
            attempts=attempt,
            reject=outcome.reject,
            statistic=outcome.statistic,
            q_hat=shape.q,
            q_clamped=shape.clamped,
            sigma2=variances.sigma2,
            tau2=variances.tau2,
            mse_adaptive=mse_gated,
            mse_laplace=mse_l,
            mse_ungated=mse_e,
            zero_agreement_adaptive=za_a,
            zero_agreement_laplace=za_l,
            large_error_adaptive=le_a,
            large_error_laplace=le_l,
            min_ess_adaptive=float(draws_gated.ess.min()),
            min_ess_laplace=float(draws_l.ess.min()),
        )
    raise BoundaryVarianceError(
        f"replicate {rep} hit the variance boundary {max_attempts} times in a row"
    )


def run_estimation_study(
    scenarios,
    replicates: int,
    alpha: float = 0.05,
    seed: int = 0,
    config: AdaptiveConfig | None = None,
    workers: int = 1,
) -> list[SimReport]:
    """Adaptive-versus-Laplace estimation study over a scenario grid.

    Per replicate: simulate, test, estimate variances and shape, then fit
    the Laplace arm and the estimated-shape arm with shared solver streams.
    The gated (adaptive) results pick between the arms by the test outcome;
    the ungated results always use the estimated shape.  Boundary-variance
    replicates are regenerated and counted.
    """
    if not scenarios:
        raise DomainError("scenario grid is empty")
    if config is None:
        config = AdaptiveConfig()
    reports = []
    for scenario in scenarios:
        X_fixed = _scenario_design(scenario, seed) if scenario.n <= scenario.p else None
        decomp, null_sample = _shared_null(scenario, X_fixed, alpha, config.mc_reps, seed)
        args = [
            (scenario, seed, rep, X_fixed, decomp, null_sample, alpha, config)
            for rep in range(replicates)
        ]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(_estimation_replicate, args, chunksize=1))
        else:
            rows = [_estimation_replicate(a) for a in args]
        rows.sort(key=lambda r: r["rep"])

        def col(name):
            return np.array([r[name] for r in rows])

        reports.append(
            SimReport(
                scenario=scenario,
                seed=seed,
                replicates=replicates,
                reject=col("reject"),
                statistics=col("statistic"),
                kind="ols" if X_fixed is None else "ridge",
                boundary_regenerations=int(col("attempts").sum()),
                mse_adaptive=col("mse_adaptive"),
                mse_laplace=col("mse_laplace"),
                mse_ungated=col("mse_ungated"),
                q_estimates=col("q_hat"),
                q_clamped=col("q_clamped"),
                sigma2_estimates=col("sigma2"),
                tau2_estimates=col("tau2"),
                zero_agreement_adaptive=col("zero_agreement_adaptive"),
                zero_agreement_laplace=col("zero_agreement_laplace"),
                large_error_adaptive=col("large_error_adaptive"),
                large_error_laplace=col("large_error_laplace"),
                min_ess_adaptive=col("min_ess_adaptive"),
                min_ess_laplace=col("min_ess_laplace"),
            )
        )
    return reports


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_power_csv(report: SimReport, path: str) -> None:
    """One row per replicate: statistic and rejection flag."""
    header = ["replicate", "statistic", "reject"]
    rows = [
        [i, repr(float(s)), int(r)]
        for i, (s, r) in enumerate(zip(report.statistics, report.reject))
    ]
    _write_csv(path, header, rows)


def write_estimation_csv(report: SimReport, path: str) -> None:
    """One row per replicate with errors, metrics and diagnostics."""
    header = [
        "replicate", "reject", "statistic", "q_hat", "q_clamped",
        "sigma2_hat", "tau2_hat",
        "mse_adaptive", "mse_laplace", "mse_ungated",
        "zero_agreement_adaptive", "zero_agreement_laplace",
        "large_error_adaptive", "large_error_laplace",
        "min_ess_adaptive", "min_ess_laplace",
    ]
    rows = []
    for i in range(len(report.reject)):
        rows.append([
            i,
            int(report.reject[i]),
            repr(float(report.statistics[i])),
            repr(float(report.q_estimates[i])),
            int(report.q_clamped[i]),
            repr(float(report.sigma2_estimates[i])),
            repr(float(report.tau2_estimates[i])),
            repr(float(report.mse_adaptive[i])),
            repr(float(report.mse_laplace[i])),
            repr(float(report.mse_ungated[i])),
            repr(float(report.zero_agreement_adaptive[i])),
            repr(float(report.zero_agreement_laplace[i])),
            repr(float(report.large_error_adaptive[i])),
            repr(float(report.large_error_laplace[i])),
            repr(float(report.min_ess_adaptive[i])),
            repr(float(report.min_ess_laplace[i])),
        ])
    _write_csv(path, header, rows)
