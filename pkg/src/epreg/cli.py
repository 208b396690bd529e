"""Command-line front end: data ingestion, testing, fitting, simulation.

Exit codes: 0 success, 2 usage, 3 data problem, 4 boundary variance,
5 internal error.  Every command is deterministic given --seed; a manifest
written next to the outputs records the command line, seed and versions.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .data import load_csv
from .distributions import EpPrior, SpikeSlab
from .errors import BoundaryVarianceError, DataError, DomainError, EpregError
from .simulation import (
    _STREAM_TEST,
    AdaptiveConfig,
    Scenario,
    _substream,
    adaptive_estimate,
    run_estimation_study,
    run_power_study,
    write_estimation_csv,
    write_power_csv,
)
from .testing import laplace_test

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_BOUNDARY = 4
EXIT_INTERNAL = 5


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj]
    return obj


def _write_json(obj, path: Path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out_dir: Path, argv, seed, outputs, workers=1):
    manifest = {
        "command": list(argv),
        "seed": int(seed),
        "workers": int(workers),
        "versions": {
            "epreg": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "outputs": sorted(outputs),
    }
    _write_json(manifest, out_dir / "manifest.json")


def _add_data_args(parser):
    parser.add_argument("--csv", help="combined CSV with a named response column")
    parser.add_argument("--response", default="y", help="response column name")
    parser.add_argument("--y-csv", help="response-only CSV (with --x-csv)")
    parser.add_argument("--x-csv", help="design-only CSV (with --y-csv)")
    parser.add_argument(
        "--group-column",
        help="label column whose group means are removed from y and X",
    )
    parser.add_argument(
        "--standardize", action="store_true",
        help="center/rescale columns to squared norm n and y to unit sd",
    )


def _add_common_args(parser):
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--alpha", type=float, default=0.05)
    parser.add_argument("--mc-reps", type=int, default=1_000_000,
                        help="Monte Carlo draws for the null quantiles")
    parser.add_argument("--out-dir", default=".", help="directory for artifacts")


def _load(args):
    if args.csv:
        return load_csv(
            args.csv,
            response=args.response,
            standardize_data=args.standardize,
            group_column=args.group_column,
        )
    if args.y_csv and args.x_csv:
        return load_csv(
            path_y=args.y_csv, path_x=args.x_csv, standardize_data=args.standardize
        )
    raise DataError("provide --csv or both --y-csv and --x-csv")


def _test_report(data, outcome, alpha, seed):
    return {
        "n": data.n,
        "p": data.p,
        "kind": outcome.kind,
        "delta2": outcome.delta2,
        "statistic": outcome.statistic,
        "lower_quantile": outcome.lower_quantile,
        "upper_quantile": outcome.upper_quantile,
        "null_tail_prob": outcome.null_tail_prob,
        "reject": outcome.reject,
        "alpha": alpha,
        "mc_reps": outcome.mc_reps,
        "seed": seed,
        "trace_diagnostic": outcome.trace_diagnostic,
        "standardized": data.standardized,
    }


def cmd_test(args, argv):
    data = _load(args)
    rng = _substream(np.random.SeedSequence(args.seed), _STREAM_TEST)
    outcome = laplace_test(data, alpha=args.alpha, mc_reps=args.mc_reps, rng=rng)
    report = _test_report(data, outcome, args.alpha, args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(report, out_dir / "test_report.json")
    _write_manifest(out_dir, argv, args.seed, ["test_report.json"])
    print(
        f"n={data.n} p={data.p} kind={outcome.kind} "
        f"delta2={'-' if outcome.delta2 is None else f'{outcome.delta2:.4f}'} "
        f"statistic={outcome.statistic:.4f} "
        f"null=({outcome.lower_quantile:.4f}, {outcome.upper_quantile:.4f}) "
        f"tail_prob={outcome.null_tail_prob:.4f} reject={outcome.reject}"
    )
    return EXIT_OK


def _fit_summary(result, label):
    info = {"q": result.q_used}
    if result.mode is not None:
        info.update(
            mode_sparsity=result.mode.sparsity_rate,
            mode_objective=result.mode.objective,
            mode_iterations=result.mode.iterations,
            mode_converged=result.mode.converged,
            mode_restarts=result.mode.restarts,
        )
    if result.draws is not None:
        info.update(
            min_ess=float(result.draws.ess.min()),
            retained_draws=int(result.draws.draws.shape[0]),
        )
    return info


def _coefficient_rows(fits):
    """Per-coordinate table across fit arms; columns depend on summaries."""
    labels = list(fits)
    p = None
    header = ["index"]
    columns = []
    for label in labels:
        result = fits[label]
        if result.mode is not None:
            header.append(f"{label}_mode")
            columns.append(result.mode.beta)
            p = len(result.mode.beta)
        if result.draws is not None:
            draws = result.draws.draws
            header += [
                f"{label}_mean", f"{label}_q025", f"{label}_q500",
                f"{label}_q975", f"{label}_ess",
            ]
            qs = np.quantile(draws, [0.025, 0.5, 0.975], axis=0)
            columns += [draws.mean(axis=0), qs[0], qs[1], qs[2], result.draws.ess]
            p = draws.shape[1]
    rows = [[j] + [repr(float(col[j])) for col in columns] for j in range(p)]
    return header, rows


def cmd_fit(args, argv):
    data = _load(args)
    config = AdaptiveConfig(
        alpha=args.alpha,
        mc_reps=args.mc_reps,
        iters=args.iters,
        burn_in=args.burn_in,
        thinning=args.thin,
        tol=args.tol,
        restarts=args.restarts,
    )
    result = adaptive_estimate(data, args.seed, config=config, summary=args.summary)
    fits = {}
    if result.test.reject:
        laplace_arm = adaptive_estimate(
            data, args.seed, config=config, summary=args.summary, force_q=1.0
        )
        fits["laplace"] = laplace_arm
        fits["ep"] = result
    else:
        fits["laplace"] = result

    report = {
        "n": data.n,
        "p": data.p,
        "seed": args.seed,
        "test": _test_report(data, result.test, args.alpha, args.seed),
        "sigma2_hat": result.sigma2,
        "tau2_hat": result.tau2,
        "q_used": result.q_used,
        "q_estimate": result.q_estimate,
        "chain": {
            "iters": args.iters, "burn_in": args.burn_in, "thinning": args.thin,
        },
        "fits": {label: _fit_summary(r, label) for label, r in fits.items()},
    }
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(report, out_dir / "fit_result.json")
    header, rows = _coefficient_rows(fits)
    with open(out_dir / "coefficients.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    _write_manifest(out_dir, argv, args.seed, ["fit_result.json", "coefficients.csv"])
    arm = "ep" if result.test.reject else "laplace"
    print(
        f"test reject={result.test.reject} -> prior={arm} q={result.q_used:.4f} "
        f"sigma2={result.sigma2:.4f} tau2={result.tau2:.4f}"
    )
    return EXIT_OK


def _parse_grid(text, kind=float):
    try:
        return [kind(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise DomainError(f"could not parse grid {text!r}") from None


def _scenarios_from_args(args):
    ns = _parse_grid(args.n, int)
    ps = _parse_grid(args.p, int)
    if (args.q is None) == (args.pi is None):
        raise DomainError("provide exactly one of --q or --pi")
    truths = (
        [EpPrior(tau2=args.tau2, q=q) for q in _parse_grid(args.q)]
        if args.q is not None
        else [SpikeSlab(pi=pi, tau2=args.tau2) for pi in _parse_grid(args.pi)]
    )
    return [
        Scenario(n=n, p=p, truth=truth, sigma2=args.sigma2)
        for n in ns for p in ps for truth in truths
    ]


def _truth_dict(truth):
    if isinstance(truth, EpPrior):
        return {"family": "ep", "q": truth.q, "tau2": truth.tau2}
    return {"family": "spike_slab", "pi": truth.pi, "tau2": truth.tau2}


def cmd_simulate(args, argv):
    scenarios = _scenarios_from_args(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = ["summary.json"]
    rows = []
    if args.study == "power":
        reports = run_power_study(
            scenarios,
            replicates=args.reps,
            alpha=args.alpha,
            seed=args.seed,
            mc_reps=args.mc_reps,
            workers=args.workers,
        )
        for report in reports:
            name = f"power_{report.scenario.label}.csv"
            write_power_csv(report, out_dir / name)
            outputs.append(name)
            rows.append({
                "label": report.scenario.label,
                "n": report.scenario.n,
                "p": report.scenario.p,
                "truth": _truth_dict(report.scenario.truth),
                "replicates": report.replicates,
                "statistic_kind": report.kind,
                "rejection_rate": report.rejection_rate,
                "rejection_se": report.rejection_se,
                "rows_csv": name,
            })
            print(f"{report.scenario.label}: reject rate "
                  f"{report.rejection_rate:.3f} (se {report.rejection_se:.3f})")
    else:
        config = AdaptiveConfig(
            alpha=args.alpha,
            mc_reps=args.mc_reps,
            iters=args.iters,
            burn_in=args.burn_in,
            thinning=args.thin,
            restarts=args.restarts,
        )
        reports = run_estimation_study(
            scenarios,
            replicates=args.reps,
            alpha=args.alpha,
            seed=args.seed,
            config=config,
            workers=args.workers,
        )
        for report in reports:
            name = f"estimate_{report.scenario.label}.csv"
            write_estimation_csv(report, out_dir / name)
            outputs.append(name)
            rows.append({
                "label": report.scenario.label,
                "n": report.scenario.n,
                "p": report.scenario.p,
                "truth": _truth_dict(report.scenario.truth),
                "replicates": report.replicates,
                "statistic_kind": report.kind,
                "rejection_rate": report.rejection_rate,
                "rejection_se": report.rejection_se,
                "boundary_regenerations": report.boundary_regenerations,
                "mean_mse_adaptive": float(report.mse_adaptive.mean()),
                "mean_mse_laplace": float(report.mse_laplace.mean()),
                "mean_mse_ungated": float(report.mse_ungated.mean()),
                "frac_adaptive_better": float(
                    np.mean(report.mse_adaptive < report.mse_laplace)
                ),
                "rows_csv": name,
            })
            print(f"{report.scenario.label}: reject rate "
                  f"{report.rejection_rate:.3f}, mse adaptive/laplace "
                  f"{report.mse_adaptive.mean():.4f}/{report.mse_laplace.mean():.4f}")
    summary = {"study": args.study, "scenarios": rows}
    _write_json(summary, out_dir / "summary.json")
    _write_manifest(out_dir, argv, args.seed, outputs, workers=args.workers)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="epreg",
        description="Kurtosis-based Laplace prior checks and adaptive "
        "l_q-penalized regression",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="test whether a Laplace prior fits")
    _add_data_args(p_test)
    _add_common_args(p_test)

    p_fit = sub.add_parser("fit", help="two-stage adaptive coefficient fit")
    _add_data_args(p_fit)
    _add_common_args(p_fit)
    p_fit.add_argument("--summary", choices=["mode", "mean", "both"], default="both")
    p_fit.add_argument("--iters", type=int, default=1_000_500)
    p_fit.add_argument("--burn-in", type=int, default=500)
    p_fit.add_argument("--thin", type=int, default=20)
    p_fit.add_argument("--restarts", type=int, default=100)
    p_fit.add_argument("--tol", type=float, default=1e-10)

    p_sim = sub.add_parser("simulate", help="run simulation studies")
    p_sim.add_argument("study", choices=["power", "estimate"])
    _add_common_args(p_sim)
    p_sim.set_defaults(mc_reps=100_000)
    p_sim.add_argument("--q", help="comma-separated shape values for the truth")
    p_sim.add_argument("--pi", help="comma-separated slab probabilities")
    p_sim.add_argument("--n", required=True, help="comma-separated sample sizes")
    p_sim.add_argument("--p", required=True, help="comma-separated dimensions")
    p_sim.add_argument("--tau2", type=float, default=1.0)
    p_sim.add_argument("--sigma2", type=float, default=1.0)
    p_sim.add_argument("--reps", type=int, default=100)
    p_sim.add_argument("--workers", type=int, default=1)
    p_sim.add_argument("--iters", type=int, default=10_500)
    p_sim.add_argument("--burn-in", type=int, default=500)
    p_sim.add_argument("--thin", type=int, default=1)
    p_sim.add_argument("--restarts", type=int, default=100)
    return parser


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    if not 0.0 < args.alpha < 1.0:
        print(f"usage error: --alpha must be in (0, 1), got {args.alpha}", file=sys.stderr)
        return EXIT_USAGE
    if args.mc_reps < 1000:
        print(f"usage error: --mc-reps must be >= 1000, got {args.mc_reps}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "test":
            return cmd_test(args, argv)
        if args.command == "fit":
            return cmd_fit(args, argv)
        return cmd_simulate(args, argv)
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BoundaryVarianceError as exc:
        print(f"boundary variance: {exc}", file=sys.stderr)
        return EXIT_BOUNDARY
    except (EpregError, Exception) as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
