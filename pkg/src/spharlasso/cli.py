"""Command-line entry point: ``spharlasso <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .experiments import (
    DEFAULT_LAMBDAS,
    ExperimentConfig,
    deviation_diagnostic,
    emit_outputs,
    re_diagnostic,
    resolve_model,
    run_mse_experiment,
)
from .lasso import fit_path
from .model import DEFAULT_NOISE_ALPHA, oracle_bounds, stability_report
from .simulate import DEFAULT_BURN_IN, HarmonicSample, SeedSpec, simulate_field

log = logging.getLogger("spharlasso")


def _common(p: argparse.ArgumentParser, repeat_model: bool = False) -> None:
    if repeat_model:
        p.add_argument("--model", action="append", help="T1|T2|T3|T4 or model JSON path (repeatable)")
    else:
        p.add_argument("--model", default="T1", help="T1|T2|T3|T4 or path to a model JSON")
    p.add_argument("--truncation", type=int, default=50, help="number of multipoles L for built-in models")
    p.add_argument("--noise-alpha", type=float, default=DEFAULT_NOISE_ALPHA)
    p.add_argument("--seed", type=int, default=20240101)
    p.add_argument("--burn-in", type=int, default=DEFAULT_BURN_IN)
    p.add_argument("--threads", type=int, default=1, help="worker threads (never changes results)")


def _emit_json(doc, out: str | None) -> None:
    text = json.dumps(doc, indent=2)
    if out:
        Path(out).write_text(text)
    else:
        print(text)


def cmd_simulate(args) -> int:
    model = resolve_model(args.model, args.truncation, args.noise_alpha)
    sample = simulate_field(model, args.n_obs + model.p, args.burn_in, SeedSpec(args.seed), args.replication)
    sample.save(args.out)
    log.info("wrote %s (L=%d, n=%d, p=%d)", args.out, sample.L, sample.n, sample.p)
    return 0


def cmd_fit(args) -> int:
    sample = HarmonicSample.load(args.sample, p=args.order or 0)
    p = args.order or sample.p
    if p < 1:
        raise SystemExit("fit: autoregressive order unknown; pass --order")
    lambdas = args.lam or [0.0]
    fits = fit_path(sample, p, lambdas)
    docs = [f.to_dict() for f in fits]
    _emit_json(docs[0] if len(docs) == 1 else docs, args.out)
    return 0


def _experiment_configs(args) -> list[ExperimentConfig]:
    if args.config:
        doc = json.loads(Path(args.config).read_text())
        docs = doc if isinstance(doc, list) else [doc]
        return [ExperimentConfig.from_dict(d) for d in docs]
    configs = []
    for name in args.model or ["T1"]:
        is_builtin = name in ("T1", "T2", "T3", "T4")
        configs.append(ExperimentConfig(
            model_name=name if is_builtin else "custom",
            model_path=None if is_builtin else name,
            N=args.n_obs,
            L=args.truncation,
            B=args.replications,
            lambdas=args.lam or list(DEFAULT_LAMBDAS),
            noise_alpha=args.noise_alpha,
            burn_in=args.burn_in,
            master_seed=args.seed,
            threads=args.threads,
        ))
    return configs


def cmd_experiment(args) -> int:
    results = []
    for config in _experiment_configs(args):
        if args.config and args.threads > 1:
            config.threads = args.threads
        log.info("running %s: N=%d L=%d B=%d", config.model_name, config.N, config.L, config.B)
        results.append(run_mse_experiment(config))
    files = emit_outputs(results, args.out_dir)
    table = results[0].table
    for r in results[1:]:
        table = table.merge(r.table)
    names = list(table.columns)
    print("lambda," + ",".join(names))
    for i, lam in enumerate(table.lambdas):
        print(f"{lam:g}," + ",".join(f"{table.columns[m][i]:.5f}" for m in names))
    log.info("wrote %d files to %s", len(files), args.out_dir)
    return 0


def cmd_bounds(args) -> int:
    model = resolve_model(args.model, args.truncation, args.noise_alpha)
    report = stability_report(model, args.n_obs)
    doc = report.to_dict()
    doc["oracle_bounds"] = [
        {"lambda": lam, **oracle_bounds(model, model, args.n_obs, lam)._asdict()}
        for lam in (args.lam or [report.lambda_threshold])
    ]
    _emit_json(doc, args.out)
    return 0


def cmd_deviation(args) -> int:
    model = resolve_model(args.model, args.truncation, args.noise_alpha)
    rows = deviation_diagnostic(model, args.n_obs or [200, 400, 800, 1600], args.replications,
                                SeedSpec(args.seed), args.burn_in, args.threads)
    if args.out_dir:
        emit_outputs([], args.out_dir, deviation=rows)
    _emit_json(rows, None)
    return 0


def cmd_re_check(args) -> int:
    model = resolve_model(args.model, args.truncation, args.noise_alpha)
    result = re_diagnostic(model, args.n_obs, args.replications, SeedSpec(args.seed),
                           args.burn_in, args.threads)
    if args.out_dir:
        emit_outputs([], args.out_dir, re_check=result)
    _emit_json(result, None)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spharlasso", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate harmonic coefficients of a model")
    _common(p)
    p.add_argument("--n-obs", type=int, default=300, help="effective sample size N (n = N + p)")
    p.add_argument("--replication", type=int, default=0)
    p.add_argument("--out", required=True, help="output path; .csv for CSV, anything else binary")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit the per-multipole LASSO to a sample")
    p.add_argument("--sample", required=True)
    p.add_argument("--order", type=int, default=None, help="autoregressive order p")
    p.add_argument("--lambda", dest="lam", type=float, action="append")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("experiment", help="Monte Carlo MSE table over a penalty grid")
    _common(p, repeat_model=True)
    p.add_argument("--config", default=None, help="ExperimentConfig JSON (object or list)")
    p.add_argument("--n-obs", type=int, default=300)
    p.add_argument("--lambda", dest="lam", type=float, action="append")
    p.add_argument("--replications", type=int, default=100)
    p.add_argument("--out-dir", default="results")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("bounds", help="stability report and oracle bounds")
    _common(p)
    p.add_argument("--n-obs", type=int, default=300)
    p.add_argument("--lambda", dest="lam", type=float, action="append")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("deviation", help="deviation-condition Monte Carlo diagnostic")
    _common(p)
    p.add_argument("--n-obs", type=int, action="append")
    p.add_argument("--replications", type=int, default=50)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_deviation)

    p = sub.add_parser("re-check", help="restricted-eigenvalue Monte Carlo diagnostic")
    _common(p)
    p.add_argument("--n-obs", type=int, default=300)
    p.add_argument("--replications", type=int, default=50)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_re_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
