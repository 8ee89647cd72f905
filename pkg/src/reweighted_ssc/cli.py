"""Command-line interface.

Subcommands: ``generate``, ``cluster``, ``sweep``, ``verify-duality`` and
``events``. Exit codes: 0 success, 1 configuration error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, load_config
from .data import load_dataset_csv, dataset_to_csv
from .errors import ConfigError, DataError, NumericalError
from .experiments import (
    VERIFY_COLUMNS,
    best_epsilon,
    monte_carlo_events,
    results_to_csv,
    run_single,
    run_sweep,
    verify_duality,
)
from .metrics import EventSpec
from .synthetic import affinity_matrix, generate

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    # usage mistakes are configuration errors, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers or a..b, got {text!r}") from None


def _common(p):
    p.add_argument("--config", metavar="PATH", help="JSON experiment configuration")
    p.add_argument("--seed", type=int, help="base seed (overrides the config)")
    p.add_argument("--out", metavar="PATH", help="output file")
    p.add_argument("--threads", type=int, default=1, help="worker processes (sweep only)")


def _model_flags(p):
    g = p.add_argument_group("generator")
    g.add_argument("--n", type=int)
    g.add_argument("--L", type=int)
    g.add_argument("--d", type=int)
    g.add_argument("--rho", type=float)
    g.add_argument("--density", type=float)
    g.add_argument("--sigma", type=float, help="noise scale for generation and the tau/lambda rules")


def _pipeline_flags(p):
    g = p.add_argument_group("pipeline")
    g.add_argument("--epsilon", type=float)
    g.add_argument("--unweighted", action="store_true", help="run the unweighted baseline")
    g.add_argument("--tol", type=float, help="solver tolerance")


def build_parser():
    parser = _Parser(prog="reweighted-ssc", description="Reweighted l1 sparse subspace clustering")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a synthetic dataset CSV")
    _common(p)
    _model_flags(p)

    p = sub.add_parser("cluster", help="cluster a dataset and report metrics")
    _common(p)
    _model_flags(p)
    _pipeline_flags(p)
    p.add_argument("--data", metavar="PATH", help="dataset CSV (default: generate from the config)")
    p.add_argument("--clusters", type=int, help="number of clusters (default: labels or eigengap)")
    p.add_argument("--labels-out", metavar="PATH", help="write predicted labels here")

    p = sub.add_parser("sweep", help="grid of runs over sigma, rho, epsilon and seeds")
    _common(p)
    _model_flags(p)
    p.add_argument("--sigmas", type=_floats)
    p.add_argument("--rhos", type=_floats)
    p.add_argument("--epsilons", type=_floats)
    p.add_argument("--seeds", type=_ints, help="comma list or a..b")
    p.add_argument("--timing", action="store_true", help="fill runtime_ms (makes output run-dependent)")
    p.add_argument("--no-resume", action="store_true", help="recompute rows already in --out")

    p = sub.add_parser("verify-duality", help="check support and witness properties on random instances")
    _common(p)
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--small", action="store_true", help="use n <= 10, m <= 5 instances")

    p = sub.add_parser("events", help="Monte-Carlo estimates of the recovery events")
    _common(p)
    _model_flags(p)
    _pipeline_flags(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--k-t", type=int)
    p.add_argument("--k-f", type=int)
    return parser


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    gen_changes = {k: getattr(args, k, None) for k in ("n", "L", "d", "rho", "density", "sigma")}
    if args.seed is not None:
        gen_changes["seed"] = args.seed
    gen = replace(cfg.generation, **{k: v for k, v in gen_changes.items() if v is not None})
    pipe = cfg.pipeline
    try:
        if getattr(args, "sigma", None) is not None:
            pipe = replace(pipe, sigma=args.sigma)
        if getattr(args, "epsilon", None) is not None:
            pipe = replace(pipe, epsilon=args.epsilon)
        if getattr(args, "unweighted", False):
            pipe = replace(pipe, weighted=False)
        if getattr(args, "tol", None) is not None:
            pipe = replace(pipe, solver=replace(pipe.solver, tol=args.tol))
    except DataError as exc:
        raise ConfigError(str(exc)) from exc
    cfg = replace(cfg, generation=gen, pipeline=pipe)
    if args.out is not None:
        cfg = replace(cfg, out=args.out)
    return cfg


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise ConfigError(f"cannot write {out}: {exc}") from exc


def cmd_generate(args):
    cfg = _config(args).validate()
    ensemble, data = generate(cfg.generation)
    _emit(dataset_to_csv(data), cfg.out)
    aff = np.array2string(affinity_matrix(ensemble), precision=10, suppress_small=True)
    print(f"realized affinity matrix:\n{aff}", file=sys.stdout if cfg.out else sys.stderr)
    return EXIT_OK


def cmd_cluster(args):
    cfg = _config(args).validate()
    if args.data:
        try:
            data = load_dataset_csv(args.data)
        except OSError as exc:
            raise DataError(f"cannot read {args.data}: {exc}") from exc
        # the generator parameters do not describe external data
        gen = None
    else:
        gen = cfg.generation
        _, data = generate(gen)
    rec, labels = run_single(data, cfg.pipeline, cfg.spectral, args.clusters, cfg.events)
    if gen is not None:
        rec.rho, rec.seed, rec.d, rec.density = gen.rho, gen.seed, gen.d, gen.density
    report = {k: v for k, v in asdict(rec).items()}
    if data.labels is None:
        for k in ("tdr", "ccr", "event1", "event2", "event3"):
            report[k] = "unavailable"
    _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", cfg.out)
    if args.labels_out:
        _emit("label\n" + "".join(f"{int(v)}\n" for v in labels), args.labels_out)
    return EXIT_OK


def cmd_sweep(args):
    cfg = _config(args)
    cfg = cfg.override(sigmas=args.sigmas, rhos=args.rhos, epsilons=args.epsilons, seeds=args.seeds)
    cfg.validate()
    rows = run_sweep(cfg, cfg.out, threads=args.threads, timing=args.timing, resume=not args.no_resume)
    if cfg.out is None:
        sys.stdout.write(results_to_csv(rows))
    failed = sum(1 for r in rows if r["error"])
    summary = sys.stderr if cfg.out is None else sys.stdout
    print(f"{len(rows)} rows, {failed} failed", file=summary)
    for b in best_epsilon(rows):
        print(f"rho={b['rho']:g} sigma={b['sigma']:g}: best epsilon {b['epsilon']:g} "
              f"(mean CCR {b['mean_ccr']:.4f} over {b['seeds']} seeds)", file=summary)
    return EXIT_OK


def cmd_verify_duality(args):
    if args.instances < 1:
        raise ConfigError("--instances must be >= 1")
    ranges = {"n_range": (2, 10), "m_range": (1, 5)} if args.small else {}
    rows = verify_duality(args.instances, seed=args.seed or 0, **ranges)
    _emit(results_to_csv(rows, VERIFY_COLUMNS), args.out)
    bad_support = sum(int(r["lemma21_violations"] or 0) for r in rows)
    bad_witness = sum(1 for r in rows if r["witness_valid"] != "1")
    errors = sum(1 for r in rows if r["error"])
    summary = sys.stderr if args.out is None else sys.stdout
    print(f"{len(rows)} instances: {bad_support} support violations, "
          f"{bad_witness} invalid witnesses, {errors} errors", file=summary)
    return EXIT_OK if bad_support == 0 and bad_witness == 0 else EXIT_NUMERICAL


def cmd_events(args):
    cfg = _config(args).validate()
    spec = cfg.events or EventSpec()
    try:
        spec = EventSpec(k_t=args.k_t if args.k_t is not None else spec.k_t,
                         k_f=args.k_f if args.k_f is not None else spec.k_f)
    except DataError as exc:
        raise ConfigError(str(exc)) from exc
    trials = args.trials if args.trials is not None else cfg.trials
    pipe = replace(cfg.pipeline, sigma=cfg.generation.sigma)
    est = monte_carlo_events(cfg.generation, pipe, spec, trials, cfg.generation.seed)
    lines = ["method,event,probability,se,trials,failed"]
    for name, e in est.items():
        for k in range(3):
            se = "" if e.se is None else repr(float(e.se[k]))
            lines.append(f"{name},{k + 1},{float(e.probabilities[k])!r},{se},{e.trials},{e.failed}")
    _emit("\n".join(lines) + "\n", cfg.out)
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "cluster": cmd_cluster,
    "sweep": cmd_sweep,
    "verify-duality": cmd_verify_duality,
    "events": cmd_events,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
