"""Experiment drivers: single runs, parameter sweeps, event Monte-Carlo and
duality verification.

Every function here is deterministic in its configuration. Sweep output is
a tidy CSV with a fixed, versioned column set (:data:`RESULT_COLUMNS`);
rows are sorted by ``(rho, sigma, epsilon, seed, weighted)`` before they are
written, so the file content does not depend on execution order.
"""

from __future__ import annotations

import csv
import io
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import Dataset
from .duality import (
    boundary_dictionary,
    check_lemma21,
    classify_constraints,
    dual_residual,
    representation_witness,
    verify_witness,
)
from .errors import ConfigError, SSCError
from .metrics import EventSpec, discovery_tally, event_indicators, metrics_report
from .pipeline import PipelineConfig, build_affinity, coarse_regress, refine_regress
from .solvers import SolveConfig, kkt_residual, solve_weighted_lasso
from .spectral import SpectralConfig, estimate_num_clusters, spectral_cluster
from .synthetic import GenerationConfig, build_equiaffine_subspaces, generate, sample_dataset

__all__ = [
    "SCHEMA_VERSION",
    "RESULT_COLUMNS",
    "VERIFY_COLUMNS",
    "RunRecord",
    "EventEstimate",
    "run_single",
    "sweep_cells",
    "run_sweep",
    "read_results",
    "results_to_csv",
    "best_epsilon",
    "trial_seed",
    "monte_carlo_events",
    "verify_duality",
]

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

RESULT_COLUMNS = [
    "schema_version", "rho", "sigma", "epsilon", "seed", "weighted",
    "dcr", "tdr", "ccr", "event1", "event2", "event3", "kkt_max", "runtime_ms",
    "n", "N", "L", "d", "density", "tau", "lambda_min", "lambda_median", "lambda_max",
    "degenerate_rows", "k_t", "k_f", "error",
]

VERIFY_COLUMNS = [
    "schema_version", "instance", "n", "m", "weighted", "lam", "kkt",
    "support_size", "active_size", "lemma21_violations", "witness_valid",
    "max_abs_a", "min_b", "reconstruction_error", "b_mismatch", "error",
]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if np.isnan(v) else repr(v)
    return str(v)


@dataclass
class RunRecord:
    """One pipeline run with everything needed to interpret it.

    Fields mirror :data:`RESULT_COLUMNS`. Generator fields are ``None`` for
    runs on external data; ``tdr``/``ccr`` are ``None`` when unavailable.
    """

    rho: float | None = None
    sigma: float | None = None
    epsilon: float | None = None
    seed: int | None = None
    weighted: bool = True
    dcr: float | None = None
    tdr: float | None = None
    ccr: float | None = None
    event1: float | None = None
    event2: float | None = None
    event3: float | None = None
    kkt_max: float | None = None
    runtime_ms: float | None = None
    n: int | None = None
    N: int | None = None
    L: int | None = None
    d: int | None = None
    density: float | None = None
    tau: float | None = None
    lambda_min: float | None = None
    lambda_median: float | None = None
    lambda_max: float | None = None
    degenerate_rows: int | None = None
    k_t: int | None = None
    k_f: int | None = None
    error: str | None = None
    schema_version: int = SCHEMA_VERSION

    def to_row(self) -> dict:
        d = asdict(self)
        return {k: _fmt(d[k]) for k in RESULT_COLUMNS}


def _lambda_summary(lambdas):
    good = lambdas[np.isfinite(lambdas)]
    if good.size == 0:
        return None, None, None
    return float(good.min()), float(np.median(good)), float(good.max())


def run_single(data: Dataset, pipe: PipelineConfig, spectral: SpectralConfig | None = None,
               L: int | None = None, spec: EventSpec | None = None, coarse=None):
    """Two-step regression, affinity graph and spectral clustering on ``data``.

    ``L`` defaults to the number of ground-truth clusters, or to the
    eigengap estimate when the data are unlabeled. ``coarse`` lets callers
    reuse a first-step fit across variants.

    Returns
    -------
    record : RunRecord
    labels : (N,) int array
    """
    spectral = spectral or SpectralConfig()
    spec = spec or EventSpec()
    if coarse is None:
        coarse = coarse_regress(data, pipe)
    coeffs = refine_regress(data, coarse, pipe)
    graph = build_affinity(coeffs)
    if L is None:
        L = data.num_clusters or estimate_num_clusters(graph, min(10, data.N))
    labeling = spectral_cluster(graph, L, spectral)
    report = metrics_report(coeffs, data.labels, labeling.labels if data.labels is not None else None)
    lmin, lmed, lmax = _lambda_summary(coeffs.lambdas)
    rec = RunRecord(
        sigma=pipe.sigma,
        epsilon=pipe.epsilon,
        weighted=pipe.weighted,
        dcr=report.dcr,
        tdr=report.tdr,
        ccr=report.ccr,
        kkt_max=float(coeffs.kkt.max()),
        n=data.n,
        N=data.N,
        L=L,
        tau=pipe.tau,
        lambda_min=lmin,
        lambda_median=lmed,
        lambda_max=lmax,
        degenerate_rows=len(coeffs.degenerate),
        k_t=spec.k_t,
        k_f=spec.k_f,
    )
    if data.labels is not None:
        e1, e2, e3 = event_indicators(discovery_tally(coeffs, data.labels), spec)
        rec.event1, rec.event2, rec.event3 = float(e1.mean()), float(e2.mean()), float(e3.mean())
    return rec, labeling.labels


# ---------------------------------------------------------------- sweeps

def _row_key(row: dict):
    return (float(row["rho"]), float(row["sigma"]), float(row["epsilon"]), int(row["seed"]),
            row["weighted"] == "1")


def _cell_key(rho, sigma, seed):
    return (float(rho), float(sigma), int(seed))


def sweep_cells(cfg):
    """``(rho, sigma, seed)`` triples of a sweep in canonical order."""
    return [(r, s, k) for r in cfg.rhos for s in cfg.sigmas for k in cfg.seeds]


def _run_cell(args):
    gen, pipe, spectral, spec, epsilons, rho, sigma, seed, timing, wanted = args
    base = dict(rho=rho, sigma=sigma, seed=seed, n=gen.n, L=gen.L, d=gen.d,
                density=gen.density, k_t=spec.k_t, k_f=spec.k_f)
    out = []

    def fail(msg):
        for eps in epsilons:
            for weighted in (False, True):
                if (eps, weighted) in wanted:
                    out.append(RunRecord(epsilon=eps, weighted=weighted, error=msg, **base).to_row())
        return out

    try:
        g = replace(gen, rho=rho, sigma=sigma, seed=seed).validate()
        _, data = generate(g)
        p = replace(pipe, sigma=sigma)
        t0 = time.perf_counter()
        coarse = coarse_regress(data, p)
        coarse_ms = 1e3 * (time.perf_counter() - t0)
    except SSCError as exc:
        return fail(f"{type(exc).__name__}: {exc}")

    variants = [(eps, True) for eps in epsilons if (eps, True) in wanted]
    if any((eps, False) in wanted for eps in epsilons):
        variants.insert(0, (epsilons[0], False))
    baseline = None
    for eps, weighted in variants:
        t0 = time.perf_counter()
        try:
            rec, _ = run_single(data, replace(p, epsilon=eps, weighted=weighted), spectral, gen.L, spec, coarse)
            err = None
        except SSCError as exc:
            rec, err = None, f"{type(exc).__name__}: {exc}"
        ms = coarse_ms + 1e3 * (time.perf_counter() - t0)
        if rec is None:
            rec = RunRecord(error=err)
        for k, v in base.items():
            setattr(rec, k, v)
        rec.runtime_ms = round(ms, 3) if timing else None
        if weighted:
            rec.epsilon = eps
            out.append(rec.to_row())
        else:
            baseline = rec
    if baseline is not None:
        # the baseline ignores epsilon; one row per epsilon keeps the grid rectangular
        for eps in epsilons:
            if (eps, False) in wanted:
                out.append(replace(baseline, epsilon=eps).to_row())
    return out


def read_results(path) -> list:
    """Rows of a results CSV as string dicts, validated against the schema."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RESULT_COLUMNS:
            raise ConfigError(f"{path} does not have the results schema v{SCHEMA_VERSION}")
        return list(reader)


def results_to_csv(rows, columns=RESULT_COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _atomic_write(path, text):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def run_sweep(cfg, out=None, threads: int = 1, timing: bool = False, resume: bool = True) -> list:
    """Full cross-product ``(sigma, rho, epsilon, seed) x {weighted, unweighted}``.

    With ``resume`` and an existing ``out`` file, rows already present are
    kept verbatim and only missing ones are computed. Failures are recorded
    in the ``error`` column and the sweep carries on. Cells run in
    ``threads`` worker processes when ``threads > 1``.

    Returns the sorted rows (string dicts) that were written.
    """
    cfg.validate()
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    spec = cfg.events or EventSpec()
    existing = {}
    if out is not None and resume and Path(out).exists():
        for row in read_results(out):
            existing[_row_key(row)] = row

    jobs = []
    for rho, sigma, seed in sweep_cells(cfg):
        wanted = {
            (eps, w) for eps in cfg.epsilons for w in (False, True)
            if (float(rho), float(sigma), float(eps), int(seed), w) not in existing
        }
        if wanted:
            jobs.append((cfg.generation, cfg.pipeline, cfg.spectral, spec, list(cfg.epsilons),
                         rho, sigma, seed, timing, wanted))

    rows = dict(existing)
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(j) for j in jobs]
    for batch in results:
        for row in batch:
            rows[_row_key(row)] = row
    ordered = [rows[k] for k in sorted(rows)]
    if out is not None:
        _atomic_write(out, results_to_csv(ordered))
    return ordered


def best_epsilon(rows) -> list:
    """Per ``(rho, sigma)``, the epsilon with the highest mean weighted CCR.

    Failed rows and rows without a CCR are ignored; ties go to the smaller
    epsilon.
    """
    groups = {}
    for row in rows:
        if row["weighted"] != "1" or row["error"] or row["ccr"] == "":
            continue
        key = (float(row["rho"]), float(row["sigma"]))
        groups.setdefault(key, {}).setdefault(float(row["epsilon"]), []).append(float(row["ccr"]))
    out = []
    for (rho, sigma), by_eps in sorted(groups.items()):
        means = {e: float(np.mean(v)) for e, v in by_eps.items()}
        top = max(means.values())
        eps = min(e for e, m in means.items() if m == top)
        out.append({"rho": rho, "sigma": sigma, "epsilon": eps, "mean_ccr": top,
                    "seeds": len(by_eps[eps])})
    return out


# ---------------------------------------------------------- Monte-Carlo

@dataclass
class EventEstimate:
    """Pooled per-sample event frequencies over the completed trials.

    ``se`` holds Wald standard errors ``sqrt(p (1 - p) / trials)``; it is
    ``None`` with fewer than two completed trials.
    """

    probabilities: np.ndarray
    se: np.ndarray | None
    trials: int
    failed: int
    errors: list = field(default_factory=list)


def trial_seed(seed: int, trial: int) -> int:
    """Derived data seed for one Monte-Carlo trial."""
    return int(np.random.SeedSequence([int(seed), int(trial)]).generate_state(1, np.uint32)[0])


def monte_carlo_events(gen: GenerationConfig, pipe: PipelineConfig, spec: EventSpec,
                       trials: int, seed: int) -> dict:
    """Estimate Pr(Event 1..3) for the weighted method and the baseline.

    The subspaces are drawn once from ``gen.seed``; each trial redraws the
    samples with :func:`trial_seed`, and both variants share the trial's
    data and coarse fit. A trial whose pipeline fails is skipped and
    counted. Returns ``{"weighted": EventEstimate, "unweighted": ...}``.
    """
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    gen.validate()
    ensemble = build_equiaffine_subspaces(gen.n, gen.L, gen.d, gen.rho, gen.seed)
    variants = {"weighted": replace(pipe, weighted=True), "unweighted": replace(pipe, weighted=False)}
    sums = {k: [] for k in variants}
    errors = []
    for t in range(trials):
        data = sample_dataset(ensemble, gen.density, gen.sigma, trial_seed(seed, t))
        try:
            coarse = coarse_regress(data, pipe)
            rates = {}
            for name, p in variants.items():
                tally = discovery_tally(refine_regress(data, coarse, p), data.labels)
                rates[name] = np.array([e.mean() for e in event_indicators(tally, spec)])
        except SSCError as exc:
            errors.append(f"trial {t}: {type(exc).__name__}: {exc}")
            continue
        for name, r in rates.items():
            sums[name].append(r)
    out = {}
    for name, per_trial in sums.items():
        done = len(per_trial)
        p = np.mean(per_trial, axis=0) if done else np.full(3, np.nan)
        se = np.sqrt(p * (1.0 - p) / done) if done >= 2 else None
        out[name] = EventEstimate(probabilities=p, se=se, trials=done, failed=len(errors), errors=list(errors))
    return out


# ------------------------------------------------------ duality checks

def verify_duality(instances: int, seed: int = 0, n_range=(6, 12), m_range=(3, 8),
                   lam_range=(0.05, 0.9), solver: SolveConfig | None = None,
                   activity_tol: float = 1e-6, slack: float = 1e-7) -> list:
    """Run random weighted-LASSO instances through the dual checks.

    Instance ``k`` draws ``n`` and ``m < n`` from the given inclusive
    ranges, a Gaussian dictionary and target, a level ``lam`` equal to a
    uniform draw from ``lam_range`` times the smallest level giving the zero
    solution, and (for odd
    ``k``) random weights in ``[0.05, 1]``. Each instance goes through the
    solver, the dual point, the constraint partition, the support check,
    the boundary dictionary and the representation witness.

    Returns one string-dict row per instance with :data:`VERIFY_COLUMNS`.
    """
    if instances < 1:
        raise ConfigError(f"instances must be >= 1, got {instances}")
    solver = solver or SolveConfig()
    rows = []
    for k in range(instances):
        rng = np.random.default_rng([int(seed), k])
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        m = int(rng.integers(m_range[0], min(m_range[1], n - 1) + 1))
        Y = rng.standard_normal((n, m))
        y = rng.standard_normal(n)
        weighted = k % 2 == 1
        w = rng.uniform(0.05, 1.0, m) if weighted else np.ones(m)
        lam = float(rng.uniform(*lam_range) * np.max(np.abs(Y.T @ y) / w))
        row = {"schema_version": SCHEMA_VERSION, "instance": k, "n": n, "m": m,
               "weighted": weighted, "lam": lam}
        try:
            sol = solve_weighted_lasso(Y, y, lam, w, solver)
            z = dual_residual(y, Y, w, sol, lam)
            part = classify_constraints(z, Y, w, activity_tol)
            report = check_lemma21(sol, part)
            wit = representation_witness(y, z, part, boundary_dictionary(Y, lam), w, sol)
            row.update(
                kkt=kkt_residual(Y, y, lam, w, sol),
                support_size=int(sol.support.size),
                active_size=int(part.active.size),
                lemma21_violations=int(report.violations.size),
                witness_valid=verify_witness(wit, slack),
                max_abs_a=float(np.max(np.abs(wit.a))) if wit.a.size else None,
                min_b=float(np.min(wit.b)) if wit.b.size else None,
                reconstruction_error=wit.reconstruction_error,
                b_mismatch=wit.b_mismatch,
            )
        except SSCError as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append({c: _fmt(row.get(c)) for c in VERIFY_COLUMNS})
    return rows
