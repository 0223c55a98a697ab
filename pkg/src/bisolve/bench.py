"""Head-to-head benchmark harness for the two stationarity systems.

Runs the solver over a grid of penalization weights per problem and model,
computes accuracy metrics against the recorded best known values, picks the
best weight per model, and renders the results as CSV plus a human-readable
summary with per-weight aggregates.
"""

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .newton import (STATUS_CONVERGED, SolverConfig, default_start,
                     get_system, solve)

THREADS_ENV_VAR = "BISOLVE_THREADS"

CSV_COLUMNS = ["problem", "model", "lambda", "status", "iterations",
               "time_ms", "F", "f", "residual", "eoc", "alpha_last"]


class UnknownStatus(ValueError):
    """Accuracy metrics were requested for a problem with no known values."""


@dataclass(frozen=True)
class LambdaSet:
    """A strictly increasing grid of penalization weights."""

    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("weights must be strictly increasing")
        object.__setattr__(self, "values", vals)

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


def default_lambda_grid():
    """Powers of two from 1/8 to 128 (11 weights)."""
    return LambdaSet(tuple(float(2.0 ** k) for k in range(-3, 8)))


def boc_lambda_grid():
    """Half-integer powers of two from 1/4 to 4 (9 weights)."""
    return LambdaSet(tuple(float(2.0 ** (k / 2.0)) for k in range(-4, 5)))


@dataclass
class SweepRow:
    """One (problem, model, lambda) solver run."""

    problem: str
    model: str
    lam: float
    status: str
    iterations: int
    time_ms: float
    F: float
    f: float
    residual: float
    eoc: Optional[float]
    alpha_last: Optional[float]
    delta_F: Optional[float] = None
    delta_f: Optional[float] = None
    delta: Optional[float] = None


def delta_metrics(F_value, f_value, known_F, known_f, status):
    """Relative accuracy of a run against the recorded objective values.

    Each deviation is scaled by ``max(1, |known value|)``. For a certified
    optimum the metric is the worst absolute deviation; for a merely best
    known value it is the worst signed deviation (landing below a best
    known value is an improvement, not an error). Raises
    :class:`UnknownStatus` when no reference values exist.
    """
    if status == "unknown":
        raise UnknownStatus("problem has no reference objective values")
    dF = (F_value - known_F) / max(1.0, abs(known_F))
    df = (f_value - known_f) / max(1.0, abs(known_f))
    if status == "optimal":
        delta = max(abs(dF), abs(df))
    else:
        delta = max(dF, df)
    return dF, df, delta


def _run_one(problem, model, lam, config, x0, y0):
    cfg = replace(config, lam=float(lam))
    start = default_start(problem, model, x0=x0, y0=y0)
    report = solve(get_system(model), problem, cfg, start)
    row = SweepRow(
        problem=problem.name,
        model=model,
        lam=float(lam),
        status=report.status,
        iterations=report.iterations,
        time_ms=report.time_ms,
        F=report.F,
        f=report.f,
        residual=report.residual,
        eoc=report.eoc,
        alpha_last=report.alpha_last,
    )
    if problem.status != "unknown":
        row.delta_F, row.delta_f, row.delta = delta_metrics(
            row.F, row.f, problem.known_F, problem.known_f, problem.status)
    return row


def _worker_count(n_tasks):
    env = os.environ.get(THREADS_ENV_VAR)
    if env is not None:
        try:
            cap = int(env)
        except ValueError:
            raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got {env!r}")
        cap = max(1, cap)
    else:
        cap = min(4, os.cpu_count() or 1)
    return max(1, min(cap, n_tasks))


def sweep(problem, models=("kkt", "llvf"), lambdas=None, config=None,
          x0=None, y0=None):
    """Solve ``problem`` for every (model, lambda) pair.

    Returns rows ordered by model then weight. Runs are independent, so
    they execute on a thread pool capped by the ``BISOLVE_THREADS``
    environment variable (small default otherwise).
    """
    if isinstance(models, str):
        models = (models,)
    lambdas = default_lambda_grid() if lambdas is None else lambdas
    config = config or SolverConfig(lam=1.0)
    tasks = [(model, lam) for model in models for lam in lambdas]
    workers = _worker_count(len(tasks))
    if workers == 1:
        rows = [_run_one(problem, model, lam, config, x0, y0)
                for model, lam in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(
                lambda task: _run_one(problem, task[0], task[1], config, x0, y0),
                tasks))
    return rows


def select_lambda_star(rows, status):
    """Pick the best weight from a sweep of one (problem, model) pair.

    Converged rows are preferred; among them the winner minimizes the
    accuracy metric (or, for problems with no reference values, the upper
    objective F). Ties break toward the smallest weight. If every run
    failed, the row with the smallest final residual is returned so its
    failure status propagates to the caller.
    """
    rows = sorted(rows, key=lambda r: r.lam)
    if not rows:
        return None, None
    converged = [r for r in rows if r.status == STATUS_CONVERGED]

    def finite_or_inf(value):
        value = float(value) if value is not None else np.inf
        return value if np.isfinite(value) else np.inf

    if converged:
        if status == "unknown":
            best = min(converged, key=lambda r: (finite_or_inf(r.F), r.lam))
        else:
            best = min(converged, key=lambda r: (finite_or_inf(r.delta), r.lam))
    else:
        best = min(rows, key=lambda r: (finite_or_inf(r.residual), r.lam))
    return best.lam, best


def group_of(problem, probes=5, seed=0, tol=1e-10):
    """Curvature group of a problem: ``"A"`` when the third-order
    contraction of the lower-level data vanishes at random probe points
    (quadratic/affine data), ``"B"`` otherwise.
    """
    rng = np.random.default_rng(seed)
    d = problem.dims
    for _ in range(probes):
        x = rng.standard_normal(d.n)
        y = rng.standard_normal(d.m)
        z = rng.standard_normal(d.q)
        s = rng.standard_normal(d.m)
        T = problem.third_contract(x, y, z, s)
        if np.max(np.abs(T), initial=0.0) > tol:
            return "B"
    return "A"


def _fmt(value, digits=10):
    if value is None:
        return ""
    value = float(value)
    if not np.isfinite(value):
        return repr(value)
    return f"{value:.{digits}g}"


def rows_to_csv(rows):
    """Render sweep rows as CSV text with the standard column set."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([
            r.problem, r.model, _fmt(r.lam), r.status, r.iterations,
            _fmt(r.time_ms, 6), _fmt(r.F), _fmt(r.f), _fmt(r.residual, 6),
            _fmt(r.eoc, 6), _fmt(r.alpha_last, 6),
        ])
    return buf.getvalue()


@dataclass(frozen=True)
class RenderedReports:
    """CSV text, human-readable summary, and the aggregate data behind it."""

    csv: str
    text: str
    data: dict


def _aggregate(rows):
    """Per (model, lambda) aggregates across problems."""
    keys = sorted({(r.model, r.lam) for r in rows}, key=lambda k: (k[0], k[1]))
    out = []
    for model, lam in keys:
        bucket = [r for r in rows if r.model == model and r.lam == lam]
        iters = np.array([r.iterations for r in bucket], dtype=float)
        times = np.array([r.time_ms for r in bucket], dtype=float)
        converged = [r for r in bucket if r.status == STATUS_CONVERGED]
        full_steps = [r for r in converged
                      if r.alpha_last is not None and r.alpha_last == 1.0]
        total_iters = float(iters.sum())
        out.append({
            "model": model,
            "lambda": lam,
            "runs": len(bucket),
            "mean_iterations": float(iters.mean()),
            "mean_time_ms": float(times.mean()),
            "time_per_iteration_ms": (float(times.sum()) / total_iters
                                      if total_iters > 0 else None),
            "failures": len(bucket) - len(converged),
            "full_steps": len(full_steps),
        })
    return out


def render_reports(rows, groups=None):
    """Render sweep rows into CSV plus a summary report.

    ``groups`` optionally maps problem name to its curvature group; when
    given, the summary also aggregates failure counts per group, which is
    where the two systems differ most (the value-function system sees no
    third-order terms at all).
    """
    csv_text = rows_to_csv(rows)
    aggregates = _aggregate(rows)

    lines = []
    header = (f"{'model':<6} {'lambda':>10} {'runs':>5} {'mean iter':>10} "
              f"{'mean ms':>10} {'ms/iter':>9} {'fail':>5} {'full':>5}")
    lines.append(header)
    lines.append("-" * len(header))
    for agg in aggregates:
        per_iter = agg["time_per_iteration_ms"]
        lines.append(
            f"{agg['model']:<6} {agg['lambda']:>10.4g} {agg['runs']:>5d} "
            f"{agg['mean_iterations']:>10.1f} {agg['mean_time_ms']:>10.3f} "
            f"{(f'{per_iter:.4f}' if per_iter is not None else '-'):>9} "
            f"{agg['failures']:>5d} {agg['full_steps']:>5d}"
        )

    data = {"per_lambda": aggregates}

    totals = []
    for model in sorted({r.model for r in rows}):
        bucket = [r for r in rows if r.model == model]
        conv = [r for r in bucket if r.status == STATUS_CONVERGED]
        iters = sum(r.iterations for r in bucket)
        time_total = sum(r.time_ms for r in bucket)
        totals.append({
            "model": model,
            "runs": len(bucket),
            "converged": len(conv),
            "total_iterations": iters,
            "total_time_ms": time_total,
            "time_per_iteration_ms": time_total / iters if iters else None,
        })
    data["per_model"] = totals
    lines.append("")
    for tot in totals:
        per_iter = tot["time_per_iteration_ms"]
        per_iter_txt = f"{per_iter:.4f} ms/iter" if per_iter is not None else "-"
        lines.append(
            f"{tot['model']}: {tot['converged']}/{tot['runs']} converged, "
            f"{tot['total_iterations']} iterations, "
            f"{tot['total_time_ms']:.1f} ms total, {per_iter_txt}"
        )

    if groups:
        by_group = {}
        for r in rows:
            grp = groups.get(r.problem)
            if grp is None:
                continue
            bucket = by_group.setdefault((grp, r.model), [0, 0])
            bucket[0] += 1
            if r.status != STATUS_CONVERGED:
                bucket[1] += 1
        group_rows = [
            {"group": grp, "model": model, "runs": runs, "failures": fails}
            for (grp, model), (runs, fails) in sorted(by_group.items())
        ]
        data["per_group"] = group_rows
        lines.append("")
        lines.append("group  model  runs  failures")
        for gr in group_rows:
            lines.append(
                f"{gr['group']:<6} {gr['model']:<6} {gr['runs']:>4d}  {gr['failures']:>4d}"
            )

    return RenderedReports(csv=csv_text, text="\n".join(lines) + "\n", data=data)
