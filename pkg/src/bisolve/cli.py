"""Command-line client for the toolkit.

Thin wrapper over the handlers in :mod:`bisolve.service` (the same ones the
HTTP API serves), so no server needs to run. Exit codes: 0 on success, 1
when a requested run fails (solver did not converge, fixture gate failed),
2 on bad arguments or malformed input files.
"""

import argparse
import json
import os
import sys

import yaml

from . import service
from .problems import DimensionError, ParseError, SymmetryError

_FORMATS = ("text", "json")


def _read_file(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc}") from None


class _UsageError(Exception):
    """Bad arguments or malformed input discovered after parsing."""


class _RunFailure(Exception):
    """The requested run completed but did not succeed."""


def _problem_kwargs(args):
    """Interpret --problem as a bundled name or a problem-file path."""
    name = args.problem
    if name is None:
        raise _UsageError("--problem is required")
    if os.path.sep in name or name.endswith((".yaml", ".yml")) or os.path.exists(name):
        return {"text": _read_file(name)}
    return {"name": name, "half_dim": getattr(args, "half_dim", None)}


def _emit(args, payload, text_renderer):
    output = (json.dumps(payload, indent=2, default=str) + "\n"
              if args.format == "json" else text_renderer())
    destination = getattr(args, "output", None)
    if destination:
        with open(destination, "w", encoding="utf-8") as handle:
            handle.write(output)
    else:
        sys.stdout.write(output)


def _cmd_list(args):
    infos = service.handle_list()

    def render():
        lines = [f"{'name':<24} {'n':>3} {'m':>3} {'p':>3} {'q':>3} "
                 f"{'grp':>3} {'status':<8} {'F*':>10} {'f*':>10}"]
        for info in infos:
            f_star = "-" if info.known_F is None else f"{info.known_F:.4g}"
            low = "-" if info.known_f is None else f"{info.known_f:.4g}"
            lines.append(
                f"{info.name:<24} {info.n:>3} {info.m:>3} {info.p:>3} "
                f"{info.q:>3} {info.group:>3} {info.status:<8} "
                f"{f_star:>10} {low:>10}"
            )
        return "\n".join(lines) + "\n"

    _emit(args, [info.model_dump(by_alias=True) for info in infos], render)
    return 0


def _cmd_solve(args):
    kwargs = _problem_kwargs(args)
    request = service.SolveRequest(
        problem=kwargs.get("name"), problem_text=kwargs.get("text"),
        model=args.model, lam=args.lam, epsilon=args.epsilon,
        max_iter=args.max_iter,
        x0=_parse_vector(args.x0), y0=_parse_vector(args.y0),
        half_dim=kwargs.get("half_dim"),
    )
    response = service.handle_solve(request)

    def render():
        lines = [
            f"problem   : {response.problem}",
            f"model     : {response.model}   lambda = {response.lam:g}",
            f"status    : {response.status}",
            f"iterations: {response.iterations}",
            f"residual  : {response.residual:.3e}",
            f"F = {response.F:.10g}   f = {response.f:.10g}",
        ]
        if response.eoc is not None:
            lines.append(f"eoc       : {response.eoc:.3f}")
        if response.alpha_last is not None:
            lines.append(f"last step : {response.alpha_last:g}")
        lines.append(f"time      : {response.time_ms:.2f} ms")
        for key, values in response.point.items():
            joined = ", ".join(f"{v:.6g}" for v in values)
            lines.append(f"  {key} = [{joined}]")
        return "\n".join(lines) + "\n"

    _emit(args, response.model_dump(by_alias=True), render)
    if response.status != "Converged":
        raise _RunFailure(f"solver finished with status {response.status}")
    return 0


def _cmd_sweep(args):
    kwargs = _problem_kwargs(args)
    models = ["kkt", "llvf"] if args.model == "both" else [args.model]
    request = service.SweepRequest(
        problem=kwargs.get("name"), problem_text=kwargs.get("text"),
        models=models, lambdas=_parse_vector(args.lambdas),
        epsilon=args.epsilon, max_iter=args.max_iter,
        half_dim=kwargs.get("half_dim"),
    )
    response = service.handle_sweep(request)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as handle:
            handle.write(response.csv)
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as handle:
            handle.write(response.summary)

    def render():
        parts = [response.csv]
        parts.append(response.summary)
        for model, star in response.lambda_star.items():
            if star.lam is None:
                parts.append(f"{model}: no runs\n")
                continue
            delta_txt = "" if star.delta is None else f", delta = {star.delta:.3e}"
            parts.append(
                f"{model}: lambda* = {star.lam:g} ({star.status}, "
                f"F = {star.F:.6g}{delta_txt})\n"
            )
        return "\n".join(parts)

    _emit(args, response.model_dump(by_alias=True), render)
    return 0


def _cmd_fixtures(args):
    response = service.handle_fixtures(args.problem)

    def render():
        lines = []
        for check in response.results:
            flag = "PASS" if check.passed else "FAIL"
            lines.append(
                f"[{flag}] {check.problem:<24} {check.model:<4} "
                f"lambda={check.lam:<6g} residual={check.residual:.3e} "
                f"tol={check.tol:g}"
            )
        lines.append("all passed" if response.all_passed else "FAILURES present")
        return "\n".join(lines) + "\n"

    _emit(args, response.model_dump(by_alias=True), render)
    if not response.all_passed:
        raise _RunFailure("fixture gate failed")
    return 0


def _cmd_diagnose(args):
    kwargs = _problem_kwargs(args)
    try:
        payload = yaml.safe_load(_read_file(args.point))
    except yaml.YAMLError as exc:
        raise _UsageError(f"point file is not valid YAML: {exc}") from None
    if not isinstance(payload, dict):
        raise _UsageError("point file must be a mapping of component names")
    request = service.DiagnoseRequest(
        problem=kwargs.get("name"), problem_text=kwargs.get("text"),
        model=args.model, lam=args.lam, point=payload,
        half_dim=kwargs.get("half_dim"),
    )
    response = service.handle_diagnose(request)

    def render():
        lines = [
            f"problem   : {response.problem}  model = {response.model}  "
            f"lambda = {response.lam:g}",
            f"residual  : {response.residual:.3e}",
            "stationarity violations: " + ", ".join(
                f"{k}={v:.2e}" for k, v in response.stationarity.items()),
        ]
        for name, block in response.blocks.items():
            lines.append(
                f"  {name:<6} eta={list(block.eta)} theta={list(block.theta)} "
                f"nu={list(block.nu)} violations={list(block.violations)}"
            )
        eig = "-" if response.min_eig is None else f"{response.min_eig:.6g}"
        lines.append(
            f"cone dim {response.cone_dim}, test dim {response.test_dim}, "
            f"min eig {eig}"
        )
        for name, value in response.verdicts.items():
            lines.append(f"  {name:<18}: {'holds' if value else 'FAILS'}")
        return "\n".join(lines) + "\n"

    _emit(args, response.model_dump(by_alias=True), render)
    return 0


def _parse_vector(text):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(part) for part in str(text).split(",") if part.strip()]
    except ValueError:
        raise _UsageError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bisolve",
        description="Semismooth-Newton solvers for optimistic bilevel programs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_model=True):
        p.add_argument("--problem", help="bundled problem name or problem-file path")
        p.add_argument("--half-dim", type=int, default=None,
                       help="size parameter for the scalable 'boc' family")
        if with_model:
            p.add_argument("--model", choices=("kkt", "llvf"), default="llvf")
        p.add_argument("--format", choices=_FORMATS, default="text")

    p_list = sub.add_parser("list", help="list bundled problems")
    p_list.add_argument("--format", choices=_FORMATS, default="text")
    p_list.set_defaults(func=_cmd_list)

    p_solve = sub.add_parser("solve", help="run the solver once")
    add_common(p_solve)
    p_solve.add_argument("--lambda", dest="lam", type=float, default=1.0,
                         help="penalization weight")
    p_solve.add_argument("--epsilon", type=float, default=1e-8)
    p_solve.add_argument("--max-iter", type=int, default=2000)
    p_solve.add_argument("--x0", help="comma-separated upper-level start")
    p_solve.add_argument("--y0", help="comma-separated lower-level start")
    p_solve.add_argument("--output", help="write the report to a file")
    p_solve.set_defaults(func=_cmd_solve)

    p_sweep = sub.add_parser("sweep", help="benchmark over a lambda grid")
    p_sweep.add_argument("--problem", help="bundled problem name or problem-file path")
    p_sweep.add_argument("--half-dim", type=int, default=None)
    p_sweep.add_argument("--model", choices=("kkt", "llvf", "both"),
                         default="both")
    p_sweep.add_argument("--format", choices=_FORMATS, default="text")
    p_sweep.add_argument("--lambdas", help="comma-separated weights "
                                           "(default: the standard grid)")
    p_sweep.add_argument("--epsilon", type=float, default=1e-8)
    p_sweep.add_argument("--max-iter", type=int, default=2000)
    p_sweep.add_argument("--csv", help="write the per-run table to a CSV file")
    p_sweep.add_argument("--summary", help="write the summary table to a file")
    p_sweep.add_argument("--output", help="write the full report to a file")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_fix = sub.add_parser("fixtures", help="run the bundled fixture gate")
    p_fix.add_argument("--problem", default=None,
                       help="restrict to one bundled problem")
    p_fix.add_argument("--format", choices=_FORMATS, default="text")
    p_fix.set_defaults(func=_cmd_fixtures)

    p_diag = sub.add_parser("diagnose", help="regularity report at a point")
    add_common(p_diag)
    p_diag.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p_diag.add_argument("--point", required=True,
                        help="YAML file mapping component names to lists")
    p_diag.add_argument("--output", help="write the report to a file")
    p_diag.set_defaults(func=_cmd_diagnose)

    return parser


def run(argv=None):
    """Parse arguments and execute one subcommand; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        return args.func(args)
    except _RunFailure as exc:
        print(f"bisolve: {exc}", file=sys.stderr)
        return 1
    except (_UsageError, service.ServiceError, ParseError, DimensionError,
            SymmetryError) as exc:
        print(f"bisolve: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"bisolve: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
