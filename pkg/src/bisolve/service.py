"""Request/response schemas and handlers shared by the HTTP API and CLI.

All toolkit behavior is reachable through the handler functions in this
module; :mod:`bisolve.api` exposes them over HTTP and :mod:`bisolve.cli`
calls them in process, so both clients see identical semantics.
"""

from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from . import bench, diagnostics, newton, suite
from .kkt import KktPoint, check_kkt_stationarity, s_stationarity_gap
from .llvf import LlvfPoint, check_llvf_stationarity
from .problems import load_quadratic_problem


class ServiceError(ValueError):
    """Invalid request content (unknown names, malformed payloads)."""


# ---------------------------------------------------------------------------
# Schemas
# ---------------------------------------------------------------------------


class ProblemInfo(BaseModel):
    name: str
    n: int
    m: int
    p: int
    q: int
    status: str
    known_F: Optional[float] = None
    known_f: Optional[float] = None
    group: str
    fixtures: int
    description: str = ""


class SolveRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    problem: Optional[str] = None
    problem_text: Optional[str] = None
    model: str = "llvf"
    lam: float = Field(default=1.0, alias="lambda")
    epsilon: float = 1e-8
    max_iter: int = 2000
    x0: Optional[List[float]] = None
    y0: Optional[List[float]] = None
    half_dim: Optional[int] = None


class SolveResponse(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    problem: str
    model: str
    lam: float = Field(alias="lambda")
    status: str
    iterations: int
    residual: float
    F: float
    f: float
    eoc: Optional[float] = None
    alpha_last: Optional[float] = None
    time_ms: float
    point: Dict[str, List[float]]
    residual_history: List[float]
    message: str = ""


class SweepRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    problem: Optional[str] = None
    problem_text: Optional[str] = None
    models: List[str] = ["kkt", "llvf"]
    lambdas: Optional[List[float]] = None
    epsilon: float = 1e-8
    max_iter: int = 2000
    half_dim: Optional[int] = None


class SweepRowModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    problem: str
    model: str
    lam: float = Field(alias="lambda")
    status: str
    iterations: int
    time_ms: float
    F: float
    f: float
    residual: float
    eoc: Optional[float] = None
    alpha_last: Optional[float] = None
    delta: Optional[float] = None


class LambdaStar(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lam: Optional[float] = Field(default=None, alias="lambda")
    status: Optional[str] = None
    F: Optional[float] = None
    f: Optional[float] = None
    delta: Optional[float] = None


class SweepResponse(BaseModel):
    problem: str
    group: str
    rows: List[SweepRowModel]
    lambda_star: Dict[str, LambdaStar]
    csv: str
    summary: str


class FixtureCheck(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    problem: str
    model: str
    lam: float = Field(alias="lambda")
    tol: float
    residual: float
    passed: bool
    description: str = ""


class FixturesResponse(BaseModel):
    results: List[FixtureCheck]
    all_passed: bool


class DiagnoseRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    problem: Optional[str] = None
    problem_text: Optional[str] = None
    model: str = "llvf"
    lam: float = Field(default=1.0, alias="lambda")
    point: Dict[str, List[float]]
    half_dim: Optional[int] = None


class BlockClassification(BaseModel):
    eta: List[int]
    theta: List[int]
    nu: List[int]
    violations: List[int]
    tau: float


class DiagnoseResponse(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    problem: str
    model: str
    lam: float = Field(alias="lambda")
    residual: float
    stationarity: Dict[str, float]
    blocks: Dict[str, BlockClassification]
    cone_dim: int
    test_dim: int
    min_eig: Optional[float] = None
    ssosc_ok: bool
    verdicts: Dict[str, bool]
    s_gap: Optional[float] = None


# ---------------------------------------------------------------------------
# Handlers
# ---------------------------------------------------------------------------


def resolve_problem(name=None, text=None, half_dim=None):
    """Locate a problem by bundled name or inline problem-file text."""
    if text is not None:
        return load_quadratic_problem(text), []
    if name is None:
        raise ServiceError("request needs either a problem name or problem text")
    try:
        return suite.get_problem(name, half_dim=half_dim)
    except KeyError as exc:
        raise ServiceError(str(exc)) from None


def handle_list():
    infos = []
    for name in suite.list_problems():
        problem, fixtures = suite.get_problem(name)
        d = problem.dims
        infos.append(ProblemInfo(
            name=name, n=d.n, m=d.m, p=d.p, q=d.q,
            status=problem.status, known_F=problem.known_F,
            known_f=problem.known_f, group=bench.group_of(problem),
            fixtures=len(fixtures), description=problem.description,
        ))
    return infos


def _point_to_dict(point):
    fields = ("x", "y", "z", "s", "u", "v", "w")
    out = {}
    for name in fields:
        if hasattr(point, name):
            out[name] = [float(v) for v in getattr(point, name)]
    return out


def handle_solve(request):
    problem, _ = resolve_problem(request.problem, request.problem_text,
                                 request.half_dim)
    if request.model not in newton.SYSTEMS:
        raise ServiceError(f"unknown model {request.model!r}")
    config = newton.SolverConfig(lam=request.lam, epsilon=request.epsilon,
                                 max_iter=request.max_iter)
    start = newton.default_start(problem, request.model,
                                 x0=request.x0, y0=request.y0)
    system = newton.get_system(request.model)
    report = newton.solve(system, problem, config, start)
    return SolveResponse(
        problem=problem.name, model=request.model, lam=report.lam,
        status=report.status, iterations=report.iterations,
        residual=report.residual, F=report.F, f=report.f, eoc=report.eoc,
        alpha_last=report.alpha_last, time_ms=report.time_ms,
        point=_point_to_dict(system.unpack(problem, report.point)),
        residual_history=[float(r) for r in report.residual_history],
        message=report.message,
    )


def handle_sweep(request):
    problem, _ = resolve_problem(request.problem, request.problem_text,
                                 request.half_dim)
    for model in request.models:
        if model not in newton.SYSTEMS:
            raise ServiceError(f"unknown model {model!r}")
    if request.lambdas is not None:
        grid = bench.LambdaSet(tuple(float(v) for v in request.lambdas))
    elif problem.name.startswith("boc"):
        grid = bench.boc_lambda_grid()
    else:
        grid = bench.default_lambda_grid()
    config = newton.SolverConfig(lam=1.0, epsilon=request.epsilon,
                                 max_iter=request.max_iter)
    rows = bench.sweep(problem, models=tuple(request.models), lambdas=grid,
                       config=config)
    group = bench.group_of(problem)
    reports = bench.render_reports(rows, groups={problem.name: group})

    stars = {}
    for model in request.models:
        model_rows = [r for r in rows if r.model == model]
        lam_star, chosen = bench.select_lambda_star(model_rows, problem.status)
        stars[model] = LambdaStar(
            lam=lam_star,
            status=chosen.status if chosen else None,
            F=chosen.F if chosen else None,
            f=chosen.f if chosen else None,
            delta=chosen.delta if chosen else None,
        )

    def row_model(r):
        return SweepRowModel(
            problem=r.problem, model=r.model, lam=r.lam, status=r.status,
            iterations=r.iterations, time_ms=r.time_ms, F=r.F, f=r.f,
            residual=r.residual, eoc=r.eoc, alpha_last=r.alpha_last,
            delta=r.delta,
        )

    return SweepResponse(
        problem=problem.name, group=group,
        rows=[row_model(r) for r in rows], lambda_star=stars,
        csv=reports.csv, summary=reports.text,
    )


def handle_fixtures(problem_name=None):
    names = [problem_name] if problem_name else suite.list_problems()
    results = []
    for name in names:
        try:
            problem, fixtures = suite.get_problem(name)
        except KeyError as exc:
            raise ServiceError(str(exc)) from None
        for fixture in fixtures:
            system = newton.get_system(fixture.model)
            residual = system.residual(problem, fixture.lam,
                                       fixture.point.pack())
            resid = float(np.max(np.abs(residual), initial=0.0))
            results.append(FixtureCheck(
                problem=problem.name, model=fixture.model, lam=fixture.lam,
                tol=fixture.tol, residual=resid,
                passed=bool(resid <= fixture.tol),
                description=fixture.description,
            ))
    return FixturesResponse(
        results=results,
        all_passed=all(r.passed for r in results),
    )


def _parse_point(problem, model, payload):
    arrays = {}
    for key, values in payload.items():
        arrays[key] = np.asarray(values, dtype=float)
    try:
        if model == "kkt":
            return KktPoint(**{k: arrays[k] for k in ("x", "y", "z", "s", "u", "v", "w")})
        return LlvfPoint(**{k: arrays[k] for k in ("x", "y", "z", "u", "v", "w")})
    except KeyError as exc:
        raise ServiceError(f"point payload is missing component {exc}") from None


def handle_diagnose(request):
    problem, _ = resolve_problem(request.problem, request.problem_text,
                                 request.half_dim)
    if request.model not in newton.SYSTEMS:
        raise ServiceError(f"unknown model {request.model!r}")
    point = _parse_point(problem, request.model, request.point)
    try:
        point.validate(problem.dims)
    except Exception as exc:
        raise ServiceError(str(exc)) from None
    system = newton.get_system(request.model)
    residual = float(np.linalg.norm(system.residual(problem, request.lam,
                                                    point.pack())))

    def block_model(cls):
        return BlockClassification(
            eta=list(cls.eta), theta=list(cls.theta), nu=list(cls.nu),
            violations=list(cls.violations), tau=cls.tau,
        )

    if request.model == "kkt":
        report = diagnostics.kkt_regularity_report(problem, request.lam, point)
        from .kkt import to_phi1_coords
        stationarity = check_kkt_stationarity(problem, request.lam,
                                              to_phi1_coords(point))
        return DiagnoseResponse(
            problem=problem.name, model=request.model, lam=request.lam,
            residual=residual, stationarity=stationarity,
            blocks={"upper": block_model(report.upper),
                    "lower": block_model(report.lower),
                    "sign": block_model(report.sign)},
            cone_dim=report.cone_dim, test_dim=report.test_dim,
            min_eig=report.min_eig, ssosc_ok=report.ssosc_ok,
            verdicts={
                "family_independent": report.family_independent,
                "licq": report.licq_ok,
                "column_rank": report.col_rank_ok,
                "ssosc": report.ssosc_ok,
                "general": report.general_holds,
                "fullrank": report.fullrank_holds,
            },
            s_gap=s_stationarity_gap(problem, point),
        )
    report = diagnostics.llvf_regularity_report(problem, request.lam, point)
    stationarity = check_llvf_stationarity(problem, request.lam, point)
    return DiagnoseResponse(
        problem=problem.name, model=request.model, lam=request.lam,
        residual=residual, stationarity=stationarity,
        blocks={"upper": block_model(report.upper),
                "lower": block_model(report.lower),
                "value": block_model(report.value)},
        cone_dim=report.cone_dim, test_dim=report.test_dim,
        min_eig=report.min_eig, ssosc_ok=report.ssosc_ok,
        verdicts={
            "licq_upper": report.licq_upper_ok,
            "licq_value": report.licq_value_ok,
            "theta_value_empty": report.theta_value_empty,
            "ssosc": report.ssosc_ok,
            "holds": report.holds,
        },
    )
