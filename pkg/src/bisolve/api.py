"""HTTP facade over the service handlers.

Run with ``uvicorn bisolve.api:app``. The endpoints mirror the CLI
subcommands one-to-one; request/response bodies are the pydantic models
from :mod:`bisolve.service`.
"""

from typing import List, Optional

from fastapi import FastAPI, HTTPException

from . import service
from .problems import ParseError

app = FastAPI(
    title="bisolve",
    description="Semismooth-Newton solvers for optimistic bilevel programs: "
                "KKT-reformulation and lower-level value-function systems.",
    version="0.1.0",
)


def _bad_request(exc):
    return HTTPException(status_code=400, detail=str(exc))


@app.get("/problems", response_model=List[service.ProblemInfo])
def list_problems():
    return service.handle_list()


@app.post("/solve", response_model=service.SolveResponse)
def solve(request: service.SolveRequest):
    try:
        return service.handle_solve(request)
    except (service.ServiceError, ParseError, ValueError) as exc:
        raise _bad_request(exc) from None


@app.post("/sweep", response_model=service.SweepResponse)
def sweep(request: service.SweepRequest):
    try:
        return service.handle_sweep(request)
    except (service.ServiceError, ParseError, ValueError) as exc:
        raise _bad_request(exc) from None


@app.get("/fixtures", response_model=service.FixturesResponse)
def fixtures(problem: Optional[str] = None):
    try:
        return service.handle_fixtures(problem)
    except service.ServiceError as exc:
        raise HTTPException(status_code=404, detail=str(exc)) from None


@app.post("/diagnose", response_model=service.DiagnoseResponse)
def diagnose(request: service.DiagnoseRequest):
    try:
        return service.handle_diagnose(request)
    except (service.ServiceError, ParseError, ValueError) as exc:
        raise _bad_request(exc) from None
