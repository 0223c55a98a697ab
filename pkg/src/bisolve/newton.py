"""Globalized semismooth Newton method on the two stationarity systems.

One iteration solves ``W d = -Phi`` for a generalized-Jacobian element
``W``, falls back to the steepest-descent direction of the merit function
``Psi = 0.5 ||Phi||^2`` whenever the linear system is (numerically)
singular or the Newton direction is not a sufficient descent direction,
and then backtracks with the Armijo rule. A Newton direction that fails
the line search earns one retry with the gradient direction inside the
same iteration before the run is declared a line-search failure.
"""

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kkt as _kkt
from . import llvf as _llvf
from .linalg import SingularSignal, solve_linear

STATUS_CONVERGED = "Converged"
STATUS_MAX_ITER = "MaxIter"
STATUS_LINE_SEARCH = "LineSearchFailure"
STATUS_BREAKDOWN = "NumericalBreakdown"


@dataclass(frozen=True)
class NewtonSystem:
    """Flat-vector adapter around one of the two stationarity systems."""

    name: str
    dim: Callable
    residual: Callable
    jacobian: Callable
    unpack: Callable
    start: Callable


def _kkt_start(problem, x0, y0):
    g0 = problem.g(x0, y0)
    z0 = -np.abs(g0)
    return _kkt.KktPoint(
        x=x0, y=y0, z=z0, s=np.zeros(problem.dims.m),
        u=np.abs(problem.G(x0, y0)), v=-z0, w=-z0,
    ).pack()


def _llvf_start(problem, x0, y0):
    v0 = np.abs(problem.g(x0, y0))
    return _llvf.LlvfPoint(
        x=x0, y=y0, z=y0.copy(),
        u=np.abs(problem.G(x0, y0)), v=v0, w=v0.copy(),
    ).pack()


KKT_SYSTEM = NewtonSystem(
    name="kkt",
    dim=lambda problem: _kkt.KktPoint.dim(problem.dims),
    residual=lambda problem, lam, vec: _kkt.residual_kkt(
        problem, lam, _kkt.KktPoint.unpack(problem.dims, vec)),
    jacobian=lambda problem, lam, vec: _kkt.jacobian_kkt(
        problem, lam, _kkt.KktPoint.unpack(problem.dims, vec)),
    unpack=lambda problem, vec: _kkt.KktPoint.unpack(problem.dims, vec),
    start=_kkt_start,
)

LLVF_SYSTEM = NewtonSystem(
    name="llvf",
    dim=lambda problem: _llvf.LlvfPoint.dim(problem.dims),
    residual=lambda problem, lam, vec: _llvf.residual_llvf(
        problem, lam, _llvf.LlvfPoint.unpack(problem.dims, vec)),
    jacobian=lambda problem, lam, vec: _llvf.jacobian_llvf(
        problem, lam, _llvf.LlvfPoint.unpack(problem.dims, vec)),
    unpack=lambda problem, vec: _llvf.LlvfPoint.unpack(problem.dims, vec),
    start=_llvf_start,
)

SYSTEMS = {"kkt": KKT_SYSTEM, "llvf": LLVF_SYSTEM}


def get_system(model):
    if isinstance(model, NewtonSystem):
        return model
    try:
        return SYSTEMS[model]
    except KeyError:
        raise ValueError(f"unknown model {model!r}; expected 'kkt' or 'llvf'") from None


def default_start(problem, model, x0=None, y0=None):
    """Standard starting vector for a problem/model pair.

    ``(x0, y0)`` defaults to all ones. Multipliers start from the
    constraint magnitudes there: for the KKT system ``z0 = -|g|``,
    ``s0 = 0``, ``u0 = |G|`` and ``v0 = w0 = -z0``; for the value-function
    system ``z0 = y0``, ``u0 = |G|`` and ``v0 = w0 = |g|``.
    """
    x0 = np.ones(problem.dims.n) if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float))
    y0 = np.ones(problem.dims.m) if y0 is None else np.atleast_1d(np.asarray(y0, dtype=float))
    x0, y0 = problem.check_point(x0, y0)
    return get_system(model).start(problem, x0, y0)


@dataclass
class SolverConfig:
    """Parameters of the globalized semismooth Newton method.

    ``lam`` is the penalization weight of the system being solved; the
    remaining fields are the globalization constants: descent test
    ``grad' d <= -beta ||d||^t``, Armijo condition
    ``Psi(zeta + a d) <= Psi(zeta) + 2 sigma a grad' d`` over step sizes
    ``a = rho^s, s = 0..s_max``, stopping tolerance ``epsilon`` on
    ``||Phi||_2`` and iteration cap ``max_iter``.
    """

    lam: float
    beta: float = 1e-8
    epsilon: float = 1e-8
    rho: float = 0.5
    sigma: float = 1e-4
    t: float = 2.1
    max_iter: int = 2000
    s_max: int = 50


@dataclass
class SolveReport:
    """Outcome of one solver run."""

    status: str
    iterations: int
    residual_history: list
    step_sizes: list
    newton_steps: list
    point: np.ndarray
    F: float
    f: float
    eoc: Optional[float]
    time_ms: float
    lam: float
    model: str
    message: str = ""

    @property
    def residual(self):
        """Final residual norm."""
        return self.residual_history[-1]

    @property
    def alpha_last(self):
        """Step size of the final iteration, if any step was taken."""
        return self.step_sizes[-1] if self.step_sizes else None


def merit(system, problem, lam, vec):
    """Merit function ``Psi = 0.5 ||Phi||_2^2`` at a flat point."""
    system = get_system(system)
    phi = system.residual(problem, lam, vec)
    return 0.5 * float(phi @ phi)


def merit_gradient(system, problem, lam, vec):
    """Gradient ``W' Phi`` of the merit function at a flat point."""
    system = get_system(system)
    phi = system.residual(problem, lam, vec)
    W = system.jacobian(problem, lam, vec)
    return W.T @ phi


def eoc(residual_history):
    """Empirical order of convergence from the last three residuals.

    ``max(log r_k / log r_{k-1})`` over the final two consecutive pairs;
    undefined (``None``) with fewer than three entries or when any of the
    last three residuals is >= 1 (logs would change sign). Exact zeros are
    clamped at 1e-300 so a finished quadratic run still reports its order.
    """
    if len(residual_history) < 3:
        return None
    tail = [float(r) for r in residual_history[-3:]]
    if any(r >= 1.0 for r in tail):
        return None
    tail = [max(r, 1e-300) for r in tail]
    logs = np.log(tail)
    return float(max(logs[1] / logs[0], logs[2] / logs[1]))


def solve(system, problem, config, start):
    """Run the globalized semismooth Newton method until a stop condition.

    Returns a :class:`SolveReport`; ``residual_history`` has one entry per
    visited iterate (length ``iterations + 1``) and the status is
    ``Converged`` exactly when the final residual is within
    ``config.epsilon``.
    """
    system = get_system(system)
    lam = float(config.lam)
    zeta = np.array(start, dtype=float)
    expected = system.dim(problem)
    if zeta.shape != (expected,):
        raise ValueError(f"start has length {zeta.size}, expected {expected}")

    t0 = time.perf_counter()
    phi = system.residual(problem, lam, zeta)
    res = float(np.linalg.norm(phi))
    history = [res]
    step_sizes = []
    newton_steps = []
    iterations = 0
    status = None
    message = ""

    while True:
        if not np.isfinite(res):
            status, message = STATUS_BREAKDOWN, "non-finite residual"
            break
        if res <= config.epsilon:
            status = STATUS_CONVERGED
            break
        if iterations >= config.max_iter:
            status = STATUS_MAX_ITER
            break

        W = system.jacobian(problem, lam, zeta)
        grad = W.T @ phi
        if not np.all(np.isfinite(grad)):
            status, message = STATUS_BREAKDOWN, "non-finite merit gradient"
            break

        direction = None
        used_newton = False
        try:
            candidate = solve_linear(W, -phi)
        except SingularSignal:
            candidate = None
        if candidate is not None:
            slope = float(grad @ candidate)
            if slope <= -config.beta * np.linalg.norm(candidate) ** config.t:
                direction, used_newton = candidate, True
        if direction is None:
            direction = -grad

        accepted = False
        psi0 = 0.5 * res * res
        for _attempt in range(2):
            norm_d = float(np.linalg.norm(direction))
            if norm_d > 0.0 and np.isfinite(norm_d):
                slope = float(grad @ direction)
                for s in range(config.s_max + 1):
                    alpha = config.rho ** s
                    trial = zeta + alpha * direction
                    phi_trial = system.residual(problem, lam, trial)
                    psi_trial = 0.5 * float(phi_trial @ phi_trial)
                    if np.isfinite(psi_trial) and psi_trial <= psi0 + 2.0 * config.sigma * alpha * slope:
                        accepted = True
                        break
            if accepted or not used_newton:
                break
            # Newton direction failed the line search: retry once along
            # the negative merit gradient within the same iteration.
            direction, used_newton = -grad, False
        if not accepted:
            status, message = STATUS_LINE_SEARCH, "no Armijo step on either direction"
            break

        zeta = trial
        phi = phi_trial
        res = float(np.linalg.norm(phi))
        history.append(res)
        step_sizes.append(alpha)
        newton_steps.append(used_newton)
        iterations += 1

    elapsed_ms = (time.perf_counter() - t0) * 1e3
    n, m = problem.dims.n, problem.dims.m
    x, y = zeta[:n], zeta[n:n + m]
    return SolveReport(
        status=status,
        iterations=iterations,
        residual_history=history,
        step_sizes=step_sizes,
        newton_steps=newton_steps,
        point=zeta,
        F=float(problem.F(x, y)),
        f=float(problem.f(x, y)),
        eoc=eoc(history),
        time_ms=elapsed_ms,
        lam=lam,
        model=system.name,
        message=message,
    )
