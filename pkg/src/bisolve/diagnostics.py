"""Stationarity diagnostics: active-set classification, second-order
regularity reports for both reformulations, and a brute-force lower-level
oracle for validating computed points against the true value function.
"""

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import min_eig_sym, nullspace_basis, numerical_rank


class InfeasibleGrid(RuntimeError):
    """No grid point satisfied the lower-level constraints."""


@dataclass(frozen=True)
class IndexClassification:
    """Partition of one constraint/multiplier block.

    ``eta``: inactive constraint, zero multiplier; ``theta``: active
    constraint, zero multiplier (degenerate); ``nu``: active constraint,
    positive multiplier. Indices failing all three patterns (infeasible,
    negative multiplier, or positive multiplier on an inactive constraint)
    land in ``violations``. Indices are 0-based.
    """

    eta: tuple
    theta: tuple
    nu: tuple
    violations: tuple
    tau: float

    @property
    def active(self):
        """The active set: theta and nu indices, sorted."""
        return tuple(sorted(self.theta + self.nu))


def classify(constraint_values, multipliers, tau=None):
    """Classify a block of ``c <= 0`` constraints with multipliers ``>= 0``.

    ``tau`` is the activity/zero threshold; by default it scales with the
    multiplier magnitude as ``1e-6 * (1 + max|mult|)``, which keeps the
    partition invariant when a fixture is quoted to a few decimals only.
    """
    c = np.atleast_1d(np.asarray(constraint_values, dtype=float))
    mult = np.atleast_1d(np.asarray(multipliers, dtype=float))
    if c.shape != mult.shape:
        raise ValueError(f"block shapes differ: {c.shape} vs {mult.shape}")
    if tau is None:
        tau = 1e-6 * (1.0 + (np.max(np.abs(mult)) if mult.size else 0.0))
    eta, theta, nu, violations = [], [], [], []
    for j in range(c.size):
        zero_mult = abs(mult[j]) <= tau
        active = abs(c[j]) <= tau
        if zero_mult and c[j] < -tau:
            eta.append(j)
        elif zero_mult and active:
            theta.append(j)
        elif mult[j] > tau and active:
            nu.append(j)
        else:
            violations.append(j)
    return IndexClassification(
        eta=tuple(eta), theta=tuple(theta), nu=tuple(nu),
        violations=tuple(violations), tau=float(tau),
    )


def _projected_min_eig(H, equality_rows, primal_size, tol=1e-10):
    """Min eigenvalue of ``H`` on the relevant part of a linearized cone.

    The cone is the nullspace of ``equality_rows``. Directions whose
    leading ``primal_size`` components vanish (pure auxiliary-variable
    directions) carry no second-order information about the primal point,
    so the quadratic form is tested on the orthogonal complement of that
    subspace within the nullspace. Returns
    ``(cone_dim, test_dim, min_eig_or_None)``; a ``None`` eigenvalue means
    the test space is trivial and the condition holds vacuously.
    """
    dim = H.shape[0]
    E = (np.array(equality_rows, dtype=float).reshape(-1, dim)
         if len(equality_rows) else np.zeros((0, dim)))
    cone = nullspace_basis(E, tol=tol)
    if cone.shape[1] == 0:
        return 0, 0, None
    pin = np.hstack([np.eye(primal_size), np.zeros((primal_size, dim - primal_size))])
    pure_aux = nullspace_basis(np.vstack([E, pin]), tol=tol)
    # Complement of the pure-auxiliary subspace inside the cone.
    resid = cone - pure_aux @ (pure_aux.T @ cone) if pure_aux.shape[1] else cone
    u_mat, sigma, _ = np.linalg.svd(resid, full_matrices=False)
    test = u_mat[:, sigma > 1e-10]
    if test.shape[1] == 0:
        return cone.shape[1], 0, None
    return cone.shape[1], test.shape[1], min_eig_sym(test.T @ H @ test)


@dataclass(frozen=True)
class KktRegularityReport:
    """Second-order regularity verdicts at a KKT-system point."""

    upper: IndexClassification
    lower: IndexClassification
    sign: IndexClassification
    family_rank: int
    family_rows: int
    family_independent: bool
    licq_ok: bool
    col_rank_ok: bool
    cone_dim: int
    test_dim: int
    min_eig: Optional[float]
    ssosc_ok: bool
    general_holds: bool
    fullrank_holds: bool


def _hessian_kkt_lagrangian(problem, lam, point):
    """Hessian over (x, y, z) of the KKT-system Lagrangian."""
    d = problem.dims
    n, q = d.n, d.q
    N = d.total
    x, y, z, s = point.x, point.y, point.z, point.s
    H = np.zeros((N + q, N + q))
    Hxy = problem.hess_F(x, y) + problem.third_contract(x, y, z, s)
    if d.p:
        Hxy = Hxy + np.tensordot(point.u, problem.hess_G(x, y), axes=1)
    if q:
        hg = problem.hess_g(x, y)
        Hxy = Hxy + np.tensordot(point.v + lam * z, hg, axes=1)
        Jg = problem.jac_g(x, y)
        cross = lam * Jg.T - np.einsum("jkl,l->kj", hg[:, :, n:], s)
        H[:N, N:] = cross
        H[N:, :N] = cross.T
    H[:N, :N] = Hxy
    return H


def kkt_regularity_report(problem, lam, point, tau=None, eig_tol=1e-8):
    """Check the convergence-theory regularity conditions at a KKT root.

    Two variants are reported. The general one asks (i) that the gradients
    of active upper/lower constraints together with the rows of the
    lower-level stationarity derivative form a linearly independent family
    and (ii) positivity of the Lagrangian Hessian on the critical cone cut
    out by the strongly-active constraints. The full-rank variant replaces
    (i) by plain linear independence of the active constraint gradients
    plus full column rank of the y-part of the lower-level constraint
    Jacobian on the weakly-active rows, and shares the second-order test.
    """
    d = problem.dims
    point.validate(d)
    n, q = d.n, d.q
    N = d.total
    x, y = point.x, point.y

    upper = classify(problem.G(x, y), point.u, tau)
    lower = classify(problem.g(x, y), point.v, tau)
    # Sign block: the constraint is z <= 0 with multiplier w >= 0.
    sign = classify(point.z, point.w, tau)

    JG = problem.jac_G(x, y)
    Jg = problem.jac_g(x, y)
    K = problem.hess_f(x, y)
    if q:
        K = K - np.tensordot(point.z, problem.hess_g(x, y), axes=1)
    M = K[n:, :]

    family = np.vstack([
        JG[list(upper.active), :].reshape(-1, N),
        Jg[list(lower.active), :].reshape(-1, N),
        M,
    ])
    family_rank = numerical_rank(family)
    family_independent = family_rank == family.shape[0]

    active_grads = np.vstack([
        JG[list(upper.active), :].reshape(-1, N),
        Jg[list(lower.active), :].reshape(-1, N),
    ])
    licq_ok = numerical_rank(active_grads) == active_grads.shape[0]
    weak = sorted(sign.theta + sign.eta)
    weak_block = Jg[weak, :][:, n:].reshape(len(weak), d.m)
    col_rank_ok = numerical_rank(weak_block) == d.m

    H = _hessian_kkt_lagrangian(problem, lam, point)
    rows = []
    for i in upper.nu:
        rows.append(np.concatenate([JG[i, :], np.zeros(q)]))
    for j in lower.nu:
        rows.append(np.concatenate([Jg[j, :], np.zeros(q)]))
    for j in sign.nu:
        e = np.zeros(N + q)
        e[N + j] = 1.0
        rows.append(e)
    cone_dim, test_dim, min_eig = _projected_min_eig(H, rows, primal_size=N)
    ssosc_ok = min_eig is None or min_eig > eig_tol

    return KktRegularityReport(
        upper=upper, lower=lower, sign=sign,
        family_rank=family_rank, family_rows=family.shape[0],
        family_independent=family_independent,
        licq_ok=licq_ok, col_rank_ok=col_rank_ok,
        cone_dim=cone_dim, test_dim=test_dim, min_eig=min_eig,
        ssosc_ok=ssosc_ok,
        general_holds=family_independent and ssosc_ok,
        fullrank_holds=licq_ok and col_rank_ok and ssosc_ok,
    )


@dataclass(frozen=True)
class LlvfRegularityReport:
    """Second-order regularity verdicts at a value-function-system point."""

    upper: IndexClassification
    lower: IndexClassification
    value: IndexClassification
    licq_upper_ok: bool
    licq_value_ok: bool
    theta_value_empty: bool
    cone_dim: int
    test_dim: int
    min_eig: Optional[float]
    ssosc_ok: bool
    holds: bool


def _hessian_llvf_lagrangian(problem, lam, point):
    """Hessian over (x, y, z) of the value-function-system Lagrangian."""
    d = problem.dims
    n, m, q = d.n, d.m, d.q
    N = d.total
    x, y, z = point.x, point.y, point.z
    H_y = problem.hess_F(x, y) + lam * problem.hess_f(x, y)
    if d.p:
        H_y = H_y + np.tensordot(point.u, problem.hess_G(x, y), axes=1)
    if q:
        H_y = H_y + np.tensordot(point.v, problem.hess_g(x, y), axes=1)
    H_z = problem.hess_f(x, z)
    if q:
        H_z = H_z + np.tensordot(point.w, problem.hess_g(x, z), axes=1)
    H = np.zeros((n + 2 * m, n + 2 * m))
    H[:N, :N] = H_y
    H[:n, :n] += -lam * H_z[:n, :n]
    H[:n, N:] = -lam * H_z[:n, n:]
    H[N:, :n] = (-lam * H_z[:n, n:]).T
    H[N:, N:] = -lam * H_z[n:, n:]
    return H


def llvf_regularity_report(problem, lam, point, tau=None, eig_tol=1e-8):
    """Check the convergence-theory regularity conditions at a VF root.

    Conditions: (i) active upper-level and lower-level-at-(x, y) gradients
    are linearly independent, and independently so are the active
    lower-level-at-(x, z) gradients; (ii) the (x, z) block has no
    degenerate (active, zero-multiplier) index; (iii) the Lagrangian
    Hessian over (x, y, z) is positive on the strongly-active critical
    cone after projecting out pure-z directions.
    """
    d = problem.dims
    point.validate(d)
    n, m = d.n, d.m
    N = d.total
    x, y, z = point.x, point.y, point.z

    upper = classify(problem.G(x, y), point.u, tau)
    lower = classify(problem.g(x, y), point.v, tau)
    value = classify(problem.g(x, z), point.w, tau)

    JG = problem.jac_G(x, y)
    Jg_y = problem.jac_g(x, y)
    Jg_z = problem.jac_g(x, z)

    upper_grads = np.vstack([
        JG[list(upper.active), :].reshape(-1, N),
        Jg_y[list(lower.active), :].reshape(-1, N),
    ])
    licq_upper_ok = numerical_rank(upper_grads) == upper_grads.shape[0]
    value_grads = Jg_z[list(value.active), :].reshape(-1, N)
    licq_value_ok = numerical_rank(value_grads) == value_grads.shape[0]
    theta_value_empty = len(value.theta) == 0

    H = _hessian_llvf_lagrangian(problem, lam, point)
    rows = []
    for i in upper.nu:
        rows.append(np.concatenate([JG[i, :], np.zeros(m)]))
    for j in lower.nu:
        rows.append(np.concatenate([Jg_y[j, :], np.zeros(m)]))
    for j in value.nu:
        rows.append(np.concatenate([Jg_z[j, :n], np.zeros(m), Jg_z[j, n:]]))
    cone_dim, test_dim, min_eig = _projected_min_eig(H, rows, primal_size=N)
    ssosc_ok = min_eig is None or min_eig > eig_tol

    return LlvfRegularityReport(
        upper=upper, lower=lower, value=value,
        licq_upper_ok=licq_upper_ok, licq_value_ok=licq_value_ok,
        theta_value_empty=theta_value_empty,
        cone_dim=cone_dim, test_dim=test_dim, min_eig=min_eig,
        ssosc_ok=ssosc_ok,
        holds=(licq_upper_ok and licq_value_ok and theta_value_empty
               and ssosc_ok),
    )


@dataclass(frozen=True)
class OracleResult:
    """Grid estimate of the lower-level optimal value at a fixed x."""

    value: float
    argmin: np.ndarray
    feasible_points: int


def lower_level_oracle(problem, x, grid_radius, grid_points, y_center=None,
                       feas_tol=1e-8):
    """Estimate ``phi(x) = min_y {f(x, y) : g(x, y) <= 0}`` by grid search.

    Scans a uniform grid of ``grid_points`` per axis over
    ``[y_center - grid_radius, y_center + grid_radius]^m`` (``m <= 3``),
    keeps the best feasible point, then polishes it by coordinate descent
    with steps shrinking from the grid spacing. Raises
    :class:`InfeasibleGrid` when no grid point is feasible.
    """
    d = problem.dims
    if d.m > 3:
        raise ValueError(f"grid oracle supports m <= 3, got m={d.m}")
    if grid_points < 2:
        raise ValueError("need at least 2 grid points per axis")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    center = (np.zeros(d.m) if y_center is None
              else np.atleast_1d(np.asarray(y_center, dtype=float)))

    def feasible(y):
        g = problem.g(x, y)
        return g.size == 0 or float(g.max()) <= feas_tol

    axes = [np.linspace(center[i] - grid_radius, center[i] + grid_radius,
                        grid_points) for i in range(d.m)]
    best_y, best_f, count = None, np.inf, 0
    for combo in itertools.product(*axes):
        y = np.array(combo)
        if feasible(y):
            count += 1
            val = problem.f(x, y)
            if val < best_f:
                best_f, best_y = val, y
    if best_y is None:
        raise InfeasibleGrid(
            f"no feasible lower-level point on the grid around {center}"
        )

    step = float(axes[0][1] - axes[0][0])
    while step > 1e-7:
        for i in range(d.m):
            for delta in (step, -step):
                cand = best_y.copy()
                cand[i] += delta
                if feasible(cand):
                    val = problem.f(x, cand)
                    if val < best_f - 1e-15:
                        best_f, best_y = val, cand
        step *= 0.5
    return OracleResult(value=float(best_f), argmin=best_y,
                        feasible_points=count)
