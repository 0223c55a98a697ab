"""Lower-level value-function reformulation as a square semismooth equation.

The lower level is replaced by the constraint ``f(x, y) <= phi(x)`` with
``phi`` the optimal-value function; partially penalizing that constraint
with weight ``lam`` and writing stationarity of the resulting one-level
program yields a square system ``Phi_2(zeta) = 0`` in

    zeta = (x, y, z, u, v, w)

of size ``n + 2m + p + 2q``. Here ``z`` is an auxiliary copy of the
lower-level variable at which the value function is attained, and
``u, v, w`` are the multipliers of the upper-level constraints, the
lower-level constraints at (x, y) and the lower-level constraints at
(x, z). All multipliers are nonnegative at solutions.
"""

from dataclasses import dataclass

import numpy as np

from .fb import fb_block
from .kkt import _comp_violation
from .problems import DimensionError


@dataclass
class LlvfPoint:
    """Primal-dual point of the value-function system."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        for name in ("x", "y", "z", "u", "v", "w"):
            setattr(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))

    @staticmethod
    def dim(dims):
        """Total number of unknowns ``n + 2m + p + 2q``."""
        return dims.n + 2 * dims.m + dims.p + 2 * dims.q

    def pack(self):
        """Flatten to a single vector in the order (x, y, z, u, v, w)."""
        return np.concatenate([self.x, self.y, self.z, self.u, self.v, self.w])

    @classmethod
    def unpack(cls, dims, vec):
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (cls.dim(dims),):
            raise DimensionError(
                f"point has length {vec.size}, expected {cls.dim(dims)}"
            )
        parts = np.split(vec, np.cumsum([dims.n, dims.m, dims.m, dims.p, dims.q]))
        return cls(*parts)

    def validate(self, dims):
        expected = {
            "x": dims.n, "y": dims.m, "z": dims.m,
            "u": dims.p, "v": dims.q, "w": dims.q,
        }
        for name, size in expected.items():
            arr = getattr(self, name)
            if arr.shape != (size,):
                raise DimensionError(
                    f"{name} has shape {arr.shape}, expected ({size},)"
                )
        return self


def residual_llvf(problem, lam, point):
    """Residual ``Phi_2`` of the value-function system at ``point``.

    Block order: stationarity in x, in y, in z, then Fischer-Burmeister
    rows for (G, u), (g(x, y), v) and (g(x, z), w).
    """
    d = problem.dims
    point.validate(d)
    n = d.n
    x, y, z, u, v, w = point.x, point.y, point.z, point.u, point.v, point.w

    grad_F = problem.grad_F(x, y)
    JG = problem.jac_G(x, y)
    Gvals = problem.G(x, y)
    g_y = problem.g(x, y)
    Jg_y = problem.jac_g(x, y)
    g_z = problem.g(x, z)
    Jg_z = problem.jac_g(x, z)
    gf_y = problem.grad_f(x, y)
    gf_z = problem.grad_f(x, z)

    r_x = (grad_F[:n] + JG[:, :n].T @ u + Jg_y[:, :n].T @ v
           + lam * gf_y[:n] - lam * (gf_z[:n] + Jg_z[:, :n].T @ w))
    r_y = grad_F[n:] + JG[:, n:].T @ u + Jg_y[:, n:].T @ v + lam * gf_y[n:]
    r_z = -lam * (gf_z[n:] + Jg_z[:, n:].T @ w)
    r_fb_G, _ = fb_block(Gvals, u)
    r_fb_g, _ = fb_block(g_y, v)
    r_fb_h, _ = fb_block(g_z, w)
    return np.concatenate([r_x, r_y, r_z, r_fb_G, r_fb_g, r_fb_h])


def jacobian_llvf(problem, lam, point):
    """One generalized-Jacobian element of ``Phi_2`` at ``point``.

    Column order matches :meth:`LlvfPoint.pack`. The (y, z) cross blocks of
    the smooth rows vanish identically: y enters only through data at
    (x, y) and z only through data at (x, z).
    """
    d = problem.dims
    point.validate(d)
    n, m, p, q = d.n, d.m, d.p, d.q
    N = n + m
    x, y, z, u, v, w = point.x, point.y, point.z, point.u, point.v, point.w

    JG = problem.jac_G(x, y)
    Gvals = problem.G(x, y)
    g_y = problem.g(x, y)
    Jg_y = problem.jac_g(x, y)
    g_z = problem.g(x, z)
    Jg_z = problem.jac_g(x, z)

    H_y = problem.hess_F(x, y) + lam * problem.hess_f(x, y)
    if p:
        H_y = H_y + np.tensordot(u, problem.hess_G(x, y), axes=1)
    if q:
        H_y = H_y + np.tensordot(v, problem.hess_g(x, y), axes=1)
    H_z = problem.hess_f(x, z)
    if q:
        H_z = H_z + np.tensordot(w, problem.hess_g(x, z), axes=1)

    dim = LlvfPoint.dim(d)
    W = np.zeros((dim, dim))
    c_x = slice(0, n)
    c_y = slice(n, N)
    c_z = slice(N, N + m)
    c_u = slice(N + m, N + m + p)
    c_v = slice(N + m + p, N + m + p + q)
    c_w = slice(N + m + p + q, dim)
    r_x = slice(0, n)
    r_y = slice(n, N)
    r_z = slice(N, N + m)
    r_fb_G = slice(N + m, N + m + p)
    r_fb_g = slice(N + m + p, N + m + p + q)
    r_fb_h = slice(N + m + p + q, dim)

    W[r_x, c_x] = H_y[:n, :n] - lam * H_z[:n, :n]
    W[r_x, c_y] = H_y[:n, n:]
    W[r_x, c_z] = -lam * H_z[:n, n:]
    W[r_y, c_x] = H_y[n:, :n]
    W[r_y, c_y] = H_y[n:, n:]
    W[r_z, c_x] = -lam * H_z[n:, :n]
    W[r_z, c_z] = -lam * H_z[n:, n:]
    if p:
        W[r_x, c_u] = JG[:, :n].T
        W[r_y, c_u] = JG[:, n:].T
        _, der = fb_block(Gvals, u)
        W[r_fb_G, c_x] = -der.d_a[:, None] * JG[:, :n]
        W[r_fb_G, c_y] = -der.d_a[:, None] * JG[:, n:]
        W[r_fb_G, c_u] = np.diag(der.d_b)
    if q:
        W[r_x, c_v] = Jg_y[:, :n].T
        W[r_y, c_v] = Jg_y[:, n:].T
        W[r_x, c_w] = -lam * Jg_z[:, :n].T
        W[r_z, c_w] = -lam * Jg_z[:, n:].T

        _, der = fb_block(g_y, v)
        W[r_fb_g, c_x] = -der.d_a[:, None] * Jg_y[:, :n]
        W[r_fb_g, c_y] = -der.d_a[:, None] * Jg_y[:, n:]
        W[r_fb_g, c_v] = np.diag(der.d_b)

        _, der = fb_block(g_z, w)
        W[r_fb_h, c_x] = -der.d_a[:, None] * Jg_z[:, :n]
        W[r_fb_h, c_z] = -der.d_a[:, None] * Jg_z[:, n:]
        W[r_fb_h, c_w] = np.diag(der.d_b)
    return W


def check_llvf_stationarity(problem, lam, point):
    """Violation of the sign-definite value-function stationarity system.

    All multipliers are nonnegative in this convention. Returns a dict of
    per-block maximal violations (stationarity rows ``KS_1``/``KS_2``;
    complementarity triples ``VS_3`` for (G, u), ``VS_4`` for (g(x,y), v),
    ``KS_3`` for (g(x,z), w)) plus the overall ``max``.
    """
    d = problem.dims
    point.validate(d)
    n = d.n
    x, y, z, u, v, w = point.x, point.y, point.z, point.u, point.v, point.w

    grad_F = problem.grad_F(x, y)
    JG = problem.jac_G(x, y)
    Jg_y = problem.jac_g(x, y)
    g_y = problem.g(x, y)
    gf_y = problem.grad_f(x, y)
    gf_z = problem.grad_f(x, z)
    Jg_z = problem.jac_g(x, z)
    g_z = problem.g(x, z)

    value_term = np.concatenate([gf_z[:n] + Jg_z[:, :n].T @ w, np.zeros(d.m)])
    KS_1 = grad_F + JG.T @ u + Jg_y.T @ v + lam * gf_y - lam * value_term
    KS_2 = gf_z[n:] + Jg_z[:, n:].T @ w
    report = {
        "KS_1": float(np.max(np.abs(KS_1), initial=0.0)),
        "KS_2": float(np.max(np.abs(KS_2), initial=0.0)),
        "VS_3": _comp_violation(problem.G(x, y), u),
        "VS_4": _comp_violation(g_y, v),
        "KS_3": _comp_violation(g_z, w),
    }
    report["max"] = max(report.values())
    return report


@dataclass(frozen=True)
class KktToLlvfDiagnostics:
    """Applicability measures for transferring a KKT-system root.

    ``complementarity_gap`` is ``|z' g(x, y)|`` and ``curvature_norm`` is
    the max-abs entry of the (x, y)-derivative of the lower-level
    stationarity map at the point; the transfer provably preserves
    stationarity when both vanish (the second condition can be relaxed to
    the contracted product with ``s`` being zero).
    """

    complementarity_gap: float
    curvature_norm: float
    applicable: bool


def map_kkt_to_llvf(problem, point, tol=1e-8):
    """Transfer a root of the KKT-reformulation system to the VF system.

    Takes a :class:`~bisolve.kkt.KktPoint` in the residual-system sign
    convention (``z <= 0``) and returns ``(LlvfPoint, diagnostics)`` with
    ``y`` duplicated into the auxiliary variable and ``w := -z >= 0``
    reused as the value-function multiplier.
    """
    from .kkt import s_stationarity_gap

    d = problem.dims
    point.validate(d)
    x, y = point.x, point.y
    gap = s_stationarity_gap(problem, point)
    # point.z <= 0 in the residual-system convention; the lower-level
    # multiplier it encodes is -z, so the curvature matrix of f - (-z)' g
    # is hess_f + sum_j z_j hess_g_j.
    K = problem.hess_f(x, y)
    if d.q:
        K = K + np.tensordot(point.z, problem.hess_g(x, y), axes=1)
    curvature = float(np.max(np.abs(K[d.n:, :]), initial=0.0))
    mapped = LlvfPoint(x=x, y=y, z=y.copy(), u=point.u, v=point.v, w=-point.z)
    diag = KktToLlvfDiagnostics(
        complementarity_gap=gap,
        curvature_norm=curvature,
        applicable=bool(gap <= tol and curvature <= tol),
    )
    return mapped, diag
