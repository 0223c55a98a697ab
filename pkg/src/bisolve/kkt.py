"""KKT-reformulation stationarity system as a square semismooth equation.

The lower level is replaced by its KKT conditions; the resulting one-level
program's own stationarity conditions, with every complementarity pair
rewritten through the Fischer-Burmeister function, give a square system
``Phi_1(zeta) = 0`` in the unknown

    zeta = (x, y, z, s, u, v, w)

of size ``n + 2m + p + 3q``: ``z`` are the lower-level multipliers
(nonpositive in this parametrization), ``s`` the extra multiplier attached
to the lower-level stationarity equation, ``u, v, w`` the multipliers of the
upper-level constraints, the lower-level constraints and the sign condition
on ``z``. The scalar ``lam`` weights the partial penalization of the
complementarity coupling.
"""

from dataclasses import dataclass

import numpy as np

from .fb import fb_block
from .problems import DimensionError


@dataclass
class KktPoint:
    """Primal-dual point of the KKT-reformulation system."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    s: np.ndarray
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        for name in ("x", "y", "z", "s", "u", "v", "w"):
            setattr(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))

    @staticmethod
    def dim(dims):
        """Total number of unknowns ``n + 2m + p + 3q``."""
        return dims.n + 2 * dims.m + dims.p + 3 * dims.q

    def pack(self):
        """Flatten to a single vector in the order (x, y, z, s, u, v, w)."""
        return np.concatenate([self.x, self.y, self.z, self.s, self.u, self.v, self.w])

    @classmethod
    def unpack(cls, dims, vec):
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (cls.dim(dims),):
            raise DimensionError(
                f"point has length {vec.size}, expected {cls.dim(dims)}"
            )
        n, m, p, q = dims.n, dims.m, dims.p, dims.q
        parts = np.split(vec, np.cumsum([n, m, q, m, p, q]))
        return cls(*parts)

    def validate(self, dims):
        expected = {
            "x": dims.n, "y": dims.m, "z": dims.q, "s": dims.m,
            "u": dims.p, "v": dims.q, "w": dims.q,
        }
        for name, size in expected.items():
            arr = getattr(self, name)
            if arr.shape != (size,):
                raise DimensionError(
                    f"{name} has shape {arr.shape}, expected ({size},)"
                )
        return self


def _lower_curvature(problem, x, y, z):
    """``K = hess_f - sum_j z_j hess_g_j`` and its y-row block ``M``."""
    K = problem.hess_f(x, y)
    if problem.dims.q:
        K = K - np.tensordot(z, problem.hess_g(x, y), axes=1)
    return K, K[problem.dims.n:, :]


def residual_kkt(problem, lam, point):
    """Residual ``Phi_1`` of the KKT-reformulation system at ``point``.

    Block order: joint stationarity in (x, y); the lam-weighted coupling row
    in z; lower-level stationarity in y; then Fischer-Burmeister rows for
    (G, u), (g, v) and (z, w).
    """
    d = problem.dims
    point.validate(d)
    n = d.n
    x, y, z, s, u, v, w = point.x, point.y, point.z, point.s, point.u, point.v, point.w

    grad_F = problem.grad_F(x, y)
    JG = problem.jac_G(x, y)
    Gvals = problem.G(x, y)
    gvals = problem.g(x, y)
    Jg = problem.jac_g(x, y)
    grad_f = problem.grad_f(x, y)
    _, M = _lower_curvature(problem, x, y, z)
    Jg_y = Jg[:, n:]

    r_xy = grad_F + JG.T @ u + Jg.T @ (v + lam * z) + M.T @ s
    r_z = lam * gvals - Jg_y @ s + w
    r_y = grad_f[n:] - Jg_y.T @ z
    r_fb_G, _ = fb_block(Gvals, u)
    r_fb_g, _ = fb_block(gvals, v)
    r_fb_z, _ = fb_block(z, w)
    return np.concatenate([r_xy, r_z, r_y, r_fb_G, r_fb_g, r_fb_z])


def jacobian_kkt(problem, lam, point):
    """One generalized-Jacobian element of ``Phi_1`` at ``point``.

    Unknown (column) order matches :meth:`KktPoint.pack`. The leading
    square block over (x, y, z, s) — rows of the three smooth equations —
    is symmetric by construction; the Fischer-Burmeister rows use the
    elementwise derivative choice from :mod:`bisolve.fb`.
    """
    d = problem.dims
    point.validate(d)
    n, m, p, q = d.n, d.m, d.p, d.q
    N = n + m
    x, y, z, s, u, v, w = point.x, point.y, point.z, point.s, point.u, point.v, point.w

    JG = problem.jac_G(x, y)
    Gvals = problem.G(x, y)
    gvals = problem.g(x, y)
    Jg = problem.jac_g(x, y)
    Jg_y = Jg[:, n:]
    hess_G = problem.hess_G(x, y)
    hess_g = problem.hess_g(x, y)
    _, M = _lower_curvature(problem, x, y, z)

    dim = KktPoint.dim(d)
    W = np.zeros((dim, dim))
    c_xy = slice(0, N)
    c_z = slice(N, N + q)
    c_s = slice(N + q, N + q + m)
    c_u = slice(N + q + m, N + q + m + p)
    c_v = slice(N + q + m + p, N + q + m + p + q)
    c_w = slice(N + q + m + p + q, dim)
    r_xy = slice(0, N)
    r_z = slice(N, N + q)
    r_y = slice(N + q, N + q + m)
    r_fb_G = slice(N + q + m, N + q + m + p)
    r_fb_g = slice(N + q + m + p, N + q + m + p + q)
    r_fb_z = slice(N + q + m + p + q, dim)

    H = problem.hess_F(x, y) + problem.third_contract(x, y, z, s)
    if p:
        H = H + np.tensordot(u, hess_G, axes=1)
    if q:
        H = H + np.tensordot(v + lam * z, hess_g, axes=1)
    W[r_xy, c_xy] = H
    if q:
        # d/dz_j of the (x, y) stationarity row: lam * grad g_j - hess_g_j[:, y] s
        W[r_xy, c_z] = lam * Jg.T - np.einsum("jkl,l->kj", hess_g[:, :, n:], s)
    W[r_xy, c_s] = M.T
    if p:
        W[r_xy, c_u] = JG.T
    if q:
        W[r_xy, c_v] = Jg.T

        S = np.einsum("k,jkl->jl", s, hess_g[:, n:, :])
        W[r_z, c_xy] = lam * Jg - S
        W[r_z, c_s] = -Jg_y
        W[r_z, c_w] = np.eye(q)

    W[r_y, c_xy] = M
    if q:
        W[r_y, c_z] = -Jg_y.T

    if p:
        _, der = fb_block(Gvals, u)
        W[r_fb_G, c_xy] = -der.d_a[:, None] * JG
        W[r_fb_G, c_u] = np.diag(der.d_b)
    if q:
        _, der = fb_block(gvals, v)
        W[r_fb_g, c_xy] = -der.d_a[:, None] * Jg
        W[r_fb_g, c_v] = np.diag(der.d_b)

        _, der = fb_block(z, w)
        W[r_fb_z, c_z] = np.diag(-der.d_a)
        W[r_fb_z, c_w] = np.diag(der.d_b)
    return W


def to_phi1_coords(point):
    """Convert a point between sign conventions by flipping ``z`` and ``w``.

    Stationarity conditions are often stated with nonnegative lower-level
    multipliers ``z >= 0`` and nonpositive ``w``; the residual system here
    uses the opposite signs. The map is an involution.
    """
    return KktPoint(
        x=point.x, y=point.y, z=-point.z, s=point.s,
        u=point.u, v=point.v, w=-point.w,
    )


def _comp_violation(constraints, multipliers):
    """Max violation of ``c <= 0, mult >= 0, mult_i c_i = 0`` triples."""
    c = np.atleast_1d(np.asarray(constraints, dtype=float))
    mult = np.atleast_1d(np.asarray(multipliers, dtype=float))
    if c.size == 0:
        return 0.0
    per = np.maximum.reduce([
        np.maximum(c, 0.0),
        np.maximum(-mult, 0.0),
        np.abs(mult * c),
    ])
    return float(per.max())


def check_kkt_stationarity(problem, lam, point):
    """Violation of the sign-definite KKT-reformulation stationarity system.

    Expects ``point`` with the nonnegative-multiplier convention
    (``z >= 0``, ``w <= 0``); apply :func:`to_phi1_coords` to a root of the
    residual system first. Returns a dict of per-block maximal violations
    (keys ``L_x``, ``L_eq``, ``L_z``, ``CP_u``, ``CP_v``, ``CP_w``) plus the
    overall ``max``.
    """
    d = problem.dims
    point.validate(d)
    n = d.n
    x, y, z, s, u, v, w = point.x, point.y, point.z, point.s, point.u, point.v, point.w

    grad_F = problem.grad_F(x, y)
    JG = problem.jac_G(x, y)
    Jg = problem.jac_g(x, y)
    gvals = problem.g(x, y)
    grad_f = problem.grad_f(x, y)
    K = problem.hess_f(x, y)
    if d.q:
        K = K + np.tensordot(z, problem.hess_g(x, y), axes=1)
    M = K[n:, :]

    L_x = grad_F + JG.T @ u + Jg.T @ (v - lam * z) + M.T @ s
    L_eq = grad_f[n:] + Jg[:, n:].T @ z
    L_z = -lam * gvals + Jg[:, n:] @ s + w
    report = {
        "L_x": float(np.max(np.abs(L_x), initial=0.0)),
        "L_eq": float(np.max(np.abs(L_eq), initial=0.0)),
        "L_z": float(np.max(np.abs(L_z), initial=0.0)),
        "CP_u": _comp_violation(problem.G(x, y), u),
        "CP_v": _comp_violation(gvals, v),
        "CP_w": _comp_violation(-z, -w),
    }
    report["max"] = max(report.values())
    return report


def s_stationarity_gap(problem, point):
    """Complementarity product ``|z' g(x, y)|`` at a KKT-system point.

    When this vanishes the lower-level multiplier is orthogonal to the
    constraint values, the situation in which the point transfers to the
    value-function system without disturbing its stationarity rows.
    """
    g = problem.g(np.atleast_1d(point.x), np.atleast_1d(point.y))
    z = np.atleast_1d(point.z)
    if g.size == 0:
        return 0.0
    return float(abs(z @ g))
