"""Problem model for optimistic bilevel programs.

A problem is

    min_{x,y} F(x, y)   s.t.  G(x, y) <= 0,  y solves  min_y f(x, y) s.t. g(x, y) <= 0

with ``x`` in R^n, ``y`` in R^m, ``p`` upper-level and ``q`` lower-level
inequality constraints (either may be zero). All evaluators take ``(x, y)``
as separate 1-d arrays; constraint Jacobians/Hessians are stacked over the
joint variable ``(x, y)`` of length ``N = n + m``.

The module also provides finite-difference fallbacks and a loader/serializer
for linear-quadratic problems stored as YAML key-trees
(:func:`load_quadratic_problem`).
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import yaml


class DimensionError(ValueError):
    """An array does not match the dimensions declared by the problem."""


class ParseError(ValueError):
    """A problem file is not valid (bad syntax, missing or mistyped keys)."""


class SymmetryError(ValueError):
    """A quadratic-form matrix in a problem file is not symmetric."""


class NonFiniteEvaluation(ArithmeticError):
    """A finite-difference probe evaluated to NaN or infinity."""


@dataclass(frozen=True)
class Dims:
    """Dimensions ``(n, m, p, q)`` of a bilevel problem."""

    n: int
    m: int
    p: int
    q: int

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise DimensionError(f"need n, m >= 1, got n={self.n}, m={self.m}")
        if self.p < 0 or self.q < 0:
            raise DimensionError(f"need p, q >= 0, got p={self.p}, q={self.q}")

    @property
    def total(self):
        """Length of the joint variable (x, y)."""
        return self.n + self.m


@dataclass
class BilevelProblem:
    """Callable bundle describing one bilevel program.

    Scalar objectives return floats; ``G``/``g`` return vectors of length
    ``p``/``q``; ``jac_*`` return ``(p, N)`` / ``(q, N)`` matrices and
    ``hess_G`` / ``hess_g`` return stacked ``(p, N, N)`` / ``(q, N, N)``
    arrays over the joint variable. ``third_contract(x, y, z, s)`` is the
    Hessian w.r.t. ``(x, y)`` of the scalar ``s' grad_y [f - z' g]`` — the
    only third-order term the KKT-system Jacobian needs; leave it ``None``
    to fall back to finite differences of the analytic Hessians, or supply
    it analytically (it is identically zero whenever f and g are at most
    quadratic).

    ``known_F`` / ``known_f`` / ``status`` carry benchmark metadata: status
    is ``"optimal"`` (certified global optimum), ``"known"`` (best known
    value) or ``"unknown"``.
    """

    name: str
    dims: Dims
    F: Callable
    grad_F: Callable
    hess_F: Callable
    f: Callable
    grad_f: Callable
    hess_f: Callable
    G: Callable = None
    jac_G: Callable = None
    hess_G: Callable = None
    g: Callable = None
    jac_g: Callable = None
    hess_g: Callable = None
    third_contract: Optional[Callable] = None
    known_F: Optional[float] = None
    known_f: Optional[float] = None
    status: str = "unknown"
    start: Optional[tuple] = None
    description: str = ""

    def __post_init__(self):
        d = self.dims
        N = d.total
        if self.G is None:
            if d.p != 0:
                raise DimensionError(f"p={d.p} but no upper-level constraints given")
            self.G = lambda x, y: np.zeros(0)
            self.jac_G = lambda x, y: np.zeros((0, N))
            self.hess_G = lambda x, y: np.zeros((0, N, N))
        if self.g is None:
            if d.q != 0:
                raise DimensionError(f"q={d.q} but no lower-level constraints given")
            self.g = lambda x, y: np.zeros(0)
            self.jac_g = lambda x, y: np.zeros((0, N))
            self.hess_g = lambda x, y: np.zeros((0, N, N))
        if self.status not in ("optimal", "known", "unknown"):
            raise ValueError(f"bad status {self.status!r}")
        if self.third_contract is None:
            self.third_contract = lambda x, y, z, s: fd_third_contract(
                self, x, y, z, s
            )

    def check_point(self, x, y):
        """Validate shapes of an (x, y) pair against the declared dims."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if x.shape != (self.dims.n,):
            raise DimensionError(f"x has shape {x.shape}, expected ({self.dims.n},)")
        if y.shape != (self.dims.m,):
            raise DimensionError(f"y has shape {y.shape}, expected ({self.dims.m},)")
        return x, y


def _fd_steps(point):
    """Per-coordinate central-difference steps ``eps^(1/3) * max(1, |p_i|)``."""
    point = np.asarray(point, dtype=float)
    return np.finfo(float).eps ** (1.0 / 3.0) * np.maximum(1.0, np.abs(point))


def fd_gradient(func, point):
    """Central-difference gradient of a scalar function of one flat vector.

    Raises :class:`NonFiniteEvaluation` if any probe returns a non-finite
    value, rather than silently propagating NaNs into a Jacobian.
    """
    point = np.asarray(point, dtype=float)
    h = _fd_steps(point)
    grad = np.zeros(point.size)
    for i in range(point.size):
        e = np.zeros(point.size)
        e[i] = h[i]
        hi = func(point + e)
        lo = func(point - e)
        if not np.isfinite(hi) or not np.isfinite(lo):
            raise NonFiniteEvaluation(f"non-finite probe at coordinate {i}")
        grad[i] = (hi - lo) / (2.0 * h[i])
    return grad


def fd_jacobian(func, point):
    """Central-difference Jacobian of a vector function of one flat vector."""
    point = np.asarray(point, dtype=float)
    h = _fd_steps(point)
    base = np.asarray(func(point), dtype=float)
    jac = np.zeros((base.size, point.size))
    for i in range(point.size):
        e = np.zeros(point.size)
        e[i] = h[i]
        hi = np.asarray(func(point + e), dtype=float)
        lo = np.asarray(func(point - e), dtype=float)
        if not (np.all(np.isfinite(hi)) and np.all(np.isfinite(lo))):
            raise NonFiniteEvaluation(f"non-finite probe at coordinate {i}")
        jac[:, i] = (hi - lo) / (2.0 * h[i])
    return jac


def fd_third_contract(problem, x, y, z, s):
    """Finite-difference fallback for the third-order contraction.

    Differentiates ``v(x, y) = M(x, y, z)' s`` where ``M`` is the ``m x N``
    block of y-rows of ``hess_f - sum_j z_j hess_g_j`` (so only the analytic
    second derivatives are probed), then symmetrizes. Exact for problems
    whose third derivatives are constant, which covers every polynomial of
    degree <= 3.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    s = np.asarray(s, dtype=float)
    n = x.size

    def contracted(v):
        xx, yy = v[:n], v[n:]
        K = problem.hess_f(xx, yy)
        hg = problem.hess_g(xx, yy)
        if z.size:
            K = K - np.tensordot(z, hg, axes=1)
        return K[n:, :].T @ s

    jac = fd_jacobian(contracted, np.concatenate([x, y]))
    return 0.5 * (jac + jac.T)


# ---------------------------------------------------------------------------
# Linear-quadratic problems serialized as YAML key-trees.
#
# Layout:
#   dims: {n: , m: , p: , q: }
#   F: {Q: [[...]], c: [...], r: 0.0}      # 0.5 v'Qv + c'v + r over v = (x, y)
#   f: {Q: ..., c: ..., r: ...}
#   G: [[[a...], b], ...]                  # row i is a'(x,y) + b   (p rows)
#   g: [[[a...], b], ...]                  # (q rows)
#   known: {F: , f: , status: }            # optional
# ---------------------------------------------------------------------------


def _quadratic_scalar(Q, c, r):
    """Evaluators for ``0.5 v'Qv + c'v + r`` with ``v = (x, y)``."""

    def value(x, y):
        v = np.concatenate([x, y])
        return float(0.5 * v @ Q @ v + c @ v + r)

    def grad(x, y):
        v = np.concatenate([x, y])
        return Q @ v + c

    def hess(x, y):
        return Q.copy()

    return value, grad, hess


def _affine_rows(A, b, N):
    """Evaluators for the affine constraint block ``A v + b <= 0``."""

    def value(x, y):
        v = np.concatenate([x, y])
        return A @ v + b

    def jac(x, y):
        return A.copy()

    def hess(x, y):
        return np.zeros((A.shape[0], N, N))

    return value, jac, hess


def build_quadratic_problem(name, dims, F_data, f_data, G_rows, g_rows,
                            known=None, description=""):
    """Assemble a :class:`BilevelProblem` from quadratic/affine data.

    ``F_data``/``f_data`` are ``(Q, c, r)`` triples over the joint variable;
    ``G_rows``/``g_rows`` are lists of ``(a, b)`` pairs. Third-order terms
    vanish identically for this class, so ``third_contract`` is the zero map.
    """
    N = dims.total
    QF, cF, rF = F_data
    Qf, cf, rf = f_data
    for tag, Q in (("F", QF), ("f", Qf)):
        if Q.shape != (N, N):
            raise DimensionError(f"{tag}.Q has shape {Q.shape}, expected ({N}, {N})")
        if not np.allclose(Q, Q.T, atol=1e-10, rtol=0.0):
            raise SymmetryError(f"{tag}.Q is not symmetric")
    for tag, c, length in (("F", cF, N), ("f", cf, N)):
        if c.shape != (length,):
            raise DimensionError(f"{tag}.c has shape {c.shape}, expected ({length},)")
    AG = np.array([a for a, _ in G_rows], dtype=float).reshape(dims.p, N)
    bG = np.array([b for _, b in G_rows], dtype=float).reshape(dims.p)
    Ag = np.array([a for a, _ in g_rows], dtype=float).reshape(dims.q, N)
    bg = np.array([b for _, b in g_rows], dtype=float).reshape(dims.q)

    Fv, Fg, Fh = _quadratic_scalar(QF, cF, rF)
    fv, fg, fh = _quadratic_scalar(Qf, cf, rf)
    Gv, Gj, Gh = _affine_rows(AG, bG, N)
    gv, gj, gh = _affine_rows(Ag, bg, N)
    known = known or {}
    problem = BilevelProblem(
        name=name,
        dims=dims,
        F=Fv, grad_F=Fg, hess_F=Fh,
        f=fv, grad_f=fg, hess_f=fh,
        G=Gv, jac_G=Gj, hess_G=Gh,
        g=gv, jac_g=gj, hess_g=gh,
        third_contract=lambda x, y, z, s: np.zeros((N, N)),
        known_F=known.get("F"),
        known_f=known.get("f"),
        status=known.get("status", "unknown"),
        description=description,
    )
    # Stash the raw data so the problem can be serialized back to a file.
    problem.quadratic_data = {
        "dims": dims,
        "F": (QF, cF, rF),
        "f": (Qf, cf, rf),
        "G": (AG, bG),
        "g": (Ag, bg),
    }
    return problem


def _require(tree, key, kind, where):
    if not isinstance(tree, dict) or key not in tree:
        raise ParseError(f"missing key {key!r} in {where}")
    value = tree[key]
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind is list and isinstance(value, list):
        return value
    if kind is dict and isinstance(value, dict):
        return value
    raise ParseError(f"key {key!r} in {where} should be {kind.__name__}")


def _parse_matrix(tree, key, where):
    rows = _require(tree, key, list, where)
    try:
        mat = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}.{key} is not a numeric matrix: {exc}") from None
    if mat.ndim != 2:
        raise ParseError(f"{where}.{key} is not two-dimensional")
    return mat


def load_quadratic_problem(text, name="file-problem"):
    """Parse a linear-quadratic problem from YAML text.

    Raises :class:`ParseError` for malformed documents, ``DimensionError``
    for shape mismatches and :class:`SymmetryError` for asymmetric quadratic
    forms (tolerance 1e-10).
    """
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"invalid YAML: {exc}") from None
    if not isinstance(tree, dict):
        raise ParseError("top level of a problem file must be a mapping")

    dims_tree = _require(tree, "dims", dict, "problem")
    dims = Dims(
        n=_require(dims_tree, "n", int, "dims"),
        m=_require(dims_tree, "m", int, "dims"),
        p=_require(dims_tree, "p", int, "dims"),
        q=_require(dims_tree, "q", int, "dims"),
    )
    N = dims.total

    def scalar_block(key):
        block = _require(tree, key, dict, "problem")
        Q = _parse_matrix(block, "Q", key)
        c = np.asarray(_require(block, "c", list, key), dtype=float)
        r = _require(block, "r", float, key) if "r" in block else 0.0
        if c.ndim != 1:
            raise ParseError(f"{key}.c must be a flat list")
        return Q, c, r

    def constraint_block(key, count):
        if count == 0:
            if key in tree and tree[key]:
                raise DimensionError(f"dims declare no {key} rows but {key} is nonempty")
            return []
        rows = _require(tree, key, list, "problem")
        if len(rows) != count:
            raise DimensionError(f"{key} has {len(rows)} rows, dims say {count}")
        out = []
        for idx, row in enumerate(rows):
            if not (isinstance(row, list) and len(row) == 2 and isinstance(row[0], list)):
                raise ParseError(f"{key}[{idx}] must be [[coefficients], offset]")
            a = np.asarray(row[0], dtype=float)
            if a.shape != (N,):
                raise DimensionError(
                    f"{key}[{idx}] has {a.size} coefficients, expected {N}"
                )
            if isinstance(row[1], bool) or not isinstance(row[1], (int, float)):
                raise ParseError(f"{key}[{idx}] offset must be a number")
            out.append((a, float(row[1])))
        return out

    known = None
    if "known" in tree:
        ktree = _require(tree, "known", dict, "problem")
        status = ktree.get("status", "known")
        if status not in ("optimal", "known", "unknown"):
            raise ParseError(f"known.status must be optimal/known/unknown, got {status!r}")
        known = {
            "F": float(ktree["F"]) if "F" in ktree else None,
            "f": float(ktree["f"]) if "f" in ktree else None,
            "status": status,
        }

    return build_quadratic_problem(
        name=tree.get("name", name),
        dims=dims,
        F_data=scalar_block("F"),
        f_data=scalar_block("f"),
        G_rows=constraint_block("G", dims.p),
        g_rows=constraint_block("g", dims.q),
        known=known,
    )


def serialize_quadratic_problem(problem):
    """Render a quadratic problem (built from data) back to YAML text."""
    data = getattr(problem, "quadratic_data", None)
    if data is None:
        raise ValueError(f"problem {problem.name!r} carries no quadratic data")
    dims = data["dims"]
    QF, cF, rF = data["F"]
    Qf, cf, rf = data["f"]
    AG, bG = data["G"]
    Ag, bg = data["g"]
    tree = {
        "name": problem.name,
        "dims": {"n": dims.n, "m": dims.m, "p": dims.p, "q": dims.q},
        "F": {"Q": QF.tolist(), "c": cF.tolist(), "r": float(rF)},
        "f": {"Q": Qf.tolist(), "c": cf.tolist(), "r": float(rf)},
        "G": [[a.tolist(), float(b)] for a, b in zip(AG, bG)],
        "g": [[a.tolist(), float(b)] for a, b in zip(Ag, bg)],
    }
    if problem.status != "unknown" or problem.known_F is not None:
        known = {"status": problem.status}
        if problem.known_F is not None:
            known["F"] = float(problem.known_F)
        if problem.known_f is not None:
            known["f"] = float(problem.known_f)
        tree["known"] = known
    return yaml.safe_dump(tree, sort_keys=False)
