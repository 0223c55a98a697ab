"""Bundled bilevel test problems and their reference fixtures.

Each problem comes with benchmark metadata (best known objective values and
whether they are certified optimal) and, where available, hand-checked
primal-dual fixtures: points that solve one of the two stationarity systems
at a specific penalization weight, used as regression anchors and as the
gate run by ``bisolve fixtures``.
"""

from dataclasses import dataclass

import numpy as np

from .kkt import KktPoint
from .llvf import LlvfPoint
from .problems import BilevelProblem, Dims, build_quadratic_problem


@dataclass(frozen=True)
class Fixture:
    """A reference root of one stationarity system.

    ``model`` is ``"kkt"`` or ``"llvf"``, ``point`` the corresponding
    primal-dual point, ``tol`` the max-abs residual the point is guaranteed
    to satisfy at weight ``lam`` (loose for fixtures quoted to four
    decimals).
    """

    model: str
    lam: float
    point: object
    tol: float
    description: str = ""


def _sc98():
    problem = build_quadratic_problem(
        name="sc98",
        dims=Dims(n=1, m=1, p=2, q=3),
        # F = (x-3)^2 + (y-2)^2
        F_data=(np.array([[2.0, 0.0], [0.0, 2.0]]), np.array([-6.0, -4.0]), 13.0),
        # f = (y-5)^2
        f_data=(np.array([[0.0, 0.0], [0.0, 2.0]]), np.array([0.0, -10.0]), 25.0),
        # 0 <= x <= 8
        G_rows=[(np.array([-1.0, 0.0]), 0.0), (np.array([1.0, 0.0]), -8.0)],
        g_rows=[
            (np.array([-2.0, 1.0]), -1.0),
            (np.array([1.0, -2.0]), 2.0),
            (np.array([1.0, 2.0]), -14.0),
        ],
        known={"F": 5.0, "f": 4.0, "status": "optimal"},
        description="Quadratic upper and lower objectives over a polygonal "
                    "lower-level feasible set; optimum at (1, 3).",
    )
    fixtures = [
        Fixture(
            model="kkt", lam=16.0, tol=1e-8,
            point=KktPoint(x=[1.0], y=[3.0], z=[-4.0, 0.0, 0.0], s=[0.0],
                           u=[0.0, 0.0], v=[62.0, 0.0, 0.0], w=[0.0, 48.0, 112.0]),
            description="exact root of the KKT system at the optimum",
        ),
        Fixture(
            model="llvf", lam=2.0, tol=1e-8,
            point=LlvfPoint(x=[1.0], y=[3.0], z=[3.0], u=[0.0, 0.0],
                            v=[6.0, 0.0, 0.0], w=[4.0, 0.0, 0.0]),
            description="exact root of the value-function system at the optimum",
        ),
    ]
    return problem, fixtures


def _bard91():
    problem = build_quadratic_problem(
        name="bard91",
        dims=Dims(n=1, m=2, p=2, q=3),
        # F = x + y2
        F_data=(np.zeros((3, 3)), np.array([1.0, 0.0, 1.0]), 0.0),
        # f = 2 y1 + x y2
        f_data=(np.array([[0.0, 0.0, 1.0],
                          [0.0, 0.0, 0.0],
                          [1.0, 0.0, 0.0]]), np.array([0.0, 2.0, 0.0]), 0.0),
        # 2 <= x <= 4
        G_rows=[(np.array([-1.0, 0.0, 0.0]), 2.0), (np.array([1.0, 0.0, 0.0]), -4.0)],
        g_rows=[
            (np.array([1.0, -1.0, -1.0]), 4.0),
            (np.array([0.0, -1.0, 0.0]), 0.0),
            (np.array([0.0, 0.0, -1.0]), 0.0),
        ],
        known={"F": 2.0, "f": 12.0, "status": "optimal"},
        description="Linear upper level with a bilinear lower objective; "
                    "optimum at x=2, y=(6, 0).",
    )
    fixtures = [
        Fixture(
            model="kkt", lam=1.0, tol=1e-3,
            point=KktPoint(x=[2.0], y=[6.0, 0.0], z=[-2.0, 0.0, 0.0],
                           s=[0.0077, -0.0077], u=[0.9923, 0.0],
                           v=[2.0, 0.0, 1.0], w=[0.0, 5.9923, 0.0077]),
            description="four-decimal KKT-system root at the optimum",
        ),
        Fixture(
            model="llvf", lam=2.0, tol=1e-3,
            point=LlvfPoint(x=[2.0], y=[6.0, 0.0], z=[5.5207, 0.4793],
                            u=[0.0415, 0.0], v=[4.0, 0.0, 1.0], w=[2.0, 0.0, 0.0]),
            description="four-decimal value-function-system root at the optimum",
        ),
    ]
    return problem, fixtures


def _lampariello_sagratella():
    problem = build_quadratic_problem(
        name="lampariello-sagratella",
        dims=Dims(n=1, m=2, p=1, q=3),
        # F = x^2 + (y1 + y2)^2
        F_data=(np.array([[2.0, 0.0, 0.0],
                          [0.0, 2.0, 2.0],
                          [0.0, 2.0, 2.0]]), np.zeros(3), 0.0),
        # f = y1
        f_data=(np.zeros((3, 3)), np.array([0.0, 1.0, 0.0]), 0.0),
        # x >= 1/2
        G_rows=[(np.array([-1.0, 0.0, 0.0]), 0.5)],
        g_rows=[
            (np.array([-1.0, -1.0, -1.0]), 1.0),
            (np.array([0.0, -1.0, 0.0]), 0.0),
            (np.array([0.0, 0.0, -1.0]), 0.0),
        ],
        known={"F": 0.5, "f": 0.0, "status": "optimal"},
        description="Simplex-constrained linear lower level under a convex "
                    "quadratic upper objective; optimum at x=1/2, y=(0, 1/2).",
    )
    fixtures = [
        Fixture(
            model="kkt", lam=1.0, tol=1e-3,
            point=KktPoint(x=[0.5], y=[0.0, 0.5], z=[0.0, -1.0, 0.0],
                           s=[0.0, -0.0061], u=[0.0],
                           v=[1.0, 1.0, 0.0], w=[0.0061, 0.0, 0.5061]),
            description="four-decimal KKT-system root at the optimum",
        ),
        Fixture(
            model="llvf", lam=1.0, tol=1e-8,
            point=LlvfPoint(x=[0.5], y=[0.0, 0.5], z=[0.0, 0.5], u=[0.0],
                            v=[1.0, 1.0, 0.0], w=[0.0, 1.0, 0.0]),
            description="exact root of the value-function system at the optimum",
        ),
    ]
    return problem, fixtures


def _dempe_dutta_a():
    """Lower level whose multiplier set is empty at the solution.

    The two parabolic constraints touch at the optimum with no constraint
    qualification, so the KKT-reformulation route has no root at all while
    the problem itself is perfectly solvable — the value-function system
    still works.
    """
    dims = Dims(n=1, m=2, p=1, q=2)

    def g(x, y):
        return np.array([y[0] ** 2 - y[1] - x[0], y[0] ** 2 + y[1]])

    def jac_g(x, y):
        return np.array([[-1.0, 2.0 * y[0], -1.0], [0.0, 2.0 * y[0], 1.0]])

    def hess_g(x, y):
        h = np.zeros((2, 3, 3))
        h[0, 1, 1] = 2.0
        h[1, 1, 1] = 2.0
        return h

    problem = BilevelProblem(
        name="dempe-dutta-a",
        dims=dims,
        F=lambda x, y: float(x[0]),
        grad_F=lambda x, y: np.array([1.0, 0.0, 0.0]),
        hess_F=lambda x, y: np.zeros((3, 3)),
        f=lambda x, y: float(y[0]),
        grad_f=lambda x, y: np.array([0.0, 1.0, 0.0]),
        hess_f=lambda x, y: np.zeros((3, 3)),
        G=lambda x, y: np.array([-x[0]]),
        jac_G=lambda x, y: np.array([[-1.0, 0.0, 0.0]]),
        hess_G=lambda x, y: np.zeros((1, 3, 3)),
        g=g, jac_g=jac_g, hess_g=hess_g,
        third_contract=lambda x, y, z, s: np.zeros((3, 3)),
        known_F=0.0, known_f=0.0, status="optimal",
        description="x >= 0 upper level over two parabolic lower-level "
                    "constraints; optimum at x=0, y=(0, 0) where the "
                    "lower-level multiplier set is empty.",
    )
    return problem, []


def _dempe_dutta_b(shifted):
    """Cubic lower objective f = x^2 y over one quadratic constraint.

    The plain variant constrains y^2 <= 0 (so the lower level is pinned at
    y = 0); the shifted variant uses y^2 <= 1, which makes the lower-level
    solution jump between y = -1 (x != 0) and the whole interval (x = 0),
    and gives the bilevel problem the two global optima (1, -1) and (0, 0).
    """
    dims = Dims(n=1, m=1, p=0, q=1)
    offset = -1.0 if shifted else 0.0

    def third_contract(x, y, z, s):
        # Hessian over (x, y) of s * d/dy [f - z g] = s (x^2 - 2 y z);
        # only the x^2 term survives two derivatives.
        return np.array([
            [2.0 * s[0], 0.0],
            [0.0, 0.0],
        ])

    problem = BilevelProblem(
        name="dempe-dutta-b-shifted" if shifted else "dempe-dutta-b",
        dims=dims,
        F=lambda x, y: float((x[0] - 1.0) ** 2 + y[0] ** 2),
        grad_F=lambda x, y: np.array([2.0 * (x[0] - 1.0), 2.0 * y[0]]),
        hess_F=lambda x, y: 2.0 * np.eye(2),
        f=lambda x, y: float(x[0] ** 2 * y[0]),
        grad_f=lambda x, y: np.array([2.0 * x[0] * y[0], x[0] ** 2]),
        hess_f=lambda x, y: np.array([[2.0 * y[0], 2.0 * x[0]],
                                      [2.0 * x[0], 0.0]]),
        g=lambda x, y: np.array([y[0] ** 2 + offset]),
        jac_g=lambda x, y: np.array([[0.0, 2.0 * y[0]]]),
        hess_g=lambda x, y: np.array([[[0.0, 0.0], [0.0, 2.0]]]),
        third_contract=third_contract,
        known_F=1.0 if shifted else 0.0,
        known_f=-1.0 if shifted else 0.0,
        status="known",
        description=("Cubic lower objective with y^2 <= 1; two global optima "
                     "share F = 1 but differ in f, so only the (1, -1) values "
                     "are recorded as best known." if shifted else
                     "Cubic lower objective with the lower level pinned at "
                     "y = 0; the optimum (1, 0) is not a stationary point of "
                     "either residual system, so its values are recorded as "
                     "known rather than solver-certified."),
    )
    fixtures = []
    if shifted:
        fixtures = [
            Fixture(
                model="kkt", lam=4.0, tol=1e-8,
                point=KktPoint(x=[1.0], y=[-1.0], z=[-0.5], s=[0.0],
                               u=[], v=[1.0], w=[0.0]),
                description="exact KKT-system root at the optimum (1, -1)",
            ),
            Fixture(
                model="llvf", lam=4.0, tol=1e-8,
                point=LlvfPoint(x=[1.0], y=[-1.0], z=[-1.0],
                                u=[], v=[1.0], w=[0.5]),
                description="exact value-function-system root at (1, -1)",
            ),
        ]
    return problem, fixtures


def _kinked_value():
    """Bilinear lower level whose value function has a kink at x = 0.

    f(x, y) = x (y - 1) over 0 <= y <= 1 gives phi(x) = -x for x > 0 and
    phi(x) = 0 otherwise; the optimum sits exactly at the kink (0, 1).
    """
    problem = build_quadratic_problem(
        name="kinked-value",
        dims=Dims(n=1, m=1, p=1, q=2),
        # F = x^2 + (y-1)^2
        F_data=(np.array([[2.0, 0.0], [0.0, 2.0]]), np.array([0.0, -2.0]), 1.0),
        # f = x(y-1) = xy - x
        f_data=(np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([-1.0, 0.0]), 0.0),
        # x <= 0
        G_rows=[(np.array([1.0, 0.0]), 0.0)],
        g_rows=[(np.array([0.0, -1.0]), 0.0), (np.array([0.0, 1.0]), -1.0)],
        known={"F": 0.0, "f": 0.0, "status": "optimal"},
        description="Bilinear lower objective over 0 <= y <= 1; the optimal "
                    "value function is kinked at the optimum x = 0.",
    )
    return problem, []


def boc_problem(half_dim):
    """Discretized bilevel optimal-control instance of scalable size.

    ``half_dim`` (h) controls the state length: n = 2 upper variables,
    m = 2h lower variables split into a state block y1 and a derivative
    block y2 tied together by forward differences (enforced as two-sided
    inequalities), q = 4h lower-level constraints, p = 3 box-style upper
    constraints. The lower level tracks the two upper variables through
    averaging maps; the upper level pushes the state toward 1/2 while
    maximizing x1 + x2.
    """
    h = int(half_dim)
    if h < 2:
        raise ValueError("half_dim must be >= 2")
    n, m, p, q = 2, 2 * h, 3, 4 * h
    N = n + m
    dims = Dims(n=n, m=m, p=p, q=q)

    # F = 0.5 ||(y1; 0) - 0.5||^2 - (x1 + x2)
    QF = np.zeros((N, N))
    QF[2:2 + h, 2:2 + h] = np.eye(h)
    cF = np.zeros(N)
    cF[:2] = -1.0
    cF[2:2 + h] = -0.5
    rF = h / 4.0

    # f = 0.5 ||y1 - P x||^2 + 0.5 ||y2 - P x||^2 with P averaging x
    P = np.full((h, 2), 1.0 / h)
    A1 = np.hstack([-P, np.eye(h), np.zeros((h, h))])
    A2 = np.hstack([-P, np.zeros((h, h)), np.eye(h)])
    Qf = A1.T @ A1 + A2.T @ A2

    G_rows = [
        (np.concatenate([[-1.0, 1.0], np.zeros(m)]), -1.0),
        (np.concatenate([[-1.0, 0.0], np.zeros(m)]), 0.0),
        (np.concatenate([[0.0, -1.0], np.zeros(m)]), 0.0),
    ]

    # y2 bounded in [-1, 1]; D y1 - y2 pinned to zero by paired inequalities,
    # D the forward-difference (lower bidiagonal) matrix.
    D = np.eye(h)
    D -= np.diag(np.ones(h - 1), -1)
    g_rows = []
    for i in range(h):
        a = np.zeros(N)
        a[2 + h + i] = 1.0
        g_rows.append((a, -1.0))
    for i in range(h):
        a = np.zeros(N)
        a[2 + h + i] = -1.0
        g_rows.append((a, -1.0))
    for sign in (1.0, -1.0):
        for i in range(h):
            a = np.zeros(N)
            a[2:2 + h] = sign * D[i]
            a[2 + h + i] = -sign
            g_rows.append((a, 0.0))

    return build_quadratic_problem(
        name=f"boc-{h}",
        dims=dims,
        F_data=(QF, cF, rF),
        f_data=(Qf, np.zeros(N), 0.0),
        G_rows=G_rows,
        g_rows=g_rows,
        known=None,
        description="Scalable discretized optimal-control instance; the "
                    "lower level tracks averaged upper variables subject to "
                    "difference constraints.",
    )


_BUILDERS = {
    "sc98": _sc98,
    "bard91": _bard91,
    "lampariello-sagratella": _lampariello_sagratella,
    "dempe-dutta-a": _dempe_dutta_a,
    "dempe-dutta-b": lambda: _dempe_dutta_b(shifted=False),
    "dempe-dutta-b-shifted": lambda: _dempe_dutta_b(shifted=True),
    "kinked-value": _kinked_value,
}

DEFAULT_BOC_HALF_DIM = 10


def list_problems():
    """Names of all bundled problems (the scalable family appears as 'boc')."""
    return sorted(_BUILDERS) + ["boc"]


def get_problem(name, half_dim=None):
    """Return ``(problem, fixtures)`` for a bundled problem name.

    ``"boc"`` builds the scalable instance (``half_dim`` defaults to
    10); it has no reference fixtures.
    """
    if name == "boc" or name.startswith("boc-"):
        if half_dim is None and name.startswith("boc-"):
            half_dim = int(name.split("-", 1)[1])
        return boc_problem(DEFAULT_BOC_HALF_DIM if half_dim is None else half_dim), []
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise KeyError(
            f"unknown problem {name!r}; available: {', '.join(list_problems())}"
        ) from None
    return builder()
