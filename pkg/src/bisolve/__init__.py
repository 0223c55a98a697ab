"""Semismooth-Newton toolkit for optimistic bilevel programs.

Builds square stationarity systems for two single-level reformulations of

    min F(x, y)  s.t.  G(x, y) <= 0,  y in argmin { f(x, y) : g(x, y) <= 0 }

— one through the lower level's KKT conditions, one through its optimal-
value function — solves them with a globalized semismooth Newton method,
and benchmarks the two routes head to head.
"""

from .problems import (BilevelProblem, DimensionError, Dims, NonFiniteEvaluation,
                       ParseError, SymmetryError, fd_gradient, fd_jacobian,
                       fd_third_contract, load_quadratic_problem,
                       serialize_quadratic_problem)
from .fb import FbPairDerivative, fb, fb_block, fb_derivative_element
from .kkt import (KktPoint, check_kkt_stationarity, jacobian_kkt, residual_kkt,
                  s_stationarity_gap, to_phi1_coords)
from .llvf import (LlvfPoint, check_llvf_stationarity, jacobian_llvf,
                   map_kkt_to_llvf, residual_llvf)
from .linalg import (SingularSignal, min_eig_sym, nullspace_basis,
                     numerical_rank, solve_linear)
from .newton import (KKT_SYSTEM, LLVF_SYSTEM, SolveReport, SolverConfig,
                     default_start, eoc, get_system, merit, merit_gradient,
                     solve)
from .diagnostics import (IndexClassification, InfeasibleGrid,
                          KktRegularityReport, LlvfRegularityReport, classify,
                          kkt_regularity_report, llvf_regularity_report,
                          lower_level_oracle)
from .bench import (LambdaSet, RenderedReports, SweepRow, UnknownStatus,
                    boc_lambda_grid, default_lambda_grid, delta_metrics,
                    group_of, render_reports, rows_to_csv, select_lambda_star,
                    sweep)
from .suite import Fixture, boc_problem, get_problem, list_problems

__version__ = "0.1.0"

__all__ = [
    "BilevelProblem", "Dims", "DimensionError", "ParseError", "SymmetryError",
    "NonFiniteEvaluation", "fd_gradient", "fd_jacobian", "fd_third_contract",
    "load_quadratic_problem", "serialize_quadratic_problem",
    "fb", "fb_block", "fb_derivative_element", "FbPairDerivative",
    "KktPoint", "residual_kkt", "jacobian_kkt", "check_kkt_stationarity",
    "to_phi1_coords", "s_stationarity_gap",
    "LlvfPoint", "residual_llvf", "jacobian_llvf", "check_llvf_stationarity",
    "map_kkt_to_llvf",
    "SingularSignal", "solve_linear", "numerical_rank", "min_eig_sym",
    "nullspace_basis",
    "SolverConfig", "SolveReport", "solve", "default_start", "merit",
    "merit_gradient", "eoc", "get_system", "KKT_SYSTEM", "LLVF_SYSTEM",
    "IndexClassification", "classify", "kkt_regularity_report",
    "llvf_regularity_report", "KktRegularityReport", "LlvfRegularityReport",
    "lower_level_oracle", "InfeasibleGrid",
    "LambdaSet", "SweepRow", "sweep", "delta_metrics", "select_lambda_star",
    "group_of", "render_reports", "rows_to_csv", "RenderedReports",
    "UnknownStatus", "default_lambda_grid", "boc_lambda_grid",
    "Fixture", "get_problem", "list_problems", "boc_problem",
    "__version__",
]
