"""Active-set classification, regularity reports, and the value oracle."""

import numpy as np
import pytest

from bisolve.diagnostics import (InfeasibleGrid, classify,
                                 kkt_regularity_report, llvf_regularity_report,
                                 lower_level_oracle)
from bisolve.suite import get_problem


def fixture_for(name, model):
    problem, fixtures = get_problem(name)
    return problem, next(f for f in fixtures if f.model == model)


class TestClassify:
    def test_basic_partition(self):
        # Active constraint with positive multiplier; two inactive ones.
        out = classify([0.0, -3.0, -7.0], [62.0, 0.0, 0.0])
        assert out.nu == (0,)
        assert out.eta == (1, 2)
        assert out.theta == ()
        assert out.violations == ()
        assert out.active == (0,)

    def test_default_tau_scales_with_multiplier(self):
        out = classify([0.0, -3.0], [62.0, 0.0])
        assert out.tau == pytest.approx(1e-6 * 63.0)

    def test_degenerate_index(self):
        out = classify([0.0], [0.0])
        assert out.theta == (0,)
        assert out.active == (0,)

    def test_violations(self):
        # Infeasible; negative multiplier; positive multiplier while inactive.
        out = classify([1.0, -1.0, -1.0], [0.0, -1.0, 1.0])
        assert out.violations == (0, 1, 2)
        assert out.eta == () and out.theta == () and out.nu == ()

    def test_explicit_tau(self):
        out = classify([-0.05, -3.0], [0.0, 0.0], tau=0.1)
        assert out.theta == (0,)  # within tau of zero counts as active
        assert out.eta == (1,)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            classify([0.0, 1.0], [0.0])

    def test_empty_block(self):
        out = classify([], [])
        assert out.eta == () and out.active == ()


class TestKktRegularity:
    def test_classic_instance_satisfies_both_variants(self):
        problem, fixture = fixture_for("sc98", "kkt")
        report = kkt_regularity_report(problem, fixture.lam, fixture.point)
        assert report.family_independent
        assert report.family_rank == report.family_rows == 2
        assert report.licq_ok and report.col_rank_ok
        assert report.cone_dim == 2 and report.test_dim == 1
        assert report.min_eig == pytest.approx(2.0)
        assert report.ssosc_ok
        assert report.general_holds and report.fullrank_holds

    def test_classic_instance_index_sets(self):
        problem, fixture = fixture_for("sc98", "kkt")
        report = kkt_regularity_report(problem, fixture.lam, fixture.point)
        assert report.upper.eta == (0, 1)     # both bounds inactive at x=1
        assert report.lower.nu == (0,)        # first lower constraint active
        assert report.sign.nu == (1, 2)       # z2 = z3 = 0 with w > 0

    def test_bilinear_instance_fails_gradient_family(self):
        # Five stacked gradient rows only span rank 3: the general variant
        # fails at the optimum; the column-rank condition of the full-rank
        # variant fails as well.
        problem, fixture = fixture_for("bard91", "kkt")
        report = kkt_regularity_report(problem, fixture.lam, fixture.point)
        assert not report.family_independent
        assert (report.family_rank, report.family_rows) == (3, 5)
        assert not report.col_rank_ok
        assert not report.general_holds
        assert not report.fullrank_holds
        # The failure is not an active-gradient (LICQ) issue.
        assert report.licq_ok

    def test_simplex_instance_fails_both_variants(self):
        problem, fixture = fixture_for("lampariello-sagratella", "kkt")
        report = kkt_regularity_report(problem, fixture.lam, fixture.point)
        assert not report.family_independent
        assert not report.col_rank_ok
        assert not report.general_holds and not report.fullrank_holds
        # Degenerate upper-level constraint: active with zero multiplier.
        assert report.upper.theta == (0,)


class TestLlvfRegularity:
    def test_classic_instance_holds(self):
        problem, fixture = fixture_for("sc98", "llvf")
        report = llvf_regularity_report(problem, fixture.lam, fixture.point)
        assert report.licq_upper_ok and report.licq_value_ok
        assert report.theta_value_empty
        assert report.cone_dim == 1 and report.test_dim == 1
        assert report.min_eig == pytest.approx(10.0 / 9.0)
        assert report.ssosc_ok and report.holds

    def test_bilinear_instance_holds_with_trivial_test_space(self):
        # Unlike its KKT-side verdict, the bilinear instance passes here:
        # the curvature test is vacuous because the test space is {0}.
        problem, fixture = fixture_for("bard91", "llvf")
        report = llvf_regularity_report(problem, fixture.lam, fixture.point)
        assert report.holds
        assert report.test_dim == 0
        assert report.min_eig is None
        assert report.ssosc_ok

    def test_simplex_instance_fails_on_degenerate_value_block(self):
        # A value-function constraint is active with zero multiplier, which
        # the theory excludes.
        problem, fixture = fixture_for("lampariello-sagratella", "llvf")
        report = llvf_regularity_report(problem, fixture.lam, fixture.point)
        assert not report.theta_value_empty
        assert report.value.theta == (0,)
        assert not report.holds
        # Everything else about the point is fine.
        assert report.licq_upper_ok and report.licq_value_ok
        assert report.ssosc_ok


class TestLowerLevelOracle:
    def test_classic_instance_value(self):
        # At x = 1 the lower-level feasible set is 1.5 <= y <= 3 and the
        # objective (y-5)^2 is decreasing there: phi(1) = 4 at y = 3.
        problem, _ = get_problem("sc98")
        result = lower_level_oracle(problem, [1.0], grid_radius=5.0,
                                    grid_points=11)
        assert result.value == pytest.approx(4.0, abs=1e-10)
        np.testing.assert_allclose(result.argmin, [3.0], atol=1e-6)
        assert result.feasible_points == 2

    def test_polish_beats_grid_resolution(self):
        # With a grid that misses the minimizer, coordinate descent still
        # recovers it to ~1e-7.
        problem, _ = get_problem("sc98")
        result = lower_level_oracle(problem, [1.0], grid_radius=4.7,
                                    grid_points=7)
        assert result.value == pytest.approx(4.0, abs=1e-6)

    def test_kinked_value_function(self):
        # phi(x) = -x for x > 0: the oracle lands on the boundary y = 0.
        problem, _ = get_problem("kinked-value")
        result = lower_level_oracle(problem, [0.5], grid_radius=2.0,
                                    grid_points=9)
        assert result.value == pytest.approx(-0.5, abs=1e-10)
        np.testing.assert_allclose(result.argmin, [0.0], atol=1e-6)

    def test_infeasible_grid_raises(self):
        # At x = 100 the second and third constraints exclude every y.
        problem, _ = get_problem("sc98")
        with pytest.raises(InfeasibleGrid):
            lower_level_oracle(problem, [100.0], grid_radius=5.0,
                               grid_points=11)

    def test_dimension_guard(self):
        problem, _ = get_problem("boc", half_dim=2)  # m = 4 > 3
        with pytest.raises(ValueError):
            lower_level_oracle(problem, [0.0, 0.0], grid_radius=1.0,
                               grid_points=5)

    def test_grid_point_guard(self):
        problem, _ = get_problem("sc98")
        with pytest.raises(ValueError):
            lower_level_oracle(problem, [1.0], grid_radius=1.0, grid_points=1)

    def test_two_dimensional_lower_level(self):
        # bard91 at x = 2: minimize 2 y1 + 2 y2 over y >= 0,
        # y1 + y2 >= 6 -> optimum 12 on the whole segment.
        problem, _ = get_problem("bard91")
        result = lower_level_oracle(problem, [2.0], grid_radius=8.0,
                                    grid_points=17, y_center=[6.0, 6.0])
        assert result.value == pytest.approx(12.0, abs=1e-6)
