"""Bundled benchmark problems: data oracles, fixtures, and the scalable family."""

import numpy as np
import pytest

from bisolve.kkt import KktPoint, residual_kkt
from bisolve.llvf import LlvfPoint, residual_llvf
from bisolve.suite import boc_problem, get_problem, list_problems

BUNDLED = ["sc98", "bard91", "lampariello-sagratella", "dempe-dutta-a",
           "dempe-dutta-b", "dempe-dutta-b-shifted", "kinked-value", "boc"]


def fixture_residual(problem, fixture):
    if fixture.model == "kkt":
        return residual_kkt(problem, fixture.lam, fixture.point)
    return residual_llvf(problem, fixture.lam, fixture.point)


class TestRegistry:
    def test_list_problems(self):
        assert list_problems() == sorted(BUNDLED[:-1]) + ["boc"]

    def test_unknown_name_raises_with_catalog(self):
        with pytest.raises(KeyError, match="sc98"):
            get_problem("nope")

    def test_every_problem_loads(self):
        for name in BUNDLED:
            problem, fixtures = get_problem(name)
            assert problem.dims.n >= 1 and problem.dims.m >= 1
            assert isinstance(fixtures, list)

    def test_boc_name_variants(self):
        default, _ = get_problem("boc")
        assert default.dims.m == 20  # half_dim defaults to 10
        sized, _ = get_problem("boc-4")
        assert sized.dims.m == 8
        explicit, _ = get_problem("boc", half_dim=3)
        assert explicit.dims.m == 6

    def test_statuses(self):
        expected = {
            "sc98": "optimal",
            "bard91": "optimal",
            "lampariello-sagratella": "optimal",
            "dempe-dutta-a": "optimal",
            "dempe-dutta-b": "known",
            "dempe-dutta-b-shifted": "known",
            "kinked-value": "optimal",
            "boc": "unknown",
        }
        for name, status in expected.items():
            problem, _ = get_problem(name)
            assert problem.status == status, name


class TestDataOracles:
    """Objective/constraint values recomputed from the closed forms."""

    def test_sc98_values_at_optimum(self):
        problem, _ = get_problem("sc98")
        x, y = np.array([1.0]), np.array([3.0])
        assert problem.F(x, y) == pytest.approx(5.0)   # (1-3)^2 + (3-2)^2
        assert problem.f(x, y) == pytest.approx(4.0)   # (3-5)^2
        np.testing.assert_allclose(problem.G(x, y), [-1.0, -7.0])
        np.testing.assert_allclose(problem.g(x, y), [0.0, -3.0, -7.0])

    def test_sc98_derivatives(self):
        problem, _ = get_problem("sc98")
        x, y = np.array([2.0]), np.array([1.0])
        np.testing.assert_allclose(problem.grad_F(x, y), [-2.0, -2.0])
        np.testing.assert_allclose(problem.grad_f(x, y), [0.0, -8.0])
        np.testing.assert_allclose(problem.hess_f(x, y),
                                   [[0.0, 0.0], [0.0, 2.0]])

    def test_bard91_values_at_optimum(self):
        problem, _ = get_problem("bard91")
        x, y = np.array([2.0]), np.array([6.0, 0.0])
        assert problem.F(x, y) == pytest.approx(2.0)    # x + y2
        assert problem.f(x, y) == pytest.approx(12.0)   # 2 y1 + x y2
        np.testing.assert_allclose(problem.G(x, y), [0.0, -2.0])
        np.testing.assert_allclose(problem.g(x, y), [0.0, -6.0, 0.0])

    def test_lampariello_sagratella_values_at_optimum(self):
        problem, _ = get_problem("lampariello-sagratella")
        x, y = np.array([0.5]), np.array([0.0, 0.5])
        assert problem.F(x, y) == pytest.approx(0.5)  # x^2 + (y1+y2)^2
        assert problem.f(x, y) == pytest.approx(0.0)  # y1
        np.testing.assert_allclose(problem.g(x, y), [0.0, 0.0, -0.5])

    def test_dempe_dutta_a_values(self):
        problem, _ = get_problem("dempe-dutta-a")
        x, y = np.array([0.0]), np.array([0.0, 0.0])
        assert problem.F(x, y) == pytest.approx(0.0)
        assert problem.f(x, y) == pytest.approx(0.0)
        # Both parabolic constraints are active at the optimum with
        # linearly dependent gradients in y.
        np.testing.assert_allclose(problem.g(x, y), [0.0, 0.0])
        Jy = problem.jac_g(x, y)[:, 1:]
        assert np.linalg.matrix_rank(np.array(Jy)) == 1

    def test_dempe_dutta_b_values(self):
        plain, _ = get_problem("dempe-dutta-b")
        x, y = np.array([1.0]), np.array([0.0])
        assert plain.F(x, y) == pytest.approx(0.0)
        assert plain.f(x, y) == pytest.approx(0.0)
        shifted, _ = get_problem("dempe-dutta-b-shifted")
        x, y = np.array([1.0]), np.array([-1.0])
        assert shifted.F(x, y) == pytest.approx(1.0)
        assert shifted.f(x, y) == pytest.approx(-1.0)
        np.testing.assert_allclose(shifted.g(x, y), [0.0])

    def test_kinked_value_values(self):
        problem, _ = get_problem("kinked-value")
        x, y = np.array([0.0]), np.array([1.0])
        assert problem.F(x, y) == pytest.approx(0.0)
        assert problem.f(x, y) == pytest.approx(0.0)
        # f = x(y - 1): linear in y for fixed x, kink of the value function.
        assert problem.f(np.array([2.0]), np.array([0.0])) == pytest.approx(-2.0)

    def test_third_contract_nonzero_only_for_cubic_family(self):
        rng = np.random.default_rng(3)
        for name in BUNDLED:
            problem, _ = get_problem(name, half_dim=2)
            d = problem.dims
            x, y = rng.standard_normal(d.n), rng.standard_normal(d.m)
            z, s = rng.standard_normal(d.q), rng.standard_normal(d.m)
            T = problem.third_contract(x, y, z, s)
            norm = np.max(np.abs(T), initial=0.0)
            if name.startswith("dempe-dutta-b"):
                assert norm > 0.0, name
            else:
                assert norm == pytest.approx(0.0, abs=1e-12), name


class TestFixtures:
    def test_every_fixture_satisfies_its_residual_gate(self):
        for name in BUNDLED:
            problem, fixtures = get_problem(name)
            for fixture in fixtures:
                res = fixture_residual(problem, fixture)
                assert np.max(np.abs(res)) <= fixture.tol, (
                    f"{name}/{fixture.model} at lam={fixture.lam}"
                )

    def test_exact_fixtures_are_exact(self):
        # The hand-derived sc98 roots are exact to full precision.
        problem, fixtures = get_problem("sc98")
        for fixture in fixtures:
            res = fixture_residual(problem, fixture)
            assert np.max(np.abs(res)) <= 1e-12

    def test_fixture_points_validate(self):
        for name in BUNDLED:
            problem, fixtures = get_problem(name)
            for fixture in fixtures:
                fixture.point.validate(problem.dims)
                assert fixture.model in ("kkt", "llvf")
                assert fixture.lam > 0

    def test_fixture_coverage(self):
        # The three classical instances each ship roots of both systems.
        for name in ("sc98", "bard91", "lampariello-sagratella"):
            _, fixtures = get_problem(name)
            assert sorted(f.model for f in fixtures) == ["kkt", "llvf"]


class TestSystemDimensions:
    def test_kkt_system_exceeds_llvf_by_q(self):
        # dim Phi_1 = n + 2m + p + 3q vs dim Phi_2 = n + 2m + p + 2q.
        for name in BUNDLED:
            problem, _ = get_problem(name, half_dim=3)
            d = problem.dims
            assert KktPoint.dim(d) - LlvfPoint.dim(d) == d.q, name


class TestBocFamily:
    def test_dims_law(self):
        for h in (2, 5, 10):
            problem = boc_problem(h)
            d = problem.dims
            assert (d.n, d.m, d.p, d.q) == (2, 2 * h, 3, 4 * h)
            assert problem.name == f"boc-{h}"

    def test_half_dim_lower_bound(self):
        with pytest.raises(ValueError):
            boc_problem(1)

    def test_upper_constraints_at_origin(self):
        problem = boc_problem(4)
        x, y = np.zeros(2), np.zeros(8)
        np.testing.assert_allclose(problem.G(x, y), [-1.0, 0.0, 0.0])

    def test_difference_rows_pin_state_to_derivative(self):
        # At any point with D y1 = y2 the paired difference rows vanish.
        h = 3
        problem = boc_problem(h)
        rng = np.random.default_rng(0)
        y1 = rng.standard_normal(h)
        D = np.eye(h) - np.diag(np.ones(h - 1), -1)
        y2 = D @ y1
        g = problem.g(rng.standard_normal(2), np.concatenate([y1, y2]))
        np.testing.assert_allclose(g[2 * h:], 0.0, atol=1e-12)

    def test_lower_objective_zero_when_tracking(self):
        # f = 0.5||y1 - Px||^2 + 0.5||y2 - Px||^2 vanishes at y1 = y2 = Px.
        h = 2
        problem = boc_problem(h)
        x = np.array([3.0, 1.0])
        avg = np.full(h, x.mean())
        y = np.concatenate([avg, avg])
        assert problem.f(x, y) == pytest.approx(0.0)
        assert problem.f(x, y + 1e-1) > 0.0

    def test_build_is_deterministic(self):
        a = boc_problem(5)
        b = boc_problem(5)
        for key in ("F", "f"):
            np.testing.assert_array_equal(a.quadratic_data[key][0],
                                          b.quadratic_data[key][0])
        np.testing.assert_array_equal(a.quadratic_data["g"][0],
                                      b.quadratic_data["g"][0])
