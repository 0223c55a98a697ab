"""Fischer-Burmeister scalar function, derivative elements, and blocks."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bisolve.fb import fb, fb_block, fb_derivative_element

finite_floats = st.floats(min_value=-1e8, max_value=1e8,
                          allow_nan=False, allow_infinity=False)


class TestFbValue:
    def test_zero_on_complementary_pairs(self):
        # fb(a, b) = 0 iff a >= 0, b >= 0, a*b = 0.
        assert fb(0.0, 0.0) == 0.0
        assert fb(3.0, 0.0) == pytest.approx(0.0, abs=1e-15)
        assert fb(0.0, 7.5) == pytest.approx(0.0, abs=1e-15)

    def test_hand_values(self):
        assert fb(3.0, 4.0) == pytest.approx(-2.0)
        assert fb(-3.0, 4.0) == pytest.approx(4.0)
        assert fb(1.0, 1.0) == pytest.approx(np.sqrt(2.0) - 2.0)

    def test_vectorized(self):
        out = fb(np.array([3.0, 0.0]), np.array([4.0, -2.0]))
        np.testing.assert_allclose(out, [-2.0, 4.0])

    def test_no_overflow_on_huge_inputs(self):
        # hypot avoids squaring, so 1e200 inputs stay finite.
        assert np.isfinite(fb(1e200, 1e200))

    @given(finite_floats, finite_floats)
    def test_sign_characterization(self, a, b):
        val = float(fb(a, b))
        complementary = a >= 0 and b >= 0 and abs(a * b) <= 1e-9 * max(
            1.0, a * a, b * b)
        if complementary:
            assert abs(val) <= 1e-6 * (1.0 + abs(a) + abs(b))


class TestDerivativeElement:
    def test_smooth_point_matches_gradient_formula(self):
        d = fb_derivative_element(3.0, 4.0)
        assert d.d_a[0] == pytest.approx(3.0 / 5.0 - 1.0)
        assert d.d_b[0] == pytest.approx(4.0 / 5.0 - 1.0)

    def test_kink_element(self):
        d = fb_derivative_element(0.0, 0.0)
        expected = 1.0 / np.sqrt(2.0) - 1.0
        assert d.d_a[0] == pytest.approx(expected)
        assert d.d_b[0] == pytest.approx(expected)

    def test_kink_radius(self):
        # Just inside the degenerate radius: kink element. Just outside: not.
        inside = fb_derivative_element(5e-15, 5e-15)
        assert inside.d_a[0] == pytest.approx(1.0 / np.sqrt(2.0) - 1.0)
        outside = fb_derivative_element(1e-10, 0.0)
        assert outside.d_a[0] == pytest.approx(0.0, abs=1e-12)
        assert outside.d_b[0] == pytest.approx(-1.0)

    def test_matches_finite_differences_away_from_kink(self):
        rng = np.random.default_rng(0)
        h = 1e-7
        for _ in range(50):
            a, b = rng.uniform(-5, 5, size=2)
            if np.hypot(a, b) < 1e-3:
                continue
            d = fb_derivative_element(a, b)
            fd_a = (fb(a + h, b) - fb(a - h, b)) / (2 * h)
            fd_b = (fb(a, b + h) - fb(a, b - h)) / (2 * h)
            assert d.d_a[0] == pytest.approx(fd_a, abs=1e-6)
            assert d.d_b[0] == pytest.approx(fd_b, abs=1e-6)

    @settings(max_examples=200)
    @given(finite_floats, finite_floats)
    def test_element_lies_on_derivative_disc(self, a, b):
        # Every generalized-derivative element satisfies
        # (d_a + 1)^2 + (d_b + 1)^2 <= 1 (the unit disc around (-1, -1)).
        d = fb_derivative_element(a, b)
        lhs = (d.d_a[0] + 1.0) ** 2 + (d.d_b[0] + 1.0) ** 2
        assert lhs <= 1.0 + 1e-12

    def test_partials_are_nonpositive_components_shifted(self):
        # d_a, d_b always lie in [-2, 0].
        rng = np.random.default_rng(1)
        a = rng.uniform(-1e3, 1e3, size=200)
        b = rng.uniform(-1e3, 1e3, size=200)
        d = fb_derivative_element(a, b)
        assert np.all(d.d_a <= 1e-12) and np.all(d.d_a >= -2.0 - 1e-12)
        assert np.all(d.d_b <= 1e-12) and np.all(d.d_b >= -2.0 - 1e-12)


class TestFbBlock:
    def test_zero_on_complementary_constraint_block(self):
        # c <= 0 with multiplier >= 0 and mult*c = 0.
        c = np.array([-3.0, 0.0])
        mult = np.array([0.0, 5.0])
        values, _ = fb_block(c, mult)
        np.testing.assert_allclose(values, 0.0, atol=1e-15)

    def test_nonzero_on_violations(self):
        values, _ = fb_block(np.array([1.0]), np.array([0.0]))   # infeasible
        assert values[0] != pytest.approx(0.0, abs=1e-9)
        values, _ = fb_block(np.array([-1.0]), np.array([-1.0]))  # bad sign
        assert values[0] != pytest.approx(0.0, abs=1e-9)

    def test_derivative_is_at_negated_constraint(self):
        c, mult = np.array([-3.0]), np.array([4.0])
        _, deriv = fb_block(c, mult)
        expected = fb_derivative_element(3.0, 4.0)
        np.testing.assert_allclose(deriv.d_a, expected.d_a)
        np.testing.assert_allclose(deriv.d_b, expected.d_b)

    def test_shape_mismatch_raises(self):
        with pytest.raises(ValueError):
            fb_block(np.zeros(2), np.zeros(3))

    def test_chain_rule_reproduces_directional_difference(self):
        # fb(-c(t), mult) along c(t) = c0 + t: slope is -d_a.
        c0, mult = -2.0, 1.5
        _, deriv = fb_block(np.array([c0]), np.array([mult]))
        h = 1e-7
        hi, _ = fb_block(np.array([c0 + h]), np.array([mult]))
        lo, _ = fb_block(np.array([c0 - h]), np.array([mult]))
        slope = (hi[0] - lo[0]) / (2 * h)
        assert slope == pytest.approx(-deriv.d_a[0], abs=1e-6)
