"""Forward-mode jet arithmetic against closed-form derivatives."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from kerrcheck import jets as J

finite = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)


def seed2(x, y, order=4):
    """Jets in the first two of four variables at (x, y, 0, 0)."""
    return J.seed([x, y, 0.0, 0.0], order)


class TestBasics:
    def test_seed_values_and_first_partials(self):
        x = J.seed([1.0, 2.0, 3.0, 4.0], 2)
        for mu in range(4):
            assert x[mu].value == mu + 1.0
            grad = x[mu].grad().value
            assert_allclose(grad, np.eye(4)[mu])

    def test_constant_has_no_derivatives(self):
        c = J.Jet.constant(np.array(3.0), 3)
        assert_allclose(c.grad().value, 0.0)

    def test_order_alignment_takes_minimum(self):
        a = J.seed([1.0, 0, 0, 0], 3)[0]
        b = J.seed([1.0, 0, 0, 0], 1)[0]
        assert (a * b).order == 1

    def test_truncate_cannot_raise_order(self):
        a = J.seed([1.0, 0, 0, 0], 1)[0]
        with pytest.raises(J.JetOrderError):
            a.truncate(2)

    def test_derivative_of_order_zero_jet_fails(self):
        a = J.seed([1.0, 0, 0, 0], 0)[0]
        with pytest.raises(J.JetOrderError):
            a.diff(0)

    def test_partial_beyond_order_fails(self):
        a = J.seed([1.0, 0, 0, 0], 2)[0]
        with pytest.raises(J.JetOrderError):
            a.partial((3, 0, 0, 0))


class TestDerivatives:
    def test_polynomial_partials(self):
        x, y, _, _ = seed2(1.5, -0.5)
        f = x**3 * y**2
        assert_allclose(f.partial((1, 0, 0, 0)), 3 * 1.5**2 * 0.25)
        assert_allclose(f.partial((2, 1, 0, 0)), 6 * 1.5 * 2 * -0.5)
        assert_allclose(f.partial((3, 1, 0, 0)), 6 * 2 * -0.5)
        assert_allclose(f.partial((0, 2, 0, 0)), 2 * 1.5**3)

    def test_elementary_functions_fourth_derivatives(self):
        x = J.seed([0.7, 0, 0, 0], 4)[0]
        d4 = (4, 0, 0, 0)
        assert_allclose(J.sin(x).partial(d4), math.sin(0.7), rtol=1e-14)
        assert_allclose(J.cos(x).partial(d4), math.cos(0.7), rtol=1e-14)
        assert_allclose(J.exp(x).partial(d4), math.exp(0.7), rtol=1e-14)
        assert_allclose(J.log(x).partial(d4), -6 / 0.7**4, rtol=1e-13)
        assert_allclose(J.sqrt(x).partial(d4), -15 / 16 * 0.7**-3.5, rtol=1e-13)

    def test_quotient_rule(self):
        x, y, _, _ = seed2(2.0, 3.0, order=2)
        f = x / y
        assert_allclose(f.partial((1, 1, 0, 0)), -1 / 9)
        assert_allclose(f.partial((0, 2, 0, 0)), 2 * 2 / 27)

    def test_matrix_inverse_jet(self):
        x, y, _, _ = seed2(0.3, 0.2, order=3)
        m = J.stack([[2.0 + x, y], [y * x, 3.0 - x * x]])
        inv = J.inv_matrix(m)
        prod = J.contract("ab,bc->ac", m, inv)
        eye = J.Jet.constant(np.eye(2), 3)
        assert_allclose(prod.coef, eye.coef, atol=1e-15)

    def test_stack_places_tensor_axes_after_batch(self):
        pts = np.array([[1.0, 2.0, 0, 0], [3.0, 4.0, 0, 0]])
        x, y, _, _ = J.seed(pts, 1)
        t = J.stack([[x, 0.0], [0.0, y]])
        assert t.shape == (2, 2, 2)
        assert_allclose(t.value[:, 0, 0], [1.0, 3.0])
        assert_allclose(t.value[:, 1, 1], [2.0, 4.0])

    def test_plain_stack_returns_array(self):
        out = J.stack([[1.0, 2.0], [3.0, 4.0]])
        assert isinstance(out, np.ndarray)
        assert_allclose(out, [[1, 2], [3, 4]])


class TestProperties:
    @settings(max_examples=40, deadline=None)
    @given(finite, finite)
    def test_mixed_partials_commute(self, a, b):
        x, y, _, _ = seed2(a, b)
        f = J.exp(x * y) * J.sin(x + 2 * y)
        assert_allclose(f.diff(0).diff(1).value, f.diff(1).diff(0).value, rtol=1e-12, atol=1e-12)
        assert_allclose(f.partial((2, 1, 0, 0)), f.diff(1).diff(0).diff(0).value, rtol=1e-12, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(finite, finite)
    def test_product_rule(self, a, b):
        x, y, _, _ = seed2(a, b, order=2)
        u, v = J.cos(x) * y, J.exp(y - x)
        lhs = (u * v).diff(0).value
        rhs = u.diff(0).value * v.value + u.value * v.diff(0).value
        assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(min_value=0.2, max_value=5.0))
    def test_power_matches_repeated_product(self, a):
        x = J.seed([a, 0, 0, 0], 4)[0]
        assert_allclose((x**3).coef, (x * x * x).coef, rtol=1e-13, atol=1e-13)
        assert_allclose(J.power(x, -2.0).coef, (1.0 / (x * x)).coef, rtol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(finite)
    def test_pythagorean_identity_all_orders(self, a):
        x = J.seed([a, 0, 0, 0], 4)[0]
        one = J.sin(x) ** 2 + J.cos(x) ** 2
        expected = np.zeros_like(one.coef)
        expected[..., 0] = 1.0
        assert_allclose(one.coef, expected, atol=1e-14)
