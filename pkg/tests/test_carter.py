import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from kerrcheck import carter as C
from kerrcheck import jets as J
from kerrcheck.jets import JetOrderError
from kerrcheck.kerr_metric import DomainError, KerrParams, metric_tensor

KERR = KerrParams(0.3, 1.0)
P0 = [0.0, 3.0, 1.0, 0.0]


class TestTensor:
    def test_schwarzschild_is_angular(self):
        r, th = 5.0, 0.8
        ct = C.carter_tensor(KerrParams(0.0, 1.0), [0.0, r, th, 0.0]).C
        expected = np.zeros((4, 4))
        expected[2, 2] = r**4
        expected[3, 3] = r**4 * math.sin(th) ** 2
        assert_allclose(ct, expected, atol=1e-12 * r**4)

    def test_geodesic_pairing(self):
        r, th = 5.0, 0.8
        ct = C.carter_tensor(KerrParams(0.0, 1.0), [0.0, r, th, 0.0]).C
        u = np.array([1.3, -0.2, 0.07, 0.04])
        lhs = u @ ct @ u
        assert_allclose(lhs, r**4 * (0.07**2 + math.sin(th) ** 2 * 0.04**2), rtol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(min_value=2.0, max_value=30.0), st.floats(min_value=0.05, max_value=3.09))
    def test_trace(self, r, th):
        params = KerrParams(0.7, 1.0)
        p = np.array([0.0, r, th, 0.0])
        ct = C.carter_tensor(params, p)
        gi = np.linalg.inv(metric_tensor(params, p))
        q2 = r * r + (0.7 * math.cos(th)) ** 2
        expected = -4 * (0.7 * math.cos(th)) ** 2 + 2 * q2
        assert_allclose(np.einsum("ab,ab->", gi, ct.C), expected, rtol=1e-12, atol=1e-12 * r * r)

    def test_symmetric_and_raised(self):
        ct = C.carter_tensor(KERR, P0)
        assert_allclose(ct.C, ct.C.T, atol=1e-14)
        g = metric_tensor(KERR, np.array(P0))
        assert_allclose(g @ ct.C_inv_mixed @ g, ct.C, rtol=1e-12, atol=1e-12)

    def test_axis_rejected(self):
        with pytest.raises(DomainError):
            C.carter_tensor(KERR, [0.0, 3.0, 0.0, 0.0])


class TestKillingTensor:
    def test_kerr_point(self):
        assert C.killing_tensor_residual(KERR, P0) < 1e-8

    def test_schwarzschild_point(self):
        assert C.killing_tensor_residual(KerrParams(0.0, 1.0), [0.0, 5.0, 1.0, 0.0]) < 1e-10

    def test_control_violation(self):
        def spoil(geo, ct):
            r = geo.coords[1]
            bump = np.zeros((4, 4))
            bump[1, 1] = 1.0
            return ct + J.contract(",ab->ab", r, J.Jet.constant(bump, ct.order))

        assert C.killing_tensor_residual(KERR, P0, modify=spoil) > 1e-3

    @settings(max_examples=30, deadline=None)
    @given(
        st.sampled_from([0.0, 0.05, 0.3, 0.7]),
        st.sampled_from([0.5, 1.0, 2.0]),
        st.floats(min_value=1.05, max_value=20.0),
        st.floats(min_value=0.1, max_value=math.pi - 0.1),
    )
    def test_property(self, a_over_m, m, r_over_rp, th):
        params = KerrParams(a_over_m * m, m)
        assert C.killing_tensor_residual(params, [0.0, r_over_rp * params.r_plus, th, 0.0]) < 1e-8


class TestOperator:
    def test_constant(self):
        assert abs(C.carter_operator_apply(KERR, lambda x: 3.0 + 0 * x[0], P0)) < 1e-14

    def test_radial_function_schwarzschild(self):
        val = C.carter_operator_apply(KerrParams(0.0, 1.0), lambda x: J.exp(-x[1]) * x[1] ** 2, P0)
        assert abs(val) < 1e-14

    def test_cos_theta_schwarzschild(self):
        for r in (3.0, 7.0):
            val = C.carter_operator_apply(KerrParams(0.0, 1.0), lambda x: J.cos(x[2]), [0.0, r, 1.1, 0.0])
            assert_allclose(val, -2 * math.cos(1.1), rtol=1e-12)

    def test_angular_laplacian_degeneracy(self):
        # Y_2^1-type harmonic: eigenvalue -6 of the unit-sphere Laplacian
        def psi(x):
            return J.sin(x[2]) * J.cos(x[2]) * J.cos(x[3])

        for r, th, ph in [(3.0, 0.7, 0.2), (9.0, 2.0, 1.5)]:
            p = [0.0, r, th, ph]
            val = C.carter_operator_apply(KerrParams(0.0, 1.0), psi, p)
            assert_allclose(val, -6 * math.sin(th) * math.cos(th) * math.cos(ph), rtol=1e-9, atol=1e-12)

    def test_order_too_low(self):
        with pytest.raises(JetOrderError):
            C.carter_operator_apply(KERR, lambda x: x[1], P0, order=1)


class TestCommutator:
    def test_constant(self):
        cb, bc = C.commutator_terms(KERR, lambda x: 1.0 + 0 * x[0], P0)
        assert abs(cb) < 1e-14 and abs(bc) < 1e-14

    def test_schwarzschild_radial_times_cos(self):
        res = C.commutator_residual(KerrParams(0.0, 1.0), lambda x: J.exp(-x[1] / 4) * J.cos(x[2]), [0.0, 4.0, 1.0, 0.0])
        assert res < 1e-6

    @pytest.mark.parametrize("name", sorted(C.TEST_FIELDS))
    @pytest.mark.parametrize("params", [KerrParams(0.0, 1.0), KERR, KerrParams(1.4, 2.0)], ids=["a0", "a03", "a07m2"])
    def test_catalogue(self, name, params):
        pts = np.array([[0.3, 2.0 * params.r_plus, 0.6, 0.4], [1.0, 6.0 * params.m, 2.2, 2.0]])
        res = C.commutator_residual(params, C.TEST_FIELDS[name], pts)
        assert res.max() < 1e-6

    def test_catalogue_is_nontrivial(self):
        cb, _ = C.commutator_terms(KERR, C.TEST_FIELDS["gauss_r_cos_t"], P0)
        assert abs(cb) > 1e-3

    def test_at_least_five_fields(self):
        assert len(C.TEST_FIELDS) >= 5
