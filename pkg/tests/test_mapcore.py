import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from henonpressure.mapcore import (
    MapParams,
    ParameterError,
    TangentDir,
    Variant,
    fixed_points,
    henon_apply,
    henon_inverse,
    henon_inverse_jacobian,
    henon_jacobian,
    iterate,
    line_angle,
    quad_apply,
    slope,
)

params_st = st.builds(
    MapParams,
    a=st.floats(1.8, 2.4),
    b=st.floats(1e-5, 1e-2),
    variant=st.sampled_from([Variant.REVERSING, Variant.PRESERVING]),
)
points_st = st.tuples(st.floats(-1.5, 1.5), st.floats(-0.05, 0.05))


class TestMapParams:
    def test_sign_and_det(self):
        rev = MapParams(2.0, 1e-3, Variant.REVERSING)
        pres = MapParams(2.0, 1e-3, Variant.PRESERVING)
        assert rev.sign == 1.0 and rev.det == pytest.approx(-1e-3)
        assert pres.sign == -1.0 and pres.det == pytest.approx(1e-3)

    @pytest.mark.parametrize("a,b,variant", [
        (float("nan"), 1e-3, Variant.REVERSING),
        (2.0, 0.0, Variant.REVERSING),
        (2.0, 1e-3, Variant.ONE_DIMENSIONAL),
        (2.0, 0.5, Variant.REVERSING),
        (-1.0, 1e-3, Variant.REVERSING),
    ])
    def test_rejects(self, a, b, variant):
        with pytest.raises(ParameterError):
            MapParams(a, b, variant)

    def test_window(self):
        MapParams(2.0, 1e-3).check_window()
        with pytest.raises(ParameterError):
            MapParams(1.5, 1e-3).check_window()

    def test_with_a_keeps_b_and_variant(self):
        p = MapParams(2.0, 1e-3, Variant.PRESERVING).with_a(2.1)
        assert (p.a, p.b, p.variant) == (2.1, 1e-3, Variant.PRESERVING)

    def test_one_dimensional_forbids_planar_ops(self):
        p = MapParams(2.0, 0.0, Variant.ONE_DIMENSIONAL)
        with pytest.raises(ParameterError):
            henon_apply(p, [0.1, 0.0])


class TestMaps:
    def test_apply_by_hand(self):
        p = MapParams(2.0, 1e-3, Variant.REVERSING)
        np.testing.assert_allclose(henon_apply(p, [0.5, 0.01]), [0.51, 5e-4])
        q = MapParams(2.0, 1e-3, Variant.PRESERVING)
        np.testing.assert_allclose(henon_apply(q, [0.5, 0.01]), [0.51, -5e-4])

    def test_quad_apply(self):
        assert quad_apply(2.0, 0.5) == 0.5
        np.testing.assert_allclose(quad_apply(2.0, np.array([0.0, 1.0])), [1.0, -1.0])

    @settings(max_examples=60, deadline=None)
    @given(params_st, points_st)
    def test_inverse_round_trip(self, p, z):
        z = np.array(z)
        np.testing.assert_allclose(henon_inverse(p, henon_apply(p, z)), z, atol=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(params_st, points_st)
    def test_jacobian_determinant(self, p, z):
        assert np.linalg.det(henon_jacobian(p, z)) == pytest.approx(p.det, rel=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(params_st, points_st)
    def test_inverse_jacobian(self, p, z):
        z = np.array(z)
        w = henon_apply(p, z)
        M = henon_jacobian(p, z) @ henon_inverse_jacobian(p, w)
        np.testing.assert_allclose(M, np.eye(2), atol=1e-8)

    @settings(max_examples=40, deadline=None)
    @given(params_st, points_st)
    def test_jacobian_matches_finite_difference(self, p, z):
        z = np.array(z)
        h = 1e-6
        fd = np.column_stack([(henon_apply(p, z + h * e) - henon_apply(p, z - h * e)) / (2 * h)
                              for e in np.eye(2)])
        np.testing.assert_allclose(henon_jacobian(p, z), fd, atol=1e-7)

    def test_iterate_both_ways(self):
        p = MapParams(2.0, 1e-3)
        z = np.array([0.3, 0.0])
        np.testing.assert_allclose(iterate(p, iterate(p, z, 3), -3), z, atol=1e-9)


class TestDirections:
    def test_slope(self):
        assert slope([2.0, 1.0]) == 0.5
        assert slope([0.0, 1.0]) == math.inf

    def test_tangentdir_is_a_line(self):
        a = TangentDir.from_vector([1.0, 1.0])
        b = TangentDir.from_vector([-1.0, -1.0])
        assert a.angle_to(b) == pytest.approx(0.0, abs=1e-15)
        assert a.slope == pytest.approx(1.0)

    @given(st.floats(0, math.pi), st.floats(0, math.pi))
    def test_line_angle_symmetric_and_bounded(self, t1, t2):
        u = [math.cos(t1), math.sin(t1)]
        v = [math.cos(t2), math.sin(t2)]
        ang = line_angle(u, v)
        assert 0.0 <= ang <= math.pi / 2 + 1e-15
        assert ang == pytest.approx(line_angle(v, u), abs=1e-14)


class TestFixedPoints:
    @settings(max_examples=60, deadline=None)
    @given(params_st)
    def test_fixed_and_saddle(self, p):
        for s in fixed_points(p):
            np.testing.assert_allclose(henon_apply(p, s.location), s.location, atol=1e-12)
            J = henon_jacobian(p, s.location)
            v = s.dir_unstable.vector
            assert line_angle(J @ v, v) < 1e-9
            assert abs(s.eig_unstable) > 1 > abs(s.eig_stable)

    def test_b_zero_limit(self):
        # at b -> 0, a = 2 the saddles are x = 1/2 and x = -1 with multipliers -2 and 4
        P, Q = fixed_points(MapParams(2.0, 0.0, Variant.ONE_DIMENSIONAL))
        assert P.location[0] == pytest.approx(0.5)
        assert Q.location[0] == pytest.approx(-1.0)
        assert Q.lyapunov_unstable == pytest.approx(math.log(4.0))
        assert P.lyapunov_unstable == pytest.approx(math.log(2.0))

    def test_Q_exponent_near_log4(self, p_star):
        _, Q = fixed_points(p_star)
        assert abs(Q.lyapunov_unstable - math.log(4.0)) < 0.01
