import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from henonpressure.thermo1d import (
    LOG2,
    LOG4,
    PressureCurve,
    detect_kink,
    orbit_sum_curve,
    orbit_sum_pressure,
    t2_multiplier_closed_form,
    quad_periodic_points,
    t2_partition_closed_form,
    t2_periodic_points,
    t2_pressure_closed_form,
    t2_pressure_curve,
)
from henonpressure.mapcore import quad_apply

GRID = np.round(np.arange(-3.0, 1.5 + 1e-9, 0.02), 10)


class TestClosedForm:
    def test_values(self):
        assert t2_pressure_closed_form(0.0) == LOG2
        assert t2_pressure_closed_form(1.0) == 0.0
        assert t2_pressure_closed_form(-1.0) == LOG4

    def test_vectorised(self):
        np.testing.assert_allclose(t2_pressure_closed_form(np.array([-2.0, 2.0])),
                                   [2 * LOG4, -LOG2])

    def test_multiplier_exponent(self):
        np.testing.assert_array_equal(t2_multiplier_closed_form([-1.0, 0.5]), [LOG4, LOG2])


class TestEnumerators:
    @pytest.mark.parametrize("n", [1, 2, 5, 9])
    def test_t2_count_and_fixed(self, n):
        pts = t2_periodic_points(n)
        assert len(pts) == 2 ** n
        x = pts.x.copy()
        for _ in range(n):
            x = quad_apply(2.0, x)
        np.testing.assert_allclose(x, pts.x, atol=1e-9 * 4 ** n)

    @pytest.mark.parametrize("n", [1, 4, 8, 12])
    def test_t2_multipliers(self, n):
        # every orbit except the one at x = -1 has |multiplier| = 2^n
        pts = t2_periodic_points(n)
        expected = n * t2_multiplier_closed_form(pts.x)
        np.testing.assert_allclose(pts.log_abs_multiplier, expected, atol=1e-8)

    @pytest.mark.parametrize("n", range(1, 13))
    def test_enumerators_agree_at_a2(self, n):
        a = np.sort(t2_periodic_points(n).log_abs_multiplier)
        b = np.sort(quad_periodic_points(2.0, n).log_abs_multiplier)
        np.testing.assert_allclose(a, b, atol=1e-8)

    def test_quad_itineraries_distinct(self):
        pts = quad_periodic_points(2.3, 6)
        assert len({pts.itinerary(i) for i in range(len(pts))}) == 64
        orb = pts[5]
        assert orb.period == 6 and len(orb.itinerary) == 6

    def test_quad_rejects_small_a(self):
        with pytest.raises(ValueError):
            quad_periodic_points(1.9, 4)

    @pytest.mark.parametrize("n", [0, 25])
    def test_period_range(self, n):
        with pytest.raises(ValueError):
            t2_periodic_points(n)

    def test_sorted_by_code(self):
        s = quad_periodic_points(2.2, 5).sorted_by_code()
        assert np.all(np.diff(s.codes) > 0)


class TestOrbitSum:
    def test_t_zero_counts_points(self):
        assert orbit_sum_pressure(t2_periodic_points(10), 0.0) == pytest.approx(LOG2)

    def test_matches_partition_closed_form(self):
        n = 12
        np.testing.assert_allclose(orbit_sum_pressure(t2_periodic_points(n), GRID, n),
                                   t2_partition_closed_form(GRID, n), atol=1e-10)

    def test_orbit_list_input(self):
        pts = t2_periodic_points(6)
        assert orbit_sum_pressure(list(pts), 0.5) == pytest.approx(orbit_sum_pressure(pts, 0.5))

    @settings(max_examples=30, deadline=None)
    @given(st.floats(2.0, 2.5), st.floats(-3, 1.4), st.floats(0.01, 0.5))
    def test_convex_in_t(self, a, t, h):
        pts = quad_periodic_points(a, 8)
        v = orbit_sum_pressure(pts, np.array([t - h, t, t + h]))
        assert v[0] + v[2] - 2 * v[1] >= -1e-9

    @settings(max_examples=30, deadline=None)
    @given(st.floats(2.0, 2.5), st.floats(-3, 1.5))
    def test_decreasing_in_t(self, a, t):
        pts = quad_periodic_points(a, 8)
        v = orbit_sum_pressure(pts, np.array([t, t + 0.1]))
        assert v[1] < v[0]


class TestCurveAndKink:
    def test_curve_validation(self):
        with pytest.raises(ValueError):
            PressureCurve(np.array([0.0, 1.0]), np.zeros(3), "OrbitSum", 4)
        with pytest.raises(ValueError):
            PressureCurve(np.array([1.0, 0.0]), np.zeros(2), "OrbitSum", 4)
        with pytest.raises(ValueError):
            PressureCurve(np.array([0.0, 1.0]), np.zeros(2), "Guess", 4)

    def test_closed_form_curve_and_csv(self):
        c = t2_pressure_curve(GRID)
        assert c.method == "ClosedForm"
        lines = c.to_csv().splitlines()
        assert lines[0] == "t,value,method,depth,error_proxy"
        assert len(lines) == len(GRID) + 1

    def test_kink_on_closed_form(self):
        assert detect_kink(t2_pressure_curve(GRID)) == pytest.approx(-1.0, abs=0.03)

    def test_kink_on_orbit_sum(self):
        k = detect_kink(t2_pressure_curve(GRID, 16))
        assert -1.15 <= k <= -0.85

    def test_no_kink_hyperbolic(self):
        c = orbit_sum_curve(GRID, lambda m: quad_periodic_points(2.2, m), 14)
        assert detect_kink(c) is None

    def test_kink_guards(self):
        short = PressureCurve(np.array([0.0, 0.01]), np.zeros(2), "OrbitSum", 1)
        with pytest.raises(ValueError):
            detect_kink(short)
        coarse = PressureCurve(np.linspace(-3, 1, 5), np.zeros(5), "OrbitSum", 1)
        with pytest.raises(ValueError):
            detect_kink(coarse)

    def test_error_proxy_shrinks(self):
        c = t2_pressure_curve(GRID, 14)
        far = np.abs(GRID + 1) > 0.5
        assert np.max(c.error_proxy[far]) < 0.05
