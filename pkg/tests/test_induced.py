import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from henonpressure import induced as ind
from henonpressure.mapcore import MapParams, Variant, fixed_points, henon_apply
from henonpressure.thermo1d import PressureCurve

from conftest import A_STAR_REV, B

P_REV = MapParams(A_STAR_REV, B, Variant.REVERSING)
# frozen from the construction (k0 from find_k0, C_hat from fit_C_hat with seed 0)
K0 = {Variant.REVERSING: 7, Variant.PRESERVING: 6}
C_HAT_REV = 0.0028398278181330896


@pytest.fixture(scope="module")
def pair(p_star):
    return ind.theta_pair(p_star)


@pytest.fixture(scope="module")
def rects_rev():
    return {k: ind.omega(P_REV, k) for k in range(7, 21)}


class TestLetters:
    def test_itineraries(self):
        pres = MapParams(2.0, 1e-3, Variant.PRESERVING)
        assert ind.letter_itinerary(6, P_REV) == "RRLLLR"
        assert ind.letter_itinerary(6, pres) == "RRLLLL"
        assert ind.letter_itinerary(6, P_REV, side="-") == "LRLLLR"
        assert all(len(ind.letter_itinerary(k, P_REV)) == k for k in range(4, 30))

    def test_too_short(self):
        with pytest.raises(ValueError):
            ind.letter_itinerary(3, P_REV)

    def test_word(self):
        w = ind.SymbolWord(7, 60, [7, 9, 12])
        assert w.r == 28
        np.testing.assert_array_equal(w.letter_starts(), [0, 7, 16])
        assert len(w.itinerary(P_REV)) == 28

    @pytest.mark.parametrize("args", [(9, 7, [8]), (7, 60, []), (7, 60, [5])])
    def test_word_validation(self, args):
        with pytest.raises(ValueError):
            ind.SymbolWord(*args)


class TestTheta:
    def test_checks_pass(self, pair):
        c = pair.checks
        assert c["S_in_I_delta"] and c["I_delta_in_Theta"]
        assert c["theta_prime_sides_C2b"] and c["theta_prime_sides_cross_S"]
        assert c["backward_contraction_ok"]

    def test_theta_prime_inside_theta(self, pair):
        for z in pair.theta_prime.corners():
            assert pair.theta.contains(z, interior=False, tol=1e-12)

    def test_critical_region_symmetric_and_small(self, pair):
        lo, hi = pair.critical_region.x_extent()
        assert -0.05 < lo < 0 < hi < 0.05
        assert abs(lo + hi) < 0.005

    def test_stable_sides_on_Ws_P(self, pair, p_star):
        P, _ = fixed_points(p_star)
        from henonpressure.graphs import stable_orbit

        for it in pair.theta.stable:
            orb = stable_orbit(p_star, 0.0, it)
            assert np.linalg.norm(orb[-1] - P.location) < 1e-12


class TestReturnRectangles:
    def test_k0(self, pair, p_star):
        assert ind.find_k0(p_star, pair) == K0[p_star.variant]

    def test_below_k0_not_in_I_delta(self, pair, p_star):
        with pytest.raises(ValueError):
            ind.return_rectangle(p_star, K0[p_star.variant] - 1, pair)

    def test_first_return_time(self, rects_rev):
        pair = ind.theta_pair(P_REV)
        for k, rr in rects_rev.items():
            orb = rr.center_orbit
            assert pair.theta_prime.contains(orb[0], interior=False, tol=ind.LANDING_TOL)
            assert pair.theta_prime.contains(orb[k], interior=False, tol=ind.LANDING_TOL)
            np.testing.assert_allclose(henon_apply(P_REV, orb[:k]), orb[1:k + 1], atol=1e-12)

    def test_width_decays_like_quarter(self, rects_rev):
        ks = np.array(sorted(rects_rev))
        w = np.log([rects_rev[k].width for k in ks])
        slope = np.polyfit(ks, w, 1)[0]
        assert slope == pytest.approx(-math.log(4.0), abs=0.1)

    def test_nested_disjoint(self, rects_rev):
        # consecutive rectangles are disjoint strips at any common height
        for k in list(rects_rev)[:-1]:
            a, b = rects_rev[k].rect, rects_rev[k + 1].rect
            y = float(rects_rev[k].corners[:, 1].mean())
            (al, ar), (bl, br) = a.stable_x(y), b.stable_x(y)
            assert ar[0] < bl[0] or br[0] < al[0]

    def test_stable_side_on_Ws_P(self, rects_rev):
        for rr in list(rects_rev.values())[:4]:
            assert ind.stable_side_on_Ws_P(P_REV, rr) < 1e-12

    def test_cap(self):
        with pytest.raises(ind.InfeasibleError):
            ind.build_return_rectangles(P_REV, 7, 61)


class TestCoding:
    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.integers(7, 60), min_size=1, max_size=4), st.integers(0, 2 ** 32 - 1))
    def test_resolve_from_perturbed_seed(self, letters, seed):
        orb = ind.code_periodic_point(P_REV, ind.SymbolWord(7, 60, letters))
        assert orb.residual < 1e-12
        z = ind.resolve_from_seed(P_REV, orb, np.random.default_rng(seed))
        assert np.max(np.abs(z - orb.points)) < 1e-8

    def test_lands_in_rectangles(self, rects_rev):
        word = ind.SymbolWord(7, 60, [7, 12, 20, 9])
        orb = ind.code_periodic_point(P_REV, word, rects_rev)
        assert len(orb.points) == word.r

    def test_letter_sum_is_multiplier(self):
        orb = ind.code_periodic_point(P_REV, ind.SymbolWord(7, 60, [8, 15, 11]))
        assert orb.letter_log_expansion(P_REV).sum() == pytest.approx(
            orb.log_unstable_multiplier(P_REV), rel=1e-12)

    def test_lyapunov_below_Q(self):
        _, Q = fixed_points(P_REV)
        for letters in ([7], [60], [7, 60, 30]):
            orb = ind.code_periodic_point(P_REV, ind.SymbolWord(7, 60, letters))
            assert orb.lyapunov(P_REV) < Q.lyapunov_unstable - 1e-3

    def test_periodic_from_itinerary(self):
        z, res = ind.periodic_orbit_from_itinerary(P_REV, "RRLLLR")
        assert res < 1e-13
        np.testing.assert_allclose(henon_apply(P_REV, z), np.roll(z, -1, axis=0), atol=1e-12)


class TestExpansionConstant:
    def test_C_hat_frozen(self):
        C, mins = ind.fit_C_hat(P_REV, range(7, 25), rng=np.random.default_rng(0))
        assert C == pytest.approx(C_HAT_REV, rel=1e-6)
        assert 0 < C < 1
        # per-letter deficit settles to a constant once k is large
        assert np.ptp(mins[6:]) < 1e-3

    @settings(max_examples=20, deadline=None)
    @given(st.lists(st.integers(7, 24), min_size=2, max_size=3))
    def test_bound_holds_on_samples(self, letters):
        _, Q = fixed_points(P_REV)
        orb = ind.code_periodic_point(P_REV, ind.SymbolWord(7, 24, letters))
        excess = orb.letter_log_expansion(P_REV) - Q.lyapunov_unstable * np.array(letters)
        assert np.all(excess >= math.log(C_HAT_REV))


class TestShiftMeasure:
    def test_mme_letters(self):
        assert ind.mme_letters(16) == (13, 16)
        assert ind.mme_letters(256) == (241, 256)
        with pytest.raises(ValueError):
            ind.mme_letters(20)

    def test_summary_entropy(self):
        s = ind.shift_mme_summary(P_REV, 16, n_words=20)
        assert s.entropy == pytest.approx(16 * math.log(4.0) / (16 * 14.5))
        assert s.method == "exact" and s.provenance == "ShiftMME"
        assert s.free_energy(-2.0) == pytest.approx(s.entropy + 2 * s.lambda_u)

    def test_letter_sum_route(self):
        words = []
        s = ind.shift_mme_summary(P_REV, 256, n_words=10, per_word=words)
        assert s.method == "letter-sum"
        assert len(words) == 10
        _, Q = fixed_points(P_REV)
        assert s.lambda_u < Q.lyapunov_unstable

    def test_caps(self):
        with pytest.raises(ind.InfeasibleError):
            ind.shift_mme_summary(P_REV, 16, n_words=10_001)
        with pytest.raises(ind.InfeasibleError):
            ind.shift_mme_summary(P_REV, 4900)


class TestLowerBound:
    def test_choose_q(self):
        # 2 exp(4 * 0.1 * log(1/C)) = 21.0 -> 25
        assert ind.choose_q(-0.1, C_HAT_REV) == 25
        assert ind.choose_q(-0.01, C_HAT_REV) == 16
        with pytest.raises(ind.InfeasibleError):
            ind.choose_q(-1.0, C_HAT_REV)
        with pytest.raises(ValueError):
            ind.choose_q(1.0, C_HAT_REV)

    @given(st.floats(-0.5, -1e-3), st.floats(1e-4, 0.9))
    def test_choose_q_is_square_above_need(self, t, C):
        try:
            q = ind.choose_q(t, C)
        except ind.InfeasibleError:
            return
        assert ind.is_perfect_square(q) and q >= 16
        assert q >= 2 * math.exp(4 * t * math.log(C)) - 1e-6

    def test_analytic_floor(self):
        v = ind.analytic_floor(-1.0, 16, 0.5, 1.4)
        assert v == pytest.approx(math.log(4) / 16 + 2 * math.log(0.5) / 16 + 1.4)

    def test_lower_bound_fields(self):
        s = ind.MeasureSummary(0.1, 1.3, "ShiftMME", q=16)
        lb = ind.pressure_lower_bound(P_REV, -1.0, 16, C_HAT_REV, summary=s)
        assert lb.value == pytest.approx(1.4)
        assert lb.gap == pytest.approx(1.4 - lb.target)
        assert lb.required_margin == pytest.approx(0.5 * math.log(4) / 16)
        assert set(lb.to_dict()) >= {"lower_bound", "gap", "removes"}
        with pytest.raises(ValueError):
            ind.pressure_lower_bound(P_REV, 0.5, 16, C_HAT_REV, summary=s)


class TestFreezing:
    T = np.round(np.arange(-12.0, 2.0 + 1e-9, 0.5), 10)

    def test_crossing(self):
        # excess over -2t is 0.5 t + 0.15, positive for t > -0.3
        c = PressureCurve(self.T, -1.5 * self.T + 0.15, "OrbitSum", 1)
        est = ind.freezing_points_estimate([c], 1.0, 2.0)
        assert est.t_c_flag == "crossing"
        assert est.t_c == pytest.approx(-0.3, abs=1e-9)

    def test_no_freezing(self):
        c = PressureCurve(self.T, 0.1 - 2 * self.T, "OrbitSum", 1)
        est = ind.freezing_points_estimate([c], 1.0, 2.0)
        assert est.t_c == -math.inf and est.t_c_flag == "no-freezing"

    def test_grid_must_reach_minus_ten(self):
        t = np.linspace(-5, 1, 13)
        with pytest.raises(ValueError):
            ind.freezing_points_estimate([PressureCurve(t, -t, "OrbitSum", 1)], 1.0, 2.0)
