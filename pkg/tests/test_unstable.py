import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from henonpressure import unstable as un
from henonpressure.graphs import fold_stable_graph, unstable_graph
from henonpressure.manifolds import rectangle_R
from henonpressure.mapcore import (
    MapParams,
    Variant,
    fixed_points,
    henon_apply,
    henon_jacobian,
    line_angle,
)

TANGENT_STRAND = {Variant.REVERSING: "LR", Variant.PRESERVING: "RL"}


@pytest.fixture(scope="module")
def records(p_rev, p_pres):
    out = {}
    for p in (p_rev, p_pres):
        R = rectangle_R(p)
        out[p.variant] = (un.find_critical_point(p, R.bottom, "bottom"), R.bottom)
    return out


class TestBackwardOrbits:
    def test_shadow_orbit_is_an_orbit(self, p_rev):
        pts, _ = un.random_horseshoe_orbit(p_rev, 40, np.random.default_rng(3))
        z = pts[-1]
        orb = un.shadow_backward_orbit(p_rev, z, 30)
        assert len(orb) == 31
        np.testing.assert_allclose(henon_apply(p_rev, orb[:-1]), orb[1:], atol=1e-12)
        assert orb[-1, 0] == z[0]
        assert abs(orb[-1, 1] - z[1]) < 1e-10

    def test_off_the_unstable_set(self, p_rev):
        with pytest.raises(un.BackwardOrbitError):
            un.shadow_backward_orbit(p_rev, [0.3, 0.05], 20)

    def test_horseshoe_orbit(self, p_rev):
        pts, itin = un.random_horseshoe_orbit(p_rev, 50, np.random.default_rng(0))
        np.testing.assert_allclose(henon_apply(p_rev, pts[:-1]), pts[1:], atol=1e-12)
        assert "".join("R" if x > 0 else "L" for x in pts[:, 0]) == itin


class TestUnstableDirection:
    def test_at_Q_is_eigenvector(self, p_star):
        _, Q = fixed_points(p_star)
        est = un.estimate_Eu(p_star, Q.location)
        assert line_angle(est.vector, Q.dir_unstable.vector) < 1e-8
        assert est.horizontal

    def test_Ju_and_lyapunov_at_Q(self, p_star):
        _, Q = fixed_points(p_star)
        assert un.Ju(p_star, Q.location, Q.dir_unstable) == pytest.approx(abs(Q.eig_unstable))
        lam = un.unstable_lyapunov(p_star, Q.location, 20, orbit=np.tile(Q.location, (21, 1)),
                                   eu=Q.dir_unstable)
        assert lam == pytest.approx(Q.lyapunov_unstable, rel=1e-12)

    def test_history_and_shadow_agree(self, p_rev):
        pts, _ = un.random_horseshoe_orbit(p_rev, 80, np.random.default_rng(7))
        a = un.estimate_Eu(p_rev, pts[-1], history=pts)
        b = un.estimate_Eu(p_rev, pts[-1])
        assert line_angle(a.vector, b.vector) < 1e-7

    def test_stable_direction_at_Q(self, p_star):
        _, Q = fixed_points(p_star)
        es, _, conv = un.stable_direction(p_star, Q.location)
        assert line_angle(es, Q.dir_stable.vector) < 1e-8
        assert es[1] > 0

    def test_one_dimensional(self):
        p = MapParams(2.0, 0.0, Variant.ONE_DIMENSIONAL)
        assert un.estimate_Eu(p, [0.3, 0.0]).dir.angle == 0.0
        assert un.Ju(p, [0.25, 0.0], None) == pytest.approx(1.0)

    def test_Ju_sanity_window(self, p_rev):
        with pytest.raises(ValueError):
            un.Ju(p_rev, [2.9, 0.0], [1.0, 0.0])


class TestBackwardContraction:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.integers(2, 8))
    def test_matches_forward_product(self, p_rev, seed, n):
        # ||Df^-n | E^u(z_end)|| = 1 / ||Df^n | E^u(z_end-n)||, with E^u at z_end-n
        # estimated on its own from the earlier history
        pts, _ = un.random_horseshoe_orbit(p_rev, 60, np.random.default_rng(seed))
        eu0 = un.estimate_Eu(p_rev, pts[0]).vector
        c = un.backward_log_contraction(p_rev, pts, eu0)
        start = len(pts) - 1 - n
        v = un.estimate_Eu(p_rev, pts[start], history=pts[:start + 1]).vector
        for z in pts[start:-1]:
            v = henon_jacobian(p_rev, z) @ v
        assert c[n - 1] == pytest.approx(-math.log(np.linalg.norm(v)), abs=1e-7)

    def test_periodic_direction_against_monodromy(self, p_rev):
        from henonpressure.induced import periodic_orbit_from_itinerary

        orb, _ = periodic_orbit_from_itinerary(p_rev, "RRLLLLR")
        M = np.eye(2)
        for z in orb:
            M = henon_jacobian(p_rev, z) @ M
        w, V = np.linalg.eig(M)
        i = int(np.argmax(np.abs(w)))
        assert line_angle(un.periodic_unstable_direction(p_rev, orb), V[:, i]) < 1e-9
        assert un.periodic_log_unstable_multiplier(p_rev, orb) == pytest.approx(
            math.log(abs(w[i])), rel=1e-10)


class TestBinding:
    def test_thresholds_by_hand(self):
        D = un.binding_thresholds([1.0, 2.0, 4.0], tau=0.01)
        np.testing.assert_allclose(D, [0.01 / 0.5, 0.01 / 1.5])

    @pytest.mark.parametrize("d,expected", [(0.02, 2), (0.01, 2), (0.005, 3), (1e-9, 3)])
    def test_bound_period_from_distance(self, d, expected):
        assert un.bound_period_from_distance([0.02, 0.0067], d) == expected

    def test_bound_period_too_far(self):
        with pytest.raises(ValueError):
            un.bound_period_from_distance([0.02, 0.01], 0.5)

    def test_fold_period_by_hand(self):
        w = [1.0, 4.0, 16.0, 64.0, 256.0]
        # r^beta = 0.1: need |w_{j+1}| >= 10, i.e. j >= 2
        b = 1e-3
        r = 0.1 ** (-math.log(b))
        assert un.fold_period_from(w, 4, r, b) == 2
        assert un.fold_period_from(w, 2, 1.0, b) == 1

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(1.0, 10.0), min_size=3, max_size=30), st.floats(1e-12, 1e-1))
    def test_thresholds_decrease(self, growth, tau):
        w = np.cumprod(growth)
        D = un.binding_thresholds(w, tau)
        assert np.all(np.diff(D) < 0)


class TestCriticalPoint:
    @pytest.mark.parametrize("variant", [Variant.REVERSING, Variant.PRESERVING])
    def test_matches_graph_tangency(self, records, variant):
        from scipy.optimize import minimize_scalar

        rec, _ = records[variant]
        p = rec.params
        it = TANGENT_STRAND[variant]
        r = minimize_scalar(lambda x: -float(unstable_graph(p, x, it)[0]
                                              - fold_stable_graph(p, x, "RL")[0]),
                            bounds=(-0.01, 0.01), method="bounded", options={"xatol": 1e-12})
        assert rec.zeta[0] == pytest.approx(r.x, abs=1e-5)
        assert rec.zeta[1] == pytest.approx(float(unstable_graph(p, r.x, it)[0]), abs=1e-9)

    def test_growth_table(self, records):
        for rec, _ in records.values():
            assert rec.growth_ok()
            assert rec.n_zeta >= 20
            assert len(rec.w) == rec.n_zeta + 1
            assert len(rec.Dk) == rec.n_zeta

    def test_json(self, records):
        rec, _ = records[Variant.REVERSING]
        d = json.loads(rec.to_json())
        assert d["n_zeta"] == rec.n_zeta and d["params"]["variant"] == "OrientationReversing"

    def test_one_dimensional(self):
        p = MapParams(2.0, 0.0, Variant.ONE_DIMENSIONAL)
        rec = un.find_critical_point(p, np.zeros((3, 2)), n_max=10)
        assert rec.zeta == (0.0, 0.0)

    def test_steep_curve_rejected(self, p_rev):
        x = np.linspace(-0.1, 0.1, 50)
        with pytest.raises(ValueError):
            un.find_critical_point(p_rev, np.column_stack([x, 0.5 * x]))

    def test_bound_period_monotone(self, records):
        rec, curve = records[Variant.REVERSING]
        rows = un.binding_samples(rec, curve, n=60, rng=np.random.default_rng(1))
        o = np.argsort(rows[:, 0])
        assert np.all(np.diff(rows[o, 1]) <= 0)
        ok = rows[:, 2] >= 1
        assert np.all(rows[ok, 2] < rows[ok, 1])

    def test_samples_csv(self):
        text = un.samples_to_csv(np.array([[1e-3, 5, 2], [1e-4, 7, -1]]))
        assert text.splitlines() == ["distance,bound_period,fold_period", "0.001,5,2", "0.0001,7,-1"]


class TestExpansion:
    def test_horizontal_vectors_expand(self, p_rev):
        pts, _ = un.random_horseshoe_orbit(p_rev, 60, np.random.default_rng(5))
        i = int(np.argmax(np.abs(pts[:, 0]) >= 0.05))
        j = i
        while j < len(pts) - 1 and abs(pts[j, 0]) >= 0.05:
            j += 1
        rep = un.expansion_outside_Idelta_check(p_rev, pts[i], j - i, [1.0, 0.0], orbit=pts[i:j + 1])
        assert rep.ok

    def test_guards(self, p_rev):
        with pytest.raises(ValueError):
            un.expansion_outside_Idelta_check(p_rev, [0.5, 0.0], 3, [1.0, 1.0])
        with pytest.raises(ValueError):
            un.expansion_outside_Idelta_check(p_rev, [0.0, 0.0], 3, [1.0, 0.0])
