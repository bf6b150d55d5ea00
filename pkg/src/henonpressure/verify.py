"""Internal consistency checks run by ``henonpressure verify``.

Every check returns a dict with keys name, ok, value and bound.  Constants
from :mod:`henonpressure.unstable` are looked up at call time so that a
modified rate is picked up by the checks.
"""
from __future__ import annotations

import math

import numpy as np

from . import induced
from . import thermo1d as t1
from . import unstable
from .mapcore import MapParams, fixed_points


def _result(name, ok, value, bound):
    return {"name": name, "ok": bool(ok), "value": float(value), "bound": float(bound)}


def check_t2_partition() -> dict:
    t = np.linspace(-3.0, 1.5, 46)
    n = 12
    err = np.max(np.abs(t1.orbit_sum_pressure(t1.t2_periodic_points(n), t, n)
                        - t1.t2_partition_closed_form(t, n)))
    return _result("t2_partition_closed_form", err <= 1e-10, err, 1e-10)


def check_enumerators_agree() -> dict:
    n = 10
    a = np.sort(t1.t2_periodic_points(n).log_abs_multiplier)
    b = np.sort(t1.quad_periodic_points(2.0, n).log_abs_multiplier)
    err = float(np.max(np.abs(a - b)))
    return _result("enumerators_agree", err <= 1e-8, err, 1e-8)


def check_kink() -> dict:
    t = np.round(np.arange(-3.0, 1.5 + 1e-9, 0.02), 10)
    k = t1.detect_kink(t1.t2_pressure_curve(t, 16))
    val = math.inf if k is None else abs(k + 1.0)
    return _result("t2_kink_location", val <= 0.15, min(val, 1e300), 0.15)


def check_Eu_at_Q(p: MapParams) -> dict:
    _, Q = fixed_points(p)
    est = unstable.estimate_Eu(p, Q.location)
    ang = unstable.line_angle(est.vector, Q.dir_unstable.vector)
    return _result("Eu_at_Q", ang <= 1e-8, ang, 1e-8)


def check_expansion(p: MapParams, rng, n_orbits: int = 30, delta: float = unstable.DELTA) -> dict:
    lam0 = unstable.LAMBDA0
    worst = math.inf
    ok = True
    for _ in range(n_orbits):
        pts, _ = unstable.random_horseshoe_orbit(p, 80, rng)
        out = np.abs(pts[:, 0]) >= delta
        i = 0
        while i < len(pts) - 1:
            if not out[i]:
                i += 1
                continue
            j = i
            while j < len(pts) - 1 and out[j]:
                j += 1
            rep = unstable.expansion_outside_Idelta_check(
                p, pts[i], j - i, np.array([1.0, 0.0]), delta, orbit=pts[i:j + 1], lambda0=lam0)
            ok &= rep.ok
            worst = min(worst, math.log(rep.ratio) / (j - i) - lam0)
            i = j + 1
    return _result("expansion_outside_I_delta", ok, worst, 0.0)


def check_backward_contraction(p: MapParams, rng, n_words: int = 20) -> dict:
    """log ||Df^-n|E^u|| <= -lambda0 n backwards from every excursion start."""
    lam0 = unstable.LAMBDA0
    pair = induced.theta_pair(p)
    k0 = induced.find_k0(p, pair)
    worst = -math.inf
    for _ in range(n_words):
        word = induced.SymbolWord(k0, 60, rng.integers(k0, 30, size=3))
        orb = induced.code_periodic_point(p, word)
        g = unstable.log_unstable_growth(p, orb.points, orb.unstable_direction(p))
        r = len(g)
        n = np.arange(1, r + 1)
        for s in word.letter_starts():
            back = -np.cumsum(g[(s - 1 - np.arange(r)) % r])
            worst = max(worst, float(np.max(back + lam0 * n)))
    return _result("backward_contraction", worst <= 0.0, worst, 0.0)


def check_critical_point(p: MapParams) -> dict:
    from .manifolds import rectangle_R

    rec = unstable.find_critical_point(p, rectangle_R(p).bottom, "bottom")
    if rec is None:
        return _result("critical_point_growth", False, 0, 1)
    return _result("critical_point_growth", rec.growth_ok(), rec.n_zeta, 1)


def check_coding(p: MapParams, rng, n_words: int = 10) -> dict:
    k0 = induced.find_k0(p, induced.theta_pair(p))
    worst = 0.0
    for _ in range(n_words):
        word = induced.SymbolWord(k0, 60, rng.integers(k0, 61, size=2))
        orb = induced.code_periodic_point(p, word)
        z = induced.resolve_from_seed(p, orb, rng)
        worst = max(worst, orb.residual, float(np.max(np.abs(z - orb.points))))
    return _result("coding_resolve", worst <= 1e-10, worst, 1e-10)


def run_checks(cfg) -> list[dict]:
    from .manifolds import find_a_star

    b = cfg.b[0]
    a = cfg.a if cfg.a is not None else find_a_star(b, cfg.variant).parameter
    p = MapParams(a, b, cfg.variant)
    rng = np.random.default_rng(cfg.seed)
    return [
        check_t2_partition(),
        check_enumerators_agree(),
        check_kink(),
        check_Eu_at_Q(p),
        check_expansion(p, rng),
        check_backward_contraction(p, rng),
        check_critical_point(p),
        check_coding(p, rng),
    ]
