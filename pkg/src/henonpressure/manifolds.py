"""Polyline approximations of stable and unstable manifolds of the saddles.

A branch of W^u(S) (resp. W^s(S)) is parametrised by a level coordinate
sigma >= 0: ``point(sigma) = g^n(S + side * s * v)`` with ``n = floor(sigma)``,
``s = s0 * |mu|^frac(sigma)``, where g is f (resp. f^-1), or its square when the
multiplier is negative, and mu the multiplier of g along v.  Successive levels
tile the branch, and every sample is an exact image of a point on the linear
seed segment, so refining in sigma never interpolates between samples.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar

from .mapcore import (
    MapParams,
    ParameterError,
    Saddle,
    Variant,
    fixed_points,
    henon_apply,
    henon_inverse,
)

SEED_LENGTH = 1e-6
DEFAULT_BOX = (-3.0, 3.0, -3.0, 3.0)


class BudgetExceeded(RuntimeError):
    """Raised when a growth would need more points than allowed."""


@dataclass
class ManifoldCurve:
    saddle: str
    kind: str
    points: np.ndarray
    arclength: np.ndarray
    max_seg_len: float
    max_turn_angle: float
    sigma: np.ndarray | None = None
    truncated: bool = False

    def __len__(self):
        return len(self.points)

    @property
    def length(self) -> float:
        return float(self.arclength[-1]) if len(self.arclength) else 0.0

    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.points, axis=0), axis=1)

    def turn_angles(self) -> np.ndarray:
        d = np.diff(self.points, axis=0)
        if len(d) < 2:
            return np.zeros(0)
        cross = d[:-1, 0] * d[1:, 1] - d[:-1, 1] * d[1:, 0]
        dot = np.einsum("ij,ij->i", d[:-1], d[1:])
        return np.abs(np.arctan2(cross, dot))

    def at_arclength(self, s) -> np.ndarray:
        """Point(s) at arclength s from the first point (linear interpolation)."""
        s = np.asarray(s, float)
        x = np.interp(s, self.arclength, self.points[:, 0])
        y = np.interp(s, self.arclength, self.points[:, 1])
        return np.stack([x, y], axis=-1)

    def sub_curve(self, s0: float, s1: float) -> "ManifoldCurve":
        """Portion with arclength in [s0, s1], endpoints interpolated."""
        inside = (self.arclength > s0) & (self.arclength < s1)
        pts = np.vstack([self.at_arclength(s0), self.points[inside], self.at_arclength(s1)])
        arc = np.concatenate([[s0], self.arclength[inside], [s1]])
        sig = None
        if self.sigma is not None:
            sig = np.interp(arc, self.arclength, self.sigma)
        return ManifoldCurve(self.saddle, self.kind, pts, arc, self.max_seg_len,
                             self.max_turn_angle, sig, self.truncated)

    def to_dict(self) -> dict:
        return {
            "saddle": self.saddle,
            "kind": self.kind,
            "max_seg_len": self.max_seg_len,
            "max_turn_angle": self.max_turn_angle,
            "truncated": self.truncated,
            "points": self.points.tolist(),
            "arclength": self.arclength.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _arclength(points: np.ndarray) -> np.ndarray:
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


# ---------------------------------------------------------------- branches

@dataclass
class Branch:
    """Exact parametrisation of one branch of a saddle's invariant manifold."""

    params: MapParams
    saddle: Saddle
    kind: str  # "unstable" or "stable"
    side: float = 1.0
    seed_length: float = SEED_LENGTH
    _mu: float = field(init=False)
    _power: int = field(init=False)
    _v: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.kind == "unstable":
            m = self.saddle.eig_unstable
            self._v = self.saddle.dir_unstable.vector
        elif self.kind == "stable":
            m = 1.0 / self.saddle.eig_stable
            self._v = self.saddle.dir_stable.vector
        else:
            raise ValueError(f"unknown manifold kind {self.kind!r}")
        self._power = 1 if m > 0 else 2
        self._mu = abs(m) ** self._power
        # orient v so that side=+1 points to increasing x (or y if vertical)
        if self._v[0] < 0 or (self._v[0] == 0 and self._v[1] < 0):
            self._v = -self._v

    @property
    def level_factor(self) -> float:
        return self._mu

    def _step(self, z):
        g = henon_apply if self.kind == "unstable" else henon_inverse
        for _ in range(self._power):
            z = g(self.params, z)
        return z

    def evaluate(self, sigma) -> np.ndarray:
        sigma = np.atleast_1d(np.asarray(sigma, float))
        n = np.floor(sigma).astype(int)
        frac = sigma - n
        s = self.seed_length / self._mu * self._mu ** frac
        z = self.saddle.location + self.side * s[:, None] * self._v
        for lev in range(int(n.max()) if len(n) else 0):
            sel = n > lev
            if not np.any(sel):
                break
            with np.errstate(over="ignore", invalid="ignore"):
                z[sel] = self._step(z[sel])
        return z


def _in_box(z, box):
    x0, x1, y0, y1 = box
    return (z[:, 0] >= x0) & (z[:, 0] <= x1) & (z[:, 1] >= y0) & (z[:, 1] <= y1)


def _segment_hits_box(za, zb, box):
    """Vectorised Liang-Barsky test: does segment [za, zb] meet the box?"""
    x0, x1, y0, y1 = box
    d = zb - za
    t0 = np.zeros(len(za))
    t1 = np.ones(len(za))
    ok = np.all(np.isfinite(za), axis=1) & np.all(np.isfinite(zb), axis=1)
    for p_, q_ in ((-d[:, 0], za[:, 0] - x0), (d[:, 0], x1 - za[:, 0]),
                   (-d[:, 1], za[:, 1] - y0), (d[:, 1], y1 - za[:, 1])):
        with np.errstate(divide="ignore", invalid="ignore"):
            r = q_ / p_
        par = p_ == 0
        ok &= ~(par & (q_ < 0))
        neg = (p_ < 0) & ~par
        pos = (p_ > 0) & ~par
        t0 = np.where(neg, np.maximum(t0, r), t0)
        t1 = np.where(pos, np.minimum(t1, r), t1)
    return ok & (t0 <= t1)


def adaptive_sample(F, s_lo, s_hi, max_seg_len, max_turn_angle, box=None,
                    n_init=64, budget=2_000_000, min_ds=1e-15):
    """Sample the curve sigma -> F(sigma) on [s_lo, s_hi] adaptively.

    Intervals whose chord is longer than ``max_seg_len`` or that border a turn
    sharper than ``max_turn_angle`` are bisected.  With a ``box``, only
    intervals whose chord meets the box are refined.  Returns (sigma, points).
    """
    s = np.linspace(s_lo, s_hi, n_init + 1)
    z = F(s)
    while True:
        d = np.diff(z, axis=0)
        seg = np.linalg.norm(d, axis=1)
        finite = np.isfinite(seg)
        bad = finite & (seg > max_seg_len)
        if len(d) >= 2:
            cross = d[:-1, 0] * d[1:, 1] - d[:-1, 1] * d[1:, 0]
            dot = np.einsum("ij,ij->i", d[:-1], d[1:])
            turn = np.abs(np.arctan2(cross, dot)) > max_turn_angle
            bad[:-1] |= turn & finite[:-1]
            bad[1:] |= turn & finite[1:]
        if box is not None:
            bad &= _segment_hits_box(z[:-1], z[1:], box)
        bad &= np.diff(s) > min_ds * max(1.0, abs(s_hi))
        idx = np.nonzero(bad)[0]
        if len(idx) == 0:
            return s, z
        if len(s) + len(idx) > budget:
            raise BudgetExceeded(f"adaptive sampling needs more than {budget} points")
        mid = 0.5 * (s[idx] + s[idx + 1])
        zm = F(mid)
        s = np.insert(s, idx + 1, mid)
        z = np.insert(z, idx + 1, zm, axis=0)


def _grow(branch: Branch, target_arclength, max_seg_len, max_turn_angle, box, budget):
    pts = [branch.saddle.location[None, :]]
    sig = [np.array([-np.inf])]
    total = 0
    truncated = False
    last = branch.saddle.location
    arc = 0.0
    level = 0
    while arc < target_arclength:
        s, z = adaptive_sample(branch.evaluate, level, level + 1, max_seg_len,
                               max_turn_angle, n_init=32, budget=budget)
        s, z = s[1:], z[1:]
        inside = _in_box(z, box) & np.all(np.isfinite(z), axis=1)
        stop = len(z) if np.all(inside) else int(np.argmin(inside))
        seg = np.linalg.norm(np.diff(np.vstack([last, z[:stop]]), axis=0), axis=1)
        cum = arc + np.cumsum(seg)
        if len(cum) and cum[-1] >= target_arclength:
            stop = int(np.searchsorted(cum, target_arclength)) + 1
        elif stop < len(z):
            truncated = True
        z, s, cum = z[:stop], s[:stop], cum[:stop]
        total += len(z)
        if total > budget:
            raise BudgetExceeded(f"manifold growth needs more than {budget} points")
        pts.append(z)
        sig.append(s)
        if len(z):
            last, arc = z[-1], float(cum[-1])
        level += 1
        if truncated or level > 200:
            break
    points = np.vstack(pts)
    return ManifoldCurve(branch.saddle.label, branch.kind, points, _arclength(points),
                         max_seg_len, max_turn_angle, np.concatenate(sig), truncated)


def grow_unstable(p: MapParams, saddle: Saddle, target_arclength: float, side: float = 1.0,
                  max_seg_len: float = 1e-2, max_turn_angle: float = 0.2,
                  box=DEFAULT_BOX, budget: int = 2_000_000) -> ManifoldCurve:
    """One branch of W^u(saddle) from the saddle to the given arclength.

    ``side=+1`` is the branch leaving towards increasing x.  Growth stops early
    (``truncated=True``) when the branch leaves ``box``.
    """
    _check_growth_args(target_arclength, max_seg_len, max_turn_angle)
    return _grow(Branch(p, saddle, "unstable", side), target_arclength, max_seg_len,
                 max_turn_angle, box, budget)


def grow_stable(p: MapParams, saddle: Saddle, target_arclength: float, side: float = 1.0,
                max_seg_len: float = 1e-2, max_turn_angle: float = 0.2,
                box=DEFAULT_BOX, budget: int = 2_000_000) -> ManifoldCurve:
    """One branch of W^s(saddle), grown with the inverse map."""
    _check_growth_args(target_arclength, max_seg_len, max_turn_angle)
    return _grow(Branch(p, saddle, "stable", side), target_arclength, max_seg_len,
                 max_turn_angle, box, budget)


def _check_growth_args(target, h, theta):
    if not (target > 0 and h > 0 and theta > 0):
        raise ValueError("target arclength, max_seg_len and max_turn_angle must be positive")


# ---------------------------------------------------------------- tangency

TANGENCY_WINDOW = (-0.3, 0.3, -0.1, 0.1)
GAP_TOLERANCE = 1e-9


def _as_list(curves):
    if isinstance(curves, ManifoldCurve):
        return [curves]
    return list(curves)


def _graph_pieces(curves, window):
    """Split curves into x-monotone pieces meeting the window.

    Each piece keeps one neighbour outside the window on either side so the
    interpolant covers the window edge.  Returns (xlo, xhi, interpolant).
    """
    x0, x1, y0, y1 = window
    out = []
    for c in _as_list(curves):
        z = c.points
        if len(z) < 2:
            continue
        inside = _in_box(z, window)
        if not np.any(inside):
            continue
        keep = inside.copy()
        keep[:-1] |= inside[1:]
        keep[1:] |= inside[:-1]
        for run in np.split(np.arange(len(z)), np.nonzero(np.diff(keep.astype(int)))[0] + 1):
            if not keep[run[0]] or len(run) < 2:
                continue
            seg = z[run]
            dx = np.sign(np.diff(seg[:, 0]))
            turns = np.nonzero(dx[1:] * dx[:-1] < 0)[0] + 1
            bounds = np.concatenate([[0], turns, [len(seg) - 1]])
            for i0, i1 in zip(bounds[:-1], bounds[1:]):
                out.append(_make_graph(seg[i0:i1 + 1]))
    return [g for g in out if g is not None]


def _make_graph(seg):
    order = np.argsort(seg[:, 0], kind="stable")
    xs, ys = seg[order, 0], seg[order, 1]
    uniq = np.concatenate([[True], np.diff(xs) > 0])
    xs, ys = xs[uniq], ys[uniq]
    if len(xs) < 2:
        return None
    if len(xs) >= 4:
        f = CubicSpline(xs, ys)
    else:
        f = lambda x, xs=xs, ys=ys: np.interp(x, xs, ys)  # noqa: E731
    return xs[0], xs[-1], f


def _envelope(pieces, x, lower: bool):
    fill = np.inf if lower else -np.inf
    env = np.full(np.shape(x), fill)
    for lo, hi, f in pieces:
        m = (x >= lo) & (x <= hi)
        if np.any(m):
            v = f(x[m])
            env[m] = np.minimum(env[m], v) if lower else np.maximum(env[m], v)
    return env


def signed_gap(cs, cu, window=TANGENCY_WINDOW, n_grid: int = 4001, stable_above: bool = True):
    """Signed vertical clearance between a stable graph and an unstable set.

    The stable curve(s) ``cs`` and unstable curve(s) ``cu`` are read as
    graphs over x inside ``window``.  The lowest stable graph is compared
    with the lower envelope of ``cu`` (the stable fold opens upwards and
    approaches the unstable set from above); ``stable_above=False`` mirrors
    this vertically.  The result is the
    minimal clearance when disjoint and minus the maximal penetration depth
    when the curves cross.  Returns (gap, (x, y)) where (x, y) is the point of
    the unstable envelope realising it (smallest x on ties).
    """
    ps = _graph_pieces(cs, window)
    pu = _graph_pieces(cu, window)
    if not ps or not pu:
        raise ValueError("window contains no points of one of the curves")
    lo = max(min(p[0] for p in ps), min(p[0] for p in pu), window[0])
    hi = min(max(p[1] for p in ps), max(p[1] for p in pu), window[1])
    if not lo < hi:
        raise ValueError("curves have no common abscissa range in the window")
    x = np.linspace(lo, hi, n_grid)
    above = stable_above

    def D(xv):
        xv = np.atleast_1d(xv)
        if above:
            return _envelope(ps, xv, True) - _envelope(pu, xv, True)
        return _envelope(pu, xv, False) - _envelope(ps, xv, False)

    d = D(x)
    d = np.where(np.isfinite(d), d, np.inf)
    if not np.any(np.isfinite(d)):
        raise ValueError("curves have no common abscissa range in the window")
    i = int(np.argmin(d))
    a_, b_ = x[max(i - 1, 0)], x[min(i + 1, len(x) - 1)]
    best_x, best = x[i], d[i]
    if b_ > a_:
        r = minimize_scalar(lambda t: float(D(t)[0]), bounds=(a_, b_), method="bounded",
                            options={"xatol": 1e-13})
        if r.fun < best:
            best_x, best = float(r.x), float(r.fun)
    env_y = _envelope(pu, np.array([best_x]), lower=above)[0]
    return float(best), (float(best_x), float(env_y))


@dataclass
class TangencyReport:
    parameter: float
    point: tuple
    gap: float
    manifolds: tuple
    bracket: tuple = ()
    variant: str = Variant.REVERSING.value
    b: float = float("nan")
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "point": list(self.point),
            "gap": self.gap,
            "manifolds": [list(m) for m in self.manifolds],
            "bracket": list(self.bracket),
            "variant": self.variant,
            "b": self.b,
            "extra": dict(self.extra),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# ---------------------------------------------------------------- stable folds

def local_stable_sigma(p: MapParams, saddle: Saddle, length: float) -> float:
    """Level coordinate at which a stable branch of ``saddle`` has length ~``length``.

    Inside one level the branch is close to straight, so arclength is
    proportional to the seed offset.
    """
    br = Branch(p, saddle, "stable")
    mu = br.level_factor
    return 1.0 + math.log(max(length, SEED_LENGTH) / SEED_LENGTH) / math.log(mu)


def _locate(F, lo, hi, box, max_seg_len):
    """Sub-intervals of [lo, hi] whose image under F meets ``box``."""
    s, z = adaptive_sample(F, lo, hi, max_seg_len, math.pi, box=box, n_init=128)
    hit = _in_box(z, box)
    hit[:-1] |= _segment_hits_box(z[:-1], z[1:], box)
    out = []
    for run in np.split(np.arange(len(s)), np.nonzero(np.diff(hit.astype(int)))[0] + 1):
        if hit[run[0]]:
            out.append((s[max(run[0] - 1, 0)], s[min(run[-1] + 1, len(s) - 1)]))
    return out


def stable_fold_curves(p: MapParams, window=TANGENCY_WINDOW, max_seg_len: float = 2e-3,
                       max_turn_angle: float = 0.2, local_length: float | None = None):
    """Pieces of f^-2(W^s_loc(Q)) inside ``window`` as ManifoldCurves.

    W^s_loc(Q) has length sqrt(b) on each side of Q.  Its first preimage
    crosses the x-axis near x = 1 and the second preimage folds into the
    parabola-like curve near the origin.
    """
    _, Q = fixed_points(p)
    length = math.sqrt(p.b) if local_length is None else local_length
    smax = local_stable_sigma(p, Q, length)
    sb = p.sign * p.b
    x0, x1, y0, y1 = window
    yb = sb * np.array([x0, x1])
    near_one = (0.0, 2.0, -1.0, 1.0)
    tight = (0.5, 1.5, min(yb) - 1e-3 * p.b, max(yb) + 1e-3 * p.b)
    curves = []
    for side in (1.0, -1.0):
        br = Branch(p, Q, "stable", side)

        def F1(sig, br=br):
            return henon_inverse(p, br.evaluate(sig))

        def F2(sig, br=br):
            with np.errstate(over="ignore", invalid="ignore"):
                return henon_inverse(p, henon_inverse(p, br.evaluate(sig)))

        with np.errstate(over="ignore", invalid="ignore"):
            coarse = _locate(F1, 0.0, smax, near_one, 0.05)
            fine = [iv for lo, hi in coarse for iv in _locate(F1, lo, hi, tight, 0.05 * p.b)]
        for lo, hi in fine:
            s, z = adaptive_sample(F2, lo, hi, max_seg_len, max_turn_angle, box=window, n_init=64)
            if not np.any(_in_box(z, window)):
                continue
            arc = _arclength(z)
            curves.append(ManifoldCurve("Q", "stable", z, arc, max_seg_len, max_turn_angle, s))
    if not curves:
        raise ValueError("second preimage of W^s_loc(Q) misses the window")
    return curves


def tangency_unstable_curves(p: MapParams, arclength: float = 4.5, max_seg_len: float = 2e-3,
                             max_turn_angle: float = 0.2):
    """Unstable curves paired with W^s(Q) at the first tangency.

    Orientation preserving: W^u(Q).  Orientation reversing: W^u(P).
    """
    P, Q = fixed_points(p)
    if p.variant is Variant.PRESERVING:
        return [grow_unstable(p, Q, arclength, 1.0, max_seg_len, max_turn_angle)]
    return [grow_unstable(p, P, arclength, side, max_seg_len, max_turn_angle)
            for side in (1.0, -1.0)]


def pairing(p: MapParams):
    if p.variant is Variant.PRESERVING:
        return (("Q", "stable"), ("Q", "unstable"))
    return (("Q", "stable"), ("P", "unstable"))


# ---------------------------------------------------------------- drivers

A_BRACKET = (1.9, 2.3)


@dataclass
class GeometryConfig:
    window: tuple = TANGENCY_WINDOW
    bracket: tuple = A_BRACKET
    scan_step: float = 0.01
    max_seg_len: float = 2e-3
    max_turn_angle: float = 0.2
    unstable_arclength: float = 4.5
    xtol: float = 1e-12


def _gap_at(p: MapParams, cfg: GeometryConfig, unstable=None):
    cs = stable_fold_curves(p, cfg.window, cfg.max_seg_len, cfg.max_turn_angle)
    cu = unstable(p) if unstable else tangency_unstable_curves(
        p, cfg.unstable_arclength, cfg.max_seg_len, cfg.max_turn_angle)
    return signed_gap(cs, cu, cfg.window)


def _bisect(p: MapParams, cfg: GeometryConfig, gapfun, hi=None):
    """Root of a -> gap(a) on the configured bracket (gap decreases in a)."""
    lo_a, hi_a = cfg.bracket
    if hi is not None:
        hi_a = min(hi_a, hi)
    grid = np.arange(lo_a, hi_a + 0.5 * cfg.scan_step, cfg.scan_step)
    grid[-1] = min(grid[-1], hi_a)
    vals = [gapfun(a) for a in grid]
    for (a0, g0), (a1, g1) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        if g0 > 0 >= g1:
            root = brentq(gapfun, a0, a1, xtol=cfg.xtol, rtol=4 * np.finfo(float).eps)
            return root, (float(a0), float(a1)), list(zip(grid.tolist(), vals))
    raise ValueError(f"no sign change of the tangency gap on [{lo_a}, {hi_a}]")


def find_a_star(b: float, variant=Variant.REVERSING, cfg: GeometryConfig | None = None
                ) -> TangencyReport:
    """First-bifurcation parameter: quadratic tangency at the fold near the origin.

    The clearance between f^-2(W^s_loc(Q)) and the lower envelope of the
    paired unstable manifold is positive for a < a* and negative (transverse
    crossing) for a > a*.
    """
    cfg = cfg or GeometryConfig()
    base = MapParams(2.0, b, variant)
    base.with_a(cfg.bracket[0]).check_window()

    def g(a):
        return _gap_at(base.with_a(a), cfg)[0]

    root, br, _ = _bisect(base, cfg, g)
    gap, where = _gap_at(base.with_a(root), cfg)
    return TangencyReport(root, where, gap, pairing(base), br, Variant(variant).value, b)


def psi_curve(p: MapParams, length: float = 4.5, max_seg_len: float = 2e-3,
              max_turn_angle: float = 0.2) -> ManifoldCurve:
    """Arclength parametrisation psi of W^u(Q) on the branch that meets the dynamics.

    psi(0) = Q and psi(s), s > 0, follows the branch leaving Q to the right; the
    other branch escapes to infinity and carries negative arclength.
    """
    _, Q = fixed_points(p)
    return grow_unstable(p, Q, length, 1.0, max_seg_len, max_turn_angle)


def ell_u_center(variant) -> float:
    return 1.0 if Variant(variant) is Variant.PRESERVING else 3.0


def ell_u(p: MapParams, half_width: float = 0.01, max_seg_len: float = 2e-3,
          max_turn_angle: float = 0.2) -> ManifoldCurve:
    """The short piece psi(c - w, c + w) of W^u(Q) crossing the y-axis."""
    c = ell_u_center(p.variant)
    psi = psi_curve(p, c + 2 * half_width, max_seg_len, max_turn_angle)
    return psi.sub_curve(c - half_width, c + half_width)


def find_a_star_star(b: float, variant=Variant.REVERSING, cfg: GeometryConfig | None = None,
                     a_star: float | None = None) -> TangencyReport:
    """Threshold above which f^-2(W^s_loc(Q)) and ell^u bound a compact domain."""
    cfg = cfg or GeometryConfig()
    base = MapParams(2.0, b, variant)
    if a_star is None:
        a_star = find_a_star(b, variant, cfg).parameter

    widths = {}

    def unstable(q):
        seg = min(cfg.max_seg_len, 5e-4)
        cs = stable_fold_curves(q, cfg.window, cfg.max_seg_len, cfg.max_turn_angle)
        curve, w = ell_u_covering(q, cs, 0.01, seg, cfg.max_turn_angle)
        widths[q.a] = w
        return [curve]

    def g(a):
        return _gap_at(base.with_a(a), cfg, unstable)[0]

    root, br, _ = _bisect(base, cfg, g, hi=a_star)
    if not root < a_star:
        raise ValueError(f"a** = {root} is not below a* = {a_star}")
    gap, where = _gap_at(base.with_a(root), cfg, unstable)
    rep = TangencyReport(root, where, gap, (("Q", "stable"), ("Q", "unstable")), br,
                         Variant(variant).value, b)
    rep.extra["ell_u_half_width"] = widths[root]
    return rep


def ell_u_covering(p: MapParams, cs, half_width: float = 0.01, max_seg_len: float = 5e-4,
                   max_turn_angle: float = 0.2, margin: float = 0.005, max_half_width: float = 0.32):
    """ell^u widened (doubling the half width) until it spans the fold of ``cs``.

    Returns (curve, half_width).  The nominal half width is kept whenever it
    already covers the lowest point of the stable fold.
    """
    lowest = min((c.points[np.argmin(c.points[:, 1]), 0] for c in _as_list(cs)),
                 key=lambda x: abs(x))
    w = half_width
    while True:
        cu = ell_u(p, w, max_seg_len, max_turn_angle)
        xs = cu.points[:, 0]
        if (xs.min() <= lowest - margin and xs.max() >= lowest + margin) or w >= max_half_width:
            return cu, w
        w *= 2.0


# ---------------------------------------------------------------- rectangle R

@dataclass
class RectangleR:
    """The rectangle bounded by two unstable and two stable curves near |x| <= 1."""

    alpha_minus: ManifoldCurve
    alpha_plus: ManifoldCurve
    top: ManifoldCurve
    bottom: ManifoldCurve
    corners: dict
    invariance_error: float

    def sides(self):
        return [self.alpha_minus, self.alpha_plus, self.top, self.bottom]

    def bounding_box(self):
        z = np.vstack([c.points for c in self.sides()])
        return float(z[:, 0].min()), float(z[:, 0].max()), float(z[:, 1].min()), float(z[:, 1].max())


def _polyline_crossings(za, zb):
    """All crossings of two polylines: list of (point, s_a, s_b) with arclengths."""
    from shapely.geometry import LineString, MultiPoint, Point

    la, lb = LineString(za), LineString(zb)
    inter = la.intersection(lb)
    if inter.is_empty:
        return []
    pts = [inter] if isinstance(inter, Point) else list(getattr(inter, "geoms", []))
    if isinstance(inter, MultiPoint):
        pts = list(inter.geoms)
    out = []
    for q in pts:
        if isinstance(q, Point):
            out.append((np.array([q.x, q.y]), la.project(q), lb.project(q)))
    return sorted(out, key=lambda t: t[1])


def _curve_between(c: ManifoldCurve, s0: float, s1: float) -> ManifoldCurve:
    lo, hi = sorted((s0, s1))
    return c.sub_curve(lo, hi)


def _stable_preimage_near_one(p: MapParams, max_seg_len: float, max_turn_angle: float):
    """The piece of f^-1(W^s_loc(Q)) crossing the x-axis near x = 1."""
    _, Q = fixed_points(p)
    smax = local_stable_sigma(p, Q, math.sqrt(p.b))
    box = (0.8, 1.2, -0.2, 0.2)
    pieces = []
    for side in (1.0, -1.0):
        br = Branch(p, Q, "stable", side)

        def F1(sig, br=br):
            return henon_inverse(p, br.evaluate(sig))

        with np.errstate(over="ignore", invalid="ignore"):
            for lo, hi in _locate(F1, 0.0, smax, box, 0.05):
                s, z = adaptive_sample(F1, lo, hi, max_seg_len, max_turn_angle, box=box)
                m = _in_box(z, box)
                pieces.append((s[m], z[m], side))
    if not pieces:
        raise ValueError("f^-1(W^s_loc(Q)) does not cross the x-axis near x = 1")
    pieces.sort(key=lambda t: t[1][0, 1])
    s = np.concatenate([t[0] for t in pieces])
    z = np.vstack([t[1] for t in pieces])
    order = np.argsort(z[:, 1])
    z = z[order]
    return ManifoldCurve("Q", "stable", z, _arclength(z), max_seg_len, max_turn_angle, s[order])


def local_stable_Q(p: MapParams, max_seg_len: float = 1e-3, max_turn_angle: float = 0.2):
    """W^s_loc(Q): arclength sqrt(b) on each side of Q, ordered by increasing y."""
    _, Q = fixed_points(p)
    L = math.sqrt(p.b)
    parts = []
    for side in (-1.0, 1.0):
        c = grow_stable(p, Q, 1.5 * L, side, max_seg_len, max_turn_angle)
        parts.append(c.sub_curve(0.0, L))
    z = np.vstack([parts[0].points[::-1], parts[1].points[1:]])
    if z[0, 1] > z[-1, 1]:
        z = z[::-1]
    return ManifoldCurve("Q", "stable", z, _arclength(z), max_seg_len, max_turn_angle)


def rectangle_R(p: MapParams, max_seg_len: float = 1e-3, max_turn_angle: float = 0.2,
                tol: float = 1e-6) -> RectangleR:
    """Sides of R: stable sides alpha0^- (through Q) and alpha0^+ = f^-1-preimage
    piece near x = 1; unstable sides in W^u(Q) (preserving) or W^u(P) (reversing).
    """
    P, Q = fixed_points(p)
    am = local_stable_Q(p, max_seg_len, max_turn_angle)
    ap = _stable_preimage_near_one(p, max_seg_len, max_turn_angle)
    if p.variant is Variant.PRESERVING:
        hair = grow_unstable(p, Q, 4.5, 1.0, max_seg_len, max_turn_angle)
    else:
        left = grow_unstable(p, P, 2.0, -1.0, max_seg_len, max_turn_angle).points
        # keep the local strand only: stop at the first fold of the left branch
        turn = np.nonzero(np.diff(left[:, 0]) > 0)[0]
        if len(turn):
            left = left[:turn[0] + 1]
        right = grow_unstable(p, P, 4.0, 1.0, max_seg_len, max_turn_angle)
        z = np.vstack([left[::-1], right.points[1:]])
        hair = ManifoldCurve("P", "unstable", z, _arclength(z), max_seg_len, max_turn_angle)
    hz = hair.points
    if p.variant is Variant.PRESERVING:
        # the hairpin starts at Q on alpha0^-: that corner is Q itself
        cm = [(Q.location, 0.0, float(np.interp(Q.location[1], am.points[:, 1], am.arclength)))]
        cm += [c for c in _polyline_crossings(hz, am.points) if c[1] > 10 * max_seg_len]
    else:
        cm = _polyline_crossings(hz, am.points)
    cp = _polyline_crossings(hz, ap.points)
    if len(cm) < 2 or len(cp) < 2:
        raise ValueError(f"ambiguous rectangle: {len(cm)} crossings with alpha0^-, "
                         f"{len(cp)} with alpha0^+")
    # top side: first crossing with alpha0^- then first with alpha0^+ along the hairpin;
    # bottom side: second crossing with alpha0^+ then the next crossing with alpha0^-
    t0, t1 = cm[0], cp[0]
    b0 = cp[1]
    later = [c for c in cm if c[1] > b0[1]]
    if not later or not (t0[1] < t1[1] < b0[1]):
        raise ValueError("ambiguous rectangle: crossings out of order along the unstable curve")
    b1 = later[0]
    top = _curve_between(hair, t0[1], t1[1])
    bottom = _curve_between(hair, b0[1], b1[1])
    amc = _curve_between(am, t0[2], b1[2])
    apc = _curve_between(ap, t1[2], b0[2])
    # f(alpha0^+) must lie on alpha0^- (extended local stable manifold)
    from shapely.geometry import LineString, Point

    ext = LineString(am.points)
    img = henon_apply(p, apc.points)
    err = max(ext.distance(Point(*q)) for q in img)
    if err > tol:
        raise ValueError(f"f(alpha0^+) leaves alpha0^- by {err:.2e}")
    corners = {"top_minus": t0[0].tolist(), "top_plus": t1[0].tolist(),
               "bottom_plus": b0[0].tolist(), "bottom_minus": b1[0].tolist()}
    top.saddle = bottom.saddle = hair.saddle
    return RectangleR(amc, apc, top, bottom, corners, float(err))


# ---------------------------------------------------------------- export

_COLORS = {"stable": "#1f77b4", "unstable": "#d62728"}


def curves_to_svg(curves, view=(-1.3, 1.3, -0.1, 0.1), width: int = 800, height: int = 400) -> str:
    """SVG document with one polyline per curve, scaled to the ``view`` box."""
    x0, x1, y0, y1 = view
    sx, sy = width / (x1 - x0), height / (y1 - y0)
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">']
    for c in _as_list(curves):
        z = c.points[np.all(np.isfinite(c.points), axis=1)]
        pts = " ".join(f"{(x - x0) * sx:.3f},{(y1 - y) * sy:.3f}" for x, y in z)
        color = _COLORS.get(c.kind, "#000000")
        lines.append(f'  <polyline fill="none" stroke="{color}" stroke-width="1" '
                     f'data-saddle="{c.saddle}" data-kind="{c.kind}" points="{pts}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
