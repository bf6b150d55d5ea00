"""Unstable directions, unstable Jacobians, critical points and binding periods.

Backward orbits of the planar maps cannot be followed by iterating f^-1 in
floating point: f^-1 expands the stable direction by about 4/b per step.  The
backward history of a point on (or within rounding of) the unstable set is
instead recovered as a shadow orbit: the x-coordinates of the preimages solve
x_{-j} = s_j sqrt((1 + s b x_{-j-1} - x_{-j+1}) / a), a contraction once the
branch signs s_j are fixed.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .mapcore import (
    MapParams,
    TangentDir,
    Variant,
    fixed_points,
    henon_apply,
    henon_inverse,
    henon_jacobian,
    line_angle,
)

LAMBDA0 = 0.99 * math.log(2.0)
DELTA = 0.05
TAU = 0.01
U_HALF_WIDTH = 0.2
EU_TOLERANCE = 1e-8
WINDOW = 3.0


class BackwardOrbitError(RuntimeError):
    """No bounded backward orbit through the point could be found."""


class ConvergenceError(RuntimeError):
    pass


class CriticalPointAnomaly(RuntimeError):
    """More than one critical point on a curve."""


@dataclass(frozen=True)
class UnstableDirEstimate:
    at: tuple
    dir: TangentDir
    horizon: int
    convergence: float
    horizontal: bool

    @property
    def vector(self) -> np.ndarray:
        return self.dir.vector


# ---------------------------------------------------------------- backward orbits

def _in_window(z) -> bool:
    z = np.asarray(z)
    return bool(np.all(np.isfinite(z)) and np.all(np.abs(z) <= WINDOW))


def _float_signs(p: MapParams, z, m: int) -> list[float]:
    """Branch signs of preimages read off the (unstable) float backward iteration."""
    signs = []
    w = np.asarray(z, float)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(m):
            w = henon_inverse(p, w)
            if not _in_window(w):
                break
            signs.append(1.0 if w[0] >= 0 else -1.0)
    return signs


def shadow_backward_orbit(p: MapParams, z, m: int, tail: str = "L", depth: int = 30,
                          tol: float = 1e-6, signs=None) -> np.ndarray:
    """Backward orbit (z_{-m}, ..., z_{-1}, z_0) through the unstable set near z.

    The returned z_0 has the abscissa of z; its ordinate is fixed by the
    backward history and must agree with z to ``tol`` (otherwise z is not
    close to the unstable set and BackwardOrbitError is raised).  Branch
    signs default to those of the float backward iteration while it stays
    bounded, then to ``tail`` (L: towards Q, R: towards P).
    """
    z = np.asarray(z, float)
    if signs is None:
        signs = _float_signs(p, z, m + depth)
    tail_sign = -1.0 if tail == "L" else 1.0
    D = m + depth
    w = np.array(list(signs[:D]) + [tail_sign] * max(0, D - len(signs)))
    P, Q = fixed_points(p)
    x_tail = (Q if tail == "L" else P).location[0]
    sb = p.sign * p.b
    xs = np.full(D + 2, x_tail)
    xs[0] = z[0]
    # initial guess from the float iteration where available
    for _ in range(400):
        prev = xs.copy()
        for j in range(1, D + 1):
            arg = (1.0 + sb * xs[j + 1] - xs[j - 1]) / p.a
            if arg < 0:
                raise BackwardOrbitError(f"no preimage on branch {j} (argument {arg:.3e})")
            xs[j] = w[j - 1] * math.sqrt(arg)
        if np.max(np.abs(xs - prev)) <= 1e-16:
            break
    y0 = sb * xs[1]
    if abs(y0 - z[1]) > tol:
        raise BackwardOrbitError(
            f"point is {abs(y0 - z[1]):.2e} away from the unstable set along the vertical")
    pts = np.stack([xs[: m + 1], sb * xs[1: m + 2]], axis=-1)
    return pts[::-1].copy()


# ---------------------------------------------------------------- E^u and J^u

def _push(p: MapParams, orbit: np.ndarray, v0) -> np.ndarray:
    """Push v0 along Df over the orbit points (all but the last)."""
    v = np.asarray(v0, float)
    v = v / np.linalg.norm(v)
    for q in orbit[:-1]:
        v = henon_jacobian(p, q) @ v
        v = v / np.linalg.norm(v)
    return v


def estimate_Eu(p: MapParams, z, m: int = 30, history: np.ndarray | None = None,
                tol: float = EU_TOLERANCE, max_horizon: int = 200) -> UnstableDirEstimate:
    """E^u at z from pushing a generic direction along the backward history.

    ``history`` (optional) is an explicit backward orbit ending at z, oldest
    point first, e.g. a periodic orbit unrolled backwards.  The estimate is
    accepted once horizons m and m - 5 agree to ``tol`` radians.
    """
    z = np.asarray(z, float)
    if p.variant is Variant.ONE_DIMENSIONAL:
        return UnstableDirEstimate(tuple(z), TangentDir(0.0), 0, 0.0, True)
    generic = np.array([1.0, 0.37])
    while True:
        if history is not None:
            if len(history) < m + 1:
                raise BackwardOrbitError(f"history has {len(history)} points, need {m + 1}")
            orb = np.asarray(history, float)[-(m + 1):]
        else:
            orb = shadow_backward_orbit(p, z, m)
        if not all(_in_window(q) for q in orb):
            raise BackwardOrbitError("backward orbit leaves the window [-3, 3]^2")
        v_m = _push(p, orb, generic)
        v_m5 = _push(p, orb[5:], generic)
        conv = line_angle(v_m, v_m5)
        if conv <= tol:
            d = TangentDir.from_vector(v_m)
            return UnstableDirEstimate(tuple(z), d, m, conv, d.slope <= math.sqrt(p.b))
        if m >= max_horizon:
            raise ConvergenceError(f"E^u estimate did not converge (angle {conv:.2e})")
        m = min(max_horizon, m + 10)


def Ju(p: MapParams, z, direction) -> float:
    """||Df(z) u|| for the unit vector u along ``direction``."""
    z = np.asarray(z, float)
    if p.variant is Variant.ONE_DIMENSIONAL:
        return abs(2.0 * p.a * z[0])
    u = direction.vector if isinstance(direction, (TangentDir, UnstableDirEstimate)) else (
        np.asarray(direction, float) / np.linalg.norm(direction))
    val = float(np.linalg.norm(henon_jacobian(p, z) @ u))
    if not (p.b / 10 <= val <= 10.0):
        raise ValueError(f"J^u = {val:.3e} outside the sanity window [b/10, 10]")
    return val


def forward_orbit(p: MapParams, z, n: int) -> np.ndarray:
    """z, f(z), ..., f^{n-1}(z); raises if the orbit leaves the window."""
    out = np.empty((n, 2))
    w = np.asarray(z, float)
    for i in range(n):
        if not _in_window(w):
            raise BackwardOrbitError(f"forward orbit leaves the window at step {i}")
        out[i] = w
        w = henon_apply(p, w) if p.variant is not Variant.ONE_DIMENSIONAL else np.array(
            [1.0 - p.a * w[0] ** 2, 0.0])
    return out


def log_unstable_growth(p: MapParams, orbit: np.ndarray, eu0) -> np.ndarray:
    """log J^u at every point of ``orbit``, starting from E^u = eu0 at orbit[0]."""
    v = np.asarray(eu0, float)
    v = v / np.linalg.norm(v)
    out = np.empty(len(orbit))
    for i, q in enumerate(orbit):
        w = henon_jacobian(p, q) @ v
        nw = np.linalg.norm(w)
        out[i] = math.log(nw)
        v = w / nw
    return out


def unstable_lyapunov(p: MapParams, z, n: int, orbit: np.ndarray | None = None,
                      eu: UnstableDirEstimate | None = None) -> float:
    """(1/n) sum of log J^u along z, f(z), ..., f^{n-1}(z).

    A precomputed ``orbit`` (e.g. a coded periodic orbit, repeated as needed)
    avoids following a saddle-type orbit in floating point.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if p.variant is Variant.ONE_DIMENSIONAL:
        x = np.asarray(z, float).reshape(-1)[0]
        total = 0.0
        for _ in range(n):
            total += math.log(abs(2.0 * p.a * x))
            x = 1.0 - p.a * x * x
        return total / n
    orb = forward_orbit(p, z, n) if orbit is None else np.asarray(orbit, float)[:n]
    if len(orb) < n:
        raise ValueError("orbit shorter than n")
    if eu is None:
        eu = estimate_Eu(p, orb[0])
    return float(np.sum(log_unstable_growth(p, orb, eu.vector))) / n


def periodic_unstable_direction(p: MapParams, orbit: np.ndarray, sweeps: int = 3) -> np.ndarray:
    """E^u at orbit[0] of a periodic orbit by power iteration around it."""
    v = np.array([1.0, 0.37])
    for _ in range(sweeps):
        for q in orbit:
            v = henon_jacobian(p, q) @ v
            v /= np.linalg.norm(v)
    return v


def periodic_log_unstable_multiplier(p: MapParams, orbit: np.ndarray) -> float:
    """log ||Df^r | E^u|| for a periodic orbit of period r = len(orbit)."""
    v = periodic_unstable_direction(p, orbit)
    return float(np.sum(log_unstable_growth(p, orbit, v)))


# ---------------------------------------------------------------- stable directions

def stable_direction(p: MapParams, z, N: int = 40, tol: float = 1e-8) -> tuple[np.ndarray, int, float]:
    """Most contracted direction of Df^N at z, second component positive.

    The forward orbit is followed while it stays in the window (at most N
    steps).  Returns (e_s, horizon used, angle between horizons N' and N'-5).
    """
    orb = []
    w = np.asarray(z, float)
    for _ in range(N):
        if not _in_window(w):
            break
        orb.append(w)
        w = henon_apply(p, w)
    if not orb:
        raise BackwardOrbitError("point outside the window")

    def dominant_row(k):
        u = np.array([0.37, 1.0])
        for q in reversed(orb[:k]):
            u = henon_jacobian(p, q).T @ u
            u /= np.linalg.norm(u)
        return u

    def es(k):
        r = dominant_row(k)
        e = np.array([-r[1], r[0]])
        return e if e[1] > 0 else -e

    e = es(len(orb))
    conv = line_angle(e, es(max(1, len(orb) - 5))) if len(orb) > 5 else math.inf
    return e, len(orb), conv


def backward_log_contraction(p: MapParams, history: np.ndarray, eu0) -> np.ndarray:
    """log ||Df^-n | E^u|| at the last point of ``history`` for n = 1..len-1.

    ``history`` is a forward-ordered orbit segment and ``eu0`` the unstable
    direction at its first point.  E^u is transported forwards (the stable
    direction of the computation) and the backward norms are read off as
    minus the trailing sums of log J^u.
    """
    orb = np.asarray(history, float)
    g = log_unstable_growth(p, orb[:-1], eu0)
    return -np.cumsum(g[::-1])


def random_horseshoe_orbit(p: MapParams, length: int, rng: np.random.Generator,
                           tail: str = "L") -> tuple[np.ndarray, str]:
    """An orbit segment of the horseshoe with a random itinerary.

    The segment shadows the random letters exactly (it is built by inverse
    branch sweeps, not by forward iteration), so it can be as long as needed.
    Returns (points, itinerary) with points[i + 1] = f(points[i]).
    """
    letters = rng.choice([-1.0, 1.0], size=length)
    P, Q = fixed_points(p)
    sb = p.sign * p.b
    # the forward orbit x_0..x_{L-1} is the backward orbit of its end point;
    # pin the far end on W^u of the tail saddle by extra tail letters
    pad = 40
    w = np.concatenate([letters[::-1], np.full(pad, -1.0 if tail == "L" else 1.0)])
    x_tail = (Q if tail == "L" else P).location[0]
    D = len(w)
    xs = np.full(D + 2, x_tail)
    xs[0] = 0.5  # abscissa of the image of the last point; any value in the strip
    for _ in range(400):
        prev = xs.copy()
        for j in range(1, D + 1):
            arg = max((1.0 + sb * xs[j + 1] - xs[j - 1]) / p.a, 0.0)
            xs[j] = w[j - 1] * math.sqrt(arg)
        if np.max(np.abs(xs - prev)) <= 1e-16:
            break
    pts = np.stack([xs[1:length + 1], sb * xs[2:length + 2]], axis=-1)[::-1].copy()
    itin = "".join("R" if c > 0 else "L" for c in letters)
    return pts, itin


# ---------------------------------------------------------------- critical points

N_MAX = 60


def in_U_minus(p: MapParams, z, half_width: float = U_HALF_WIDTH) -> bool:
    """Box of the given half-width around the vertical side through Q."""
    _, Q = fixed_points(p)
    return bool(abs(z[0] - Q.location[0]) < half_width and abs(z[1]) < half_width)


def binding_thresholds(w, tau: float = TAU) -> np.ndarray:
    """D_k = tau / sum_{i<=k} |w_i|^2 / |w_{i+1}| for k = 1..len(w)-1."""
    w = np.asarray(w, float)
    return tau / np.cumsum(w[:-1] ** 2 / w[1:])


def bound_period_from_distance(Dk, d: float) -> int:
    """The p with D_p < d <= D_{p-1}; n + 1 when d <= D_n (n = len(Dk))."""
    Dk = np.asarray(Dk, float)
    if d > Dk[0]:
        raise ValueError(f"distance {d:.3e} exceeds D_1 = {Dk[0]:.3e}")
    # number of k with D_k >= d, i.e. the largest p - 1 with d <= D_{p-1}
    return int(np.count_nonzero(Dk >= d)) + 1


@dataclass(frozen=True)
class CriticalPointRecord:
    zeta: tuple
    host_curve: str
    w: tuple                    # |w_i(zeta)| for i = 1..n_zeta + 1
    n_zeta: int
    Dk: tuple                   # D_k(zeta) for k = 1..n_zeta
    tau: float
    delta: float
    params: MapParams = field(default=None, compare=False)
    leaf_point: tuple = ()      # f(zeta)
    leaf_dir: tuple = ()        # stable direction at f(zeta)

    def growth_ok(self) -> bool:
        """3^(i-1) < |w_i| < 5^(i-1); the i = 1 term (|w_1| = 1) is an equality."""
        w = np.asarray(self.w)
        i = np.arange(len(w))
        ok = (w > 3.0 ** i) & (w < 5.0 ** i)
        ok[0] = w[0] == 1.0
        return bool(np.all(ok))

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "params"}
        if self.params is not None:
            d["params"] = {"a": self.params.a, "b": self.params.b,
                           "variant": self.params.variant.value}
        d["zeta"] = list(self.zeta)
        d["w"] = list(self.w)
        d["Dk"] = list(self.Dk)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _curve_graph(points: np.ndarray, delta: float) -> CubicSpline:
    pts = np.asarray(points, float)
    pts = pts[np.abs(pts[:, 0]) < delta]
    if len(pts) < 4:
        raise ValueError("curve has fewer than 4 points inside I(delta)")
    order = np.argsort(pts[:, 0])
    pts = pts[order]
    keep = np.concatenate([[True], np.diff(pts[:, 0]) > 0])
    pts = pts[keep]
    if np.ptp(pts[:, 1]) > 0.5 * np.ptp(pts[:, 0]) + 1e-12:
        raise ValueError("curve inside I(delta) is not a graph of small slope")
    return CubicSpline(pts[:, 0], pts[:, 1])


def _tangency_function(p: MapParams, g: CubicSpline, N: int):
    def F(x):
        z = np.array([x, float(g(x))])
        t = np.array([1.0, float(g(x, 1))])
        u = henon_jacobian(p, z) @ t
        es, _, _ = stable_direction(p, henon_apply(p, z), N)
        return float(u[0] * es[1] - u[1] * es[0]) / np.linalg.norm(u)
    return F


def find_critical_point(p: MapParams, curve, host_curve: str = "curve",
                        delta: float = DELTA, tau: float = TAU, N: int = 40,
                        n_grid: int = 201, n_max: int = N_MAX,
                        u_half_width: float = U_HALF_WIDTH) -> CriticalPointRecord | None:
    """Point of the curve where f(curve) is tangent to the stable direction.

    ``curve`` is an (N, 2) array or an object with ``points``; only the part
    inside I(delta) = {|x| < delta} is used and must satisfy the slope and
    curvature bound sqrt(b).  Returns None when the angle function has no
    zero there; raises CriticalPointAnomaly for two or more zeros.
    """
    pts = np.asarray(getattr(curve, "points", curve), float)
    if p.variant is Variant.ONE_DIMENSIONAL:
        x = 0.0
        return _record(p, np.array([x, 0.0]), host_curve, tau, delta, n_max, u_half_width,
                       leaf_dir=np.array([0.0, 1.0]))
    g = _curve_graph(pts, delta)
    xs = np.linspace(g.x[0], g.x[-1], n_grid)
    sb = math.sqrt(p.b)
    if np.max(np.abs(g(xs, 1))) > sb or np.max(np.abs(g(xs, 2))) > sb:
        raise ValueError("curve violates the slope/curvature bound sqrt(b)")
    F = _tangency_function(p, g, N)
    vals = np.array([F(x) for x in xs])
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
    # a zero landing exactly on a grid node is counted once
    idx = [i for k, i in enumerate(idx) if k == 0 or i != idx[k - 1] + 1 or vals[i] != 0]
    if not idx:
        return None
    if len(idx) > 1:
        raise CriticalPointAnomaly(f"{len(idx)} zeros of the tangency function on {host_curve}")
    i = idx[0]
    x = xs[i] if vals[i] == 0 else brentq(F, xs[i], xs[i + 1], xtol=1e-15, rtol=1e-15)
    zeta = np.array([x, float(g(x))])
    es, _, _ = stable_direction(p, henon_apply(p, zeta), N)
    return _record(p, zeta, host_curve, tau, delta, n_max, u_half_width, leaf_dir=es)


def _record(p, zeta, host_curve, tau, delta, n_max, u_half_width, leaf_dir):
    if p.variant is Variant.ONE_DIMENSIONAL:
        step = lambda z: np.array([1.0 - p.a * z[0] ** 2, 0.0])
        jac = lambda z: np.array([[-2.0 * p.a * z[0], 0.0], [0.0, 0.0]])
    else:
        step = lambda z: henon_apply(p, z)
        jac = lambda z: henon_jacobian(p, z)
    orbit = [zeta, step(zeta)]
    # n(zeta): last i >= 2 of the first consecutive stay of f^i(zeta) in U^-
    n = 1
    z = orbit[1]
    while n < n_max:
        z2 = step(z)
        if not in_U_minus(p, z2, u_half_width):
            break
        orbit.append(z2)
        z = z2
        n += 1
    if n < 2:
        raise ValueError("f^2(zeta) is not in U^-; zeta is not a binding critical point")
    # w_1 = (1, 0); w_{i+1} = Df(f^i(zeta)) w_i
    v = np.array([1.0, 0.0])
    w = [1.0]
    for i in range(1, n + 1):
        v = jac(orbit[i] if i < len(orbit) else step(orbit[-1])) @ v
        w.append(float(np.linalg.norm(v)))
    Dk = binding_thresholds(w, tau)
    return CriticalPointRecord(tuple(map(float, zeta)), host_curve, tuple(w), n, tuple(map(float, Dk)),
                               tau, delta, p, tuple(map(float, orbit[1])),
                               tuple(map(float, leaf_dir)))


def leaf_distance(rec: CriticalPointRecord, z) -> float:
    """|x_0 - x^s(y_0)| for (x_0, y_0) = f(z).

    The stable leaf through f(zeta) is replaced by its tangent line; over the
    heights involved (of order b |zeta - z|) the difference is negligible.
    """
    p = rec.params
    z = np.asarray(z, float)
    if p.variant is Variant.ONE_DIMENSIONAL:
        return abs((1.0 - p.a * z[0] ** 2) - rec.leaf_point[0])
    fz = henon_apply(p, z)
    c = np.asarray(rec.leaf_point)
    e = np.asarray(rec.leaf_dir)
    if abs(fz[1] - c[1]) > U_HALF_WIDTH:
        raise ValueError("f(z) outside the domain of the leaf graph")
    xs = c[0] + (fz[1] - c[1]) * e[0] / e[1]
    return float(abs(fz[0] - xs))


def bound_period(rec: CriticalPointRecord, z) -> int:
    """Bound period p of z relative to the critical point of ``rec``."""
    z = np.asarray(z, float)
    if abs(z[0]) >= rec.delta:
        raise ValueError("z outside I(delta)")
    if np.allclose(z, rec.zeta, rtol=0, atol=0):
        raise ValueError("z coincides with the critical point")
    return bound_period_from_distance(rec.Dk, leaf_distance(rec, z))


def fold_period_from(w, p_bound: int, r: float, b: float) -> int:
    """Smallest i in 1..p-1 with r^beta |w_{j+1}| >= 1 for all i <= j <= p-1.

    beta = -1/log b.  When no i qualifies the cap p - 1 is returned.
    """
    if p_bound < 2:
        raise ValueError("bound period must be >= 2")
    if p_bound > len(w) - 1:
        raise ValueError("bound period exceeds n(zeta)")
    beta = -1.0 / math.log(b)
    rb = r ** beta
    ok = [rb * w[j] >= 1.0 for j in range(1, p_bound)]   # w[j] = |w_{j+1}|, j = 1..p-1
    q = p_bound - 1
    for i in range(p_bound - 1, 0, -1):
        if ok[i - 1]:
            q = i
        else:
            break
    return q


def fold_period(rec: CriticalPointRecord, z, b: float | None = None) -> int:
    """Fold period q of z; also checks the lower bound -beta log|zeta - z| / log 5."""
    b = rec.params.b if b is None else b
    pb = bound_period(rec, z)
    if pb > rec.n_zeta:
        raise ValueError(f"bound period {pb} exceeds n(zeta) = {rec.n_zeta}")
    r = float(np.linalg.norm(np.asarray(z, float) - np.asarray(rec.zeta)))
    q = fold_period_from(rec.w, pb, r, b)
    beta = -1.0 / math.log(b)
    if rec.growth_ok() and (r ** beta) * rec.w[q] >= 1.0 and q < -beta * math.log(r) / math.log(5.0):
        raise AssertionError(f"fold period {q} below its lower bound")
    return q


def binding_samples(rec: CriticalPointRecord, curve, n: int = 200, r_range=(1e-6, 1e-2),
                    rng: np.random.Generator | None = None) -> np.ndarray:
    """Rows (|zeta - z|, p, q) for points z of the host curve near zeta.

    Distances are log-uniform in ``r_range``, on alternating sides of zeta.
    q is -1 where the bound period exceeds n(zeta).
    """
    rng = np.random.default_rng(0) if rng is None else rng
    g = _curve_graph(np.asarray(getattr(curve, "points", curve), float), rec.delta)
    x0 = rec.zeta[0]
    rows = []
    radii = np.exp(rng.uniform(math.log(r_range[0]), math.log(r_range[1]), n))
    for k, r in enumerate(radii):
        x = x0 + (r if k % 2 == 0 else -r) / math.hypot(1.0, float(g(x0, 1)))
        z = np.array([x, float(g(x))])
        dist = float(np.linalg.norm(z - np.asarray(rec.zeta)))
        pb = bound_period(rec, z)
        q = fold_period(rec, z) if pb <= rec.n_zeta else -1
        rows.append((dist, pb, q))
    return np.array(rows)


def samples_to_csv(rows) -> str:
    lines = ["distance,bound_period,fold_period"]
    lines += [f"{r:.10g},{int(pb)},{int(q)}" for r, pb, q in rows]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ExpansionReport:
    n: int
    ratio: float
    expansion_bound: float
    expansion_ok: bool
    reentry: bool
    reentry_ok: bool
    slope_ok: bool

    @property
    def ok(self) -> bool:
        return self.expansion_ok and self.reentry_ok and self.slope_ok


def expansion_outside_Idelta_check(p: MapParams, z, n: int, v, delta: float = DELTA,
                                   orbit: np.ndarray | None = None,
                                   lambda0: float = LAMBDA0) -> ExpansionReport:
    """Check |Df^n v| >= delta e^(lambda0 n) |v| and slope(Df^n v) <= sqrt(b).

    The orbit z, ..., f^(n-1)(z) must avoid I(delta) and v must have slope at
    most sqrt(b).  If f^n(z) lies in I(delta) the factor delta is dropped.
    ``orbit`` may supply z, f(z), ..., f^n(z) computed more accurately.
    """
    sb = math.sqrt(p.b)
    v = np.asarray(v, float)
    if abs(v[1]) > sb * abs(v[0]):
        raise ValueError("initial vector is steeper than sqrt(b)")
    orb = forward_orbit(p, z, n + 1) if orbit is None else np.asarray(orbit, float)[:n + 1]
    if len(orb) < n + 1:
        raise ValueError("orbit shorter than n + 1")
    if np.any(np.abs(orb[:n, 0]) < delta):
        raise ValueError("orbit enters I(delta) before step n")
    u = v.copy()
    for q in orb[:n]:
        u = henon_jacobian(p, q) @ u
    ratio = float(np.linalg.norm(u) / np.linalg.norm(v))
    bound = delta * math.exp(lambda0 * n)
    reentry = bool(abs(orb[n, 0]) < delta)
    return ExpansionReport(
        n, ratio, bound, ratio >= bound, reentry,
        (not reentry) or ratio >= math.exp(lambda0 * n),
        abs(u[1]) <= sb * abs(u[0]),
    )
