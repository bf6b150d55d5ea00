"""Induced full shift near the first tangency and the pressure lower bound.

Points of the central rectangle Theta' that come back to Theta' after an
excursion along the saddle Q are grouped by return time k into rectangles
omega_k.  A periodic sequence of return times (a word) picks out a periodic
orbit of f, and uniform Bernoulli measures on the letters give measures of
f whose free energy bounds the pressure from below.

All curves are evaluated as graphs through inverse-branch sweeps, so every
rectangle is described by the itineraries of its sides:

* a letter k starts with R R (the point near the critical region and its
  image near the tip x ~ 1) followed by a run of L near Q; the orbit falls
  back to the upper strand bundle of R directly from x ~ -1/sqrt(2) when
  det Df > 0, and through x ~ -0.38, +0.71 when det Df < 0 (one L fewer and a
  final R);
* stable sides are W^s(P) curves, unstable sides are strands of W^u.
"""
from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.linalg import spsolve

from .graphs import fold_stable_graph, stable_graph, stable_orbit, unstable_graph
from .mapcore import MapParams, Variant, fixed_points, henon_apply, henon_jacobian
from .unstable import (
    LAMBDA0,
    backward_log_contraction,
    estimate_Eu,
    log_unstable_growth,
    periodic_unstable_direction,
    shadow_backward_orbit,
)

ALPHA1_PLUS = "RRLR"       # W^s(P) curve near x = +0.26
ALPHA1_MINUS = "LRLR"      # W^s(P) curve near x = -0.26
CENTER_TAIL = "RRLLR"      # lands near x = 0.13 inside Theta
K_CAP = 60
Q_CAP = 4096
WORD_CAP = 10_000


class CodingError(RuntimeError):
    """A computed orbit does not follow the prescribed rectangles."""


class InfeasibleError(ValueError):
    """The requested computation exceeds the desk-scale caps."""


def letter_itinerary(k: int, p: MapParams, side: str = "+") -> str:
    """L/R itinerary of one excursion with return time k."""
    if k < 4:
        raise ValueError(f"return time {k} too short for an excursion (need k >= 4)")
    head = ("R" if side == "+" else "L") + "R"
    if p.variant is Variant.REVERSING:
        return head + "L" * (k - 3) + "R"
    return head + "L" * (k - 2)


def r_strands(p: MapParams) -> tuple[str, str]:
    """Backward itineraries of the (bottom, top) unstable sides of R."""
    return ("LR", "R") if p.variant is Variant.REVERSING else ("RL", "L")


def theta_prime_strands(p: MapParams) -> tuple[str, str]:
    """(lower, upper) unstable sides of Theta': the upper strand bundle of R.

    The bundle is bounded by the top side of R and the strand whose second
    preimage sits at Q; for det Df < 0 the latter is the return pass of W^u(Q).
    """
    return ("RL", "R") if p.variant is Variant.REVERSING else ("LR", "L")


# ---------------------------------------------------------------- rectangles

@dataclass(frozen=True)
class GraphRectangle:
    """Region between two stable graphs x = X(y) and two unstable graphs y = Y(x)."""

    params: MapParams
    stable: tuple           # two forward itineraries
    unstable: tuple         # two backward itineraries (lower, upper)

    def stable_x(self, y):
        xs = [stable_graph(self.params, y, it) for it in self.stable]
        return np.minimum(*xs), np.maximum(*xs)

    def unstable_y(self, x):
        ys = [unstable_graph(self.params, x, it) for it in self.unstable]
        return np.minimum(*ys), np.maximum(*ys)

    def contains(self, z, interior: bool = True, tol: float = 0.0) -> bool:
        x, y = float(z[0]), float(z[1])
        xl, xr = (float(v[0]) for v in self.stable_x(y))
        yl, yh = (float(v[0]) for v in self.unstable_y(x))
        if not all(map(math.isfinite, (xl, xr, yl, yh))):
            return False
        if interior:
            return xl + tol < x < xr - tol and yl + tol < y < yh - tol
        return xl - tol <= x <= xr + tol and yl - tol <= y <= yh + tol

    def corner(self, s_itin: str, u_itin: str) -> np.ndarray:
        """Intersection of one stable and one unstable side."""
        p = self.params
        x0 = float(stable_graph(p, 0.0, s_itin)[0])
        y0 = float(unstable_graph(p, x0, u_itin)[0])

        def g(y):
            return y - float(unstable_graph(p, float(stable_graph(p, y, s_itin)[0]), u_itin)[0])

        h = 1e-3 * p.b + abs(y0) * 1e-3
        lo, hi = y0 - h, y0 + h
        for _ in range(40):
            if g(lo) * g(hi) <= 0:  # NaN compares False and keeps widening
                break
            lo, hi = y0 - 2 * (y0 - lo), y0 + 2 * (hi - y0)
        y = brentq(g, lo, hi, xtol=1e-18, rtol=1e-15)
        return np.array([float(stable_graph(p, y, s_itin)[0]), y])

    def corners(self) -> np.ndarray:
        """(lower-left, lower-right, upper-right, upper-left)."""
        lo, hi = self.unstable
        out = [self.corner(s, u) for u in (lo, hi) for s in self.stable]
        c = np.array(out)
        ll, lr = sorted(c[:2], key=lambda z: z[0])
        ul, ur = sorted(c[2:], key=lambda z: z[0])
        return np.array([ll, lr, ur, ul])

    def width(self, y: float | None = None) -> float:
        if y is None:
            c = self.corners()
            y = 0.5 * (c[:, 1].min() + c[:, 1].max())
        xl, xr = self.stable_x(y)
        return float(xr[0] - xl[0])


@dataclass(frozen=True)
class CriticalRegion:
    """Part of R above the fold of f^-2 of the local stable manifold of Q."""

    params: MapParams

    def fold(self, x):
        return fold_stable_graph(self.params, x, "RL")

    def contains(self, z, closed: bool = False) -> bool:
        """Membership; ``closed`` admits points on the unstable sides of R."""
        p = self.params
        lo, hi = r_strands(p)
        y_lo = float(unstable_graph(p, z[0], lo)[0])
        y_hi = float(unstable_graph(p, z[0], hi)[0])
        ylo, yhi = min(y_lo, y_hi), max(y_lo, y_hi)
        tol = 1e-15 if closed else 0.0
        inside_r = (ylo - tol <= z[1] <= yhi + tol) if closed else (ylo < z[1] < yhi)
        return bool(inside_r and z[1] > float(self.fold(z[0])[0]))

    def x_extent(self, n: int = 4001, half: float = 0.3) -> tuple[float, float]:
        """x-range of the region (sampled)."""
        p = self.params
        xs = np.linspace(-half, half, n)
        lo, hi = r_strands(p)
        ya = unstable_graph(p, xs, lo)
        yb = unstable_graph(p, xs, hi)
        f = self.fold(xs)
        inside = (f < np.maximum(ya, yb)) & np.isfinite(f)
        if not inside.any():
            return (math.nan, math.nan)
        return float(xs[inside].min()), float(xs[inside].max())


# ---------------------------------------------------------------- Theta, Theta'

@dataclass
class ThetaPair:
    theta: GraphRectangle
    theta_prime: GraphRectangle
    critical_region: CriticalRegion
    checks: dict = field(default_factory=dict)


def _strand_points(p: MapParams, itin: str, x_lo: float, x_hi: float, n: int) -> np.ndarray:
    xs = np.linspace(x_lo, x_hi, n)
    return np.stack([xs, unstable_graph(p, xs, itin)], axis=-1)


def build_theta_prime(p: MapParams, delta: float = 0.05, n_samples: int = 100,
                      n_back: int = 25, margin: float = 0.9) -> ThetaPair:
    """Theta (between the W^s(P) curves alpha_1^+-, inside R) and Theta'.

    Runs the containment checks S within I(delta) within Theta, the crossing
    of Int(S) by the unstable sides of Theta', the C^2(b) bounds of those
    sides and the backward contraction of their tangents.
    """
    theta = GraphRectangle(p, (ALPHA1_MINUS, ALPHA1_PLUS), r_strands(p))
    prime = GraphRectangle(p, (ALPHA1_MINUS, ALPHA1_PLUS), theta_prime_strands(p))
    S = CriticalRegion(p)
    c = theta.corners()
    x_in = max(c[0, 0], c[3, 0]), min(c[1, 0], c[2, 0])
    s_lo, s_hi = S.x_extent()
    checks = {
        "S_in_I_delta": bool(-delta < s_lo and s_hi < delta),
        "I_delta_in_Theta": bool(x_in[0] < -delta and delta < x_in[1]),
    }
    sb = math.sqrt(p.b)
    cross = []
    slope_ok = True
    contraction_worst = -math.inf
    for itin in theta_prime_strands(p):
        pts = _strand_points(p, itin, x_in[0], x_in[1], 2001)
        d1 = np.gradient(pts[:, 1], pts[:, 0])
        d2 = np.gradient(d1, pts[:, 0])
        slope_ok &= bool(np.all(np.abs(d1) <= sb) and np.all(np.abs(d2[5:-5]) <= sb))
        cross.append(any(S.contains(z, closed=True) for z in pts[np.abs(pts[:, 0]) < delta][::10]))
        signs = [1.0 if ch == "R" else -1.0 for ch in itin]
        for z in pts[np.linspace(0, len(pts) - 1, n_samples // 2).astype(int)]:
            hist = shadow_backward_orbit(p, z, n_back + 30, tail=itin[-1], signs=signs, tol=1e-9)
            eu0 = estimate_Eu(p, hist[30], m=30, history=hist[:31]).vector
            logs = backward_log_contraction(p, hist[30:], eu0)
            n = np.arange(1, len(logs) + 1)
            contraction_worst = max(contraction_worst, float(np.max(logs + margin * LAMBDA0 * n)))
    checks["theta_prime_sides_C2b"] = slope_ok
    checks["theta_prime_sides_cross_S"] = bool(all(cross))
    checks["backward_contraction_excess"] = contraction_worst
    checks["backward_contraction_ok"] = contraction_worst <= 0.0
    return ThetaPair(theta, prime, S, checks)


# ---------------------------------------------------------------- return rectangles

WIDTH_FLOOR = 1e-14
LANDING_TOL = 1e-13


@dataclass
class ReturnRectangle:
    k: int
    corners: np.ndarray
    stable_sides: tuple
    unstable_sides: tuple
    rect: GraphRectangle = field(repr=False, default=None)
    center_orbit: np.ndarray = field(repr=False, default=None)

    @property
    def width(self) -> float:
        return self.rect.width()


def _polyline_x_of_y(p, itin, y0, y1, n=9):
    ys = np.linspace(y0, y1, n)
    return np.stack([stable_graph(p, ys, itin), ys], axis=-1)


def _polyline_y_of_x(p, itin, x0, x1, n=9):
    xs = np.linspace(x0, x1, n)
    return np.stack([xs, unstable_graph(p, xs, itin)], axis=-1)


def return_rectangle(p: MapParams, k: int, pair: ThetaPair, delta: float = 0.05,
                     side: str = "+") -> ReturnRectangle:
    """omega_k: points of Theta' whose first return to Theta' takes exactly k steps."""
    it = letter_itinerary(k, p, side)
    s_itins = (it + ALPHA1_PLUS, it + ALPHA1_MINUS)
    u_itins = theta_prime_strands(p)
    rect = GraphRectangle(p, s_itins, u_itins)
    c = rect.corners()
    if not np.all(np.abs(c[:, 0]) < delta):
        raise ValueError(f"omega_{k} is not inside I(delta); increase k0")
    if rect.width() <= WIDTH_FLOOR:
        raise InfeasibleError(f"omega_{k} is narrower than double precision resolves")
    x0 = float(c[:, 0].mean())
    for _ in range(4):   # centre height: middle of the strand bundle above x0
        ylo, yhi = rect.unstable_y(x0)
        orbit = stable_orbit(p, 0.5 * float(ylo[0] + yhi[0]), it + CENTER_TAIL)
        x0 = float(orbit[0, 0])
    # iterates 1..k-1 avoid Int(Theta), iterate k lies in Theta'.  Returning
    # orbits come in along W^u(Q), which is a side of Theta', so landing is
    # tested on the closed rectangle up to rounding.
    if not pair.theta_prime.contains(orbit[0], interior=False, tol=LANDING_TOL):
        raise CodingError(f"centre of omega_{k} not inside Theta'")
    for i in range(1, k):
        if abs(orbit[i, 0]) < 0.3 and pair.theta.contains(orbit[i]):
            raise CodingError(f"omega_{k}: iterate {i} enters Int(Theta)")
    if not pair.theta_prime.contains(orbit[k], interior=False, tol=LANDING_TOL):
        raise CodingError(f"omega_{k}: iterate {k} misses Theta'")
    stable_sides = tuple(
        _polyline_x_of_y(p, s, c[:, 1].min(), c[:, 1].max()) for s in s_itins)
    unstable_sides = tuple(
        _polyline_y_of_x(p, u, c[:, 0].min(), c[:, 0].max()) for u in u_itins)
    return ReturnRectangle(k, c, stable_sides, unstable_sides, rect, orbit)


def stable_side_on_Ws_P(p: MapParams, rr: ReturnRectangle) -> float:
    """Distance to P reached along the sweep orbit of a stable-side point,
    together with the orbit residual; the max of the two is returned."""
    P, _ = fixed_points(p)
    worst = 0.0
    for s_itin, side in zip(rr.rect.stable, rr.stable_sides):
        y = float(side[len(side) // 2, 1])
        orb = stable_orbit(p, y, s_itin, depth=len(s_itin) + 60)
        res = np.max(np.abs(henon_apply(p, orb[:-1]) - orb[1:]))
        worst = max(worst, float(res), float(np.linalg.norm(orb[-1] - P.location)))
    return worst


def find_k0(p: MapParams, pair: ThetaPair, delta: float = 0.05, k_max: int = K_CAP) -> int:
    """Smallest k whose rectangle lies inside I(delta)."""
    for k in range(4, k_max + 1):
        try:
            return_rectangle(p, k, pair, delta)
            return k
        except ValueError as exc:
            if isinstance(exc, InfeasibleError):
                break
    raise InfeasibleError(f"no k <= {k_max} gives a return rectangle inside I(delta)")


def build_return_rectangles(p: MapParams, k0: int | None, k1: int, delta: float = 0.05,
                            pair: ThetaPair | None = None) -> list[ReturnRectangle]:
    if k1 > K_CAP:
        raise InfeasibleError(f"k1={k1} exceeds the cap {K_CAP}")
    pair = build_theta_prime(p, delta) if pair is None else pair
    k0 = find_k0(p, pair, delta) if k0 is None else k0
    if k0 > k1:
        raise ValueError("k0 > k1")
    return [return_rectangle(p, k, pair, delta) for k in range(k0, k1 + 1)]


def max_resolvable_k(p: MapParams, pair: ThetaPair, k_start: int, delta: float = 0.05) -> int:
    k = k_start
    while k < K_CAP:
        try:
            return_rectangle(p, k + 1, pair, delta)
        except InfeasibleError:
            break
        k += 1
    return k


@functools.lru_cache(maxsize=16)
def theta_pair(p: MapParams, delta: float = 0.05) -> ThetaPair:
    """Cached :func:`build_theta_prime`."""
    return build_theta_prime(p, delta)


@functools.lru_cache(maxsize=512)
def omega(p: MapParams, k: int, delta: float = 0.05) -> ReturnRectangle:
    """Cached :func:`return_rectangle` with the cached Theta pair."""
    return return_rectangle(p, k, theta_pair(p, delta), delta)


# ---------------------------------------------------------------- symbolic coding

@dataclass(frozen=True)
class SymbolWord:
    """One period of a periodic sequence over the letters q0..q1."""

    q0: int
    q1: int
    letters: tuple

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(int(a) for a in self.letters))
        if not self.q0 < self.q1:
            raise ValueError("q0 must be < q1")
        if not self.letters:
            raise ValueError("empty word")
        if any(a < self.q0 or a > self.q1 for a in self.letters):
            raise ValueError(f"letters outside [{self.q0}, {self.q1}]")

    @property
    def r(self) -> int:
        """Return time of the whole word, sum of its letters."""
        return sum(self.letters)

    def itinerary(self, p: MapParams) -> str:
        return "".join(letter_itinerary(a, p) for a in self.letters)

    def letter_starts(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.letters)[:-1]]).astype(int)


@dataclass
class CodedOrbit:
    word: SymbolWord
    points: np.ndarray          # (r, 2), points[i + 1] = f(points[i]) cyclically
    residual: float

    @property
    def point(self) -> np.ndarray:
        return self.points[0]

    def unstable_direction(self, p: MapParams) -> np.ndarray:
        return periodic_unstable_direction(p, self.points)

    def log_growth(self, p: MapParams) -> np.ndarray:
        """log J^u at every orbit point."""
        return log_unstable_growth(p, self.points, self.unstable_direction(p))

    def log_unstable_multiplier(self, p: MapParams) -> float:
        return float(np.sum(self.log_growth(p)))

    def letter_log_expansion(self, p: MapParams) -> np.ndarray:
        """log ||Df^(a_i) | E^u|| over each excursion of the word."""
        g = self.log_growth(p)
        return np.add.reduceat(g, self.word.letter_starts())

    def lyapunov(self, p: MapParams) -> float:
        return self.log_unstable_multiplier(p) / len(self.points)


def _periodic_sweep(p: MapParams, signs: np.ndarray, x_init=None, tol: float = 1e-15,
                    max_sweeps: int = 500) -> np.ndarray:
    """x-coordinates of the periodic orbit with the given sign sequence.

    Gauss-Seidel sweeps of x_i = s_i sqrt((1 + s b x_(i-1) - x_(i+1)) / a),
    run backwards in time so every update uses the freshly contracted future.
    """
    r = len(signs)
    sb = p.sign * p.b
    x = np.where(signs > 0, 0.5, -0.9) if x_init is None else np.array(x_init, float)
    sgn = signs.tolist()
    xl = x.tolist()
    a = p.a
    for _ in range(max_sweeps):
        change = 0.0
        for i in range(r - 1, -1, -1):
            arg = (1.0 + sb * xl[i - 1] - xl[(i + 1) % r]) / a
            new = sgn[i] * math.sqrt(arg) if arg > 0 else 0.0
            change = max(change, abs(new - xl[i]))
            xl[i] = new
        if change <= tol:
            break
    # rounding can leave a last-bit oscillation; the Newton polish and the
    # residual check downstream decide acceptance
    return np.array(xl)


def _newton_polish(p: MapParams, z: np.ndarray, iters: int = 6, tol: float = 1e-13) -> tuple[np.ndarray, float]:
    """Multiple-shooting Newton on f(z_i) - z_(i+1) = 0 (cyclic)."""
    r = len(z)
    z = z.copy()
    idx = np.arange(r)
    nxt = (idx + 1) % r
    for _ in range(iters):
        F = (henon_apply(p, z) - z[nxt]).reshape(-1)
        res = float(np.max(np.abs(F)))
        if res <= tol:
            return z, res
        J = henon_jacobian(p, z)
        rows, cols, vals = [], [], []
        for a_ in range(2):
            for b_ in range(2):
                rows.append(2 * idx + a_)
                cols.append(2 * idx + b_)
                vals.append(J[:, a_, b_])
            rows.append(2 * idx + a_)
            cols.append(2 * nxt + a_)
            vals.append(-np.ones(r))
        A = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(2 * r, 2 * r))
        dz = spsolve(A, -F)
        z = z + dz.reshape(r, 2)
    F = henon_apply(p, z) - z[nxt]
    return z, float(np.max(np.abs(F)))


def periodic_orbit_from_itinerary(p: MapParams, itinerary: str, x_init=None) -> tuple[np.ndarray, float]:
    signs = np.array([1.0 if c == "R" else -1.0 for c in itinerary])
    x = _periodic_sweep(p, signs, x_init)
    z = np.stack([x, p.sign * p.b * np.roll(x, 1)], axis=-1)
    return _newton_polish(p, z)


def code_periodic_point(p: MapParams, word: SymbolWord, rects=None, check: bool = True,
                        residual_tol: float = 1e-10) -> CodedOrbit:
    """Periodic orbit of f following the excursions prescribed by ``word``.

    Seeded by inverse-branch sweeps along the L/R itinerary of the word (the
    nested intersection of the rectangle chain), polished by multiple-shooting
    Newton.  With ``check`` the orbit must keep the prescribed signs and each
    excursion must start inside its rectangle omega_(a_i) when one is given in
    ``rects`` (a mapping k -> ReturnRectangle).
    """
    itin = word.itinerary(p)
    z, res = periodic_orbit_from_itinerary(p, itin)
    if not res <= residual_tol:
        raise CodingError(f"orbit residual {res:.2e} above {residual_tol:.0e}")
    if check:
        signs = np.where(z[:, 0] >= 0, "R", "L")
        if "".join(signs) != itin:
            raise CodingError("orbit leaves the prescribed itinerary")
        if rects is not None:
            for s, a in zip(word.letter_starts(), word.letters):
                rr = rects.get(a)
                if rr is not None and not rr.rect.contains(z[s], interior=False, tol=LANDING_TOL):
                    raise CodingError(f"excursion at {s} does not start in omega_{a}")
    return CodedOrbit(word, z, res)


def resolve_from_seed(p: MapParams, orbit: CodedOrbit, rng: np.random.Generator,
                      scale: float = 1e-7) -> np.ndarray:
    """Independent Newton solve of the same orbit from a perturbed seed."""
    seed = orbit.points + scale * rng.standard_normal(orbit.points.shape)
    z, res = _newton_polish(p, seed, iters=20)
    return z


# ---------------------------------------------------------------- expansion constant

def fit_C_hat(p: MapParams, ks, n_samples: int = 50, rng: np.random.Generator | None = None,
              safety: float = 0.5, rects=None) -> tuple[float, np.ndarray]:
    """min over letters k and sampled continuations of ||Df^k|E^u|| e^(-lambda_Q k), halved.

    Sample points of omega_k are the coded periodic points of words (k, ...)
    with one or two random further letters.  Returns (C_hat, per-k minima).
    """
    rng = np.random.default_rng(0) if rng is None else rng
    _, Q = fixed_points(p)
    lam_q = Q.lyapunov_unstable
    ks = list(ks)
    lo, hi = min(ks), max(ks)
    mins = np.empty(len(ks))
    for j, k in enumerate(ks):
        best = math.inf
        for _ in range(n_samples):
            tail = rng.integers(lo, hi + 1, size=rng.integers(1, 3)).tolist()
            orb = code_periodic_point(p, SymbolWord(lo, max(hi, lo + 1), [k] + tail), rects)
            best = min(best, float(orb.letter_log_expansion(p)[0]) - lam_q * k)
        mins[j] = best
    return safety * math.exp(float(mins.min())), mins


# ---------------------------------------------------------------- measures

PROVENANCES = ("ShiftMME", "PeriodicOrbitAverage")


@dataclass
class MeasureSummary:
    entropy: float
    lambda_u: float
    provenance: str
    stderr: float = 0.0
    n_words: int = 0
    mean_return: float = math.nan
    q: int = 0
    method: str = ""

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.entropy < 0:
            raise ValueError("entropy must be >= 0")

    def free_energy(self, t: float) -> float:
        return self.entropy - t * self.lambda_u


def is_perfect_square(q: int) -> bool:
    s = math.isqrt(q)
    return s * s == q


def mme_letters(q: int) -> tuple[int, int]:
    """Letter range {q - sqrt(q) + 1, ..., q}."""
    if q < 16 or not is_perfect_square(q):
        raise ValueError(f"q={q} must be a perfect square >= 16")
    return q - math.isqrt(q) + 1, q


@functools.lru_cache(maxsize=4096)
def single_letter_log_expansion(p: MapParams, k: int) -> float:
    """log ||Df^k|E^u|| along the periodic orbit of the one-letter word (k)."""
    orb = code_periodic_point(p, SymbolWord(4, max(k, 5), (k,)))
    return float(orb.log_unstable_multiplier(p))


def shift_mme_summary(p: MapParams, q: int, n_words: int = 200, rng: np.random.Generator | None = None,
                      exact_r_cap: int = 5000, rel_stderr_cap: float = 0.01,
                      per_word: list | None = None) -> MeasureSummary:
    """Entropy and unstable exponent of the spread of the uniform Bernoulli measure.

    Words are q independent uniform letters from {q - sqrt(q) + 1, ..., q}.
    Each sampled word contributes (1/r) log ||Df^r|E^u|| at its coded periodic
    point; for r above ``exact_r_cap`` the logarithm is the sum of one-letter
    values, whose neighbour dependence is below 1e-3 per letter once letters
    exceed ten.  ``per_word`` (if a list) receives (r, log-norm) rows.
    """
    if n_words > WORD_CAP:
        raise InfeasibleError(f"n_words={n_words} exceeds the cap {WORD_CAP}")
    if q > Q_CAP:
        raise InfeasibleError(f"q={q} exceeds the cap {Q_CAP}")
    q0, q1 = mme_letters(q)
    rng = np.random.default_rng(0) if rng is None else rng
    mean_return = q * (q0 + q1) / 2.0
    entropy = q * math.log(math.sqrt(q)) / mean_return
    vals = np.empty(n_words)
    method = "exact" if q * q1 <= exact_r_cap else "letter-sum"
    for i in range(n_words):
        letters = rng.integers(q0, q1 + 1, size=q)
        r = int(letters.sum())
        if method == "exact":
            L = code_periodic_point(p, SymbolWord(q0, q1, letters)).log_unstable_multiplier(p)
        else:
            L = sum(single_letter_log_expansion(p, int(k)) for k in letters)
        vals[i] = L / r
        if per_word is not None:
            per_word.append((r, L))
    lam = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n_words)) if n_words > 1 else math.inf
    if se > rel_stderr_cap * abs(lam):
        raise InfeasibleError(f"standard error {se:.2e} above {rel_stderr_cap:.0%} of lambda_u")
    return MeasureSummary(entropy, lam, "ShiftMME", se, n_words, mean_return, q, method)


def choose_q(t: float, C_hat: float, cap: int = Q_CAP) -> int:
    """Smallest perfect square >= max(16, 2 exp(4 t log C_hat))."""
    if not t < 0:
        raise ValueError("t must be negative")
    if not 0 < C_hat < 1:
        raise ValueError("C_hat must lie in (0, 1)")
    expo = 4.0 * t * math.log(C_hat)
    if expo > math.log(cap):
        raise InfeasibleError(f"q >= 2 exp({expo:.3g}) exceeds the cap {cap}")
    need = max(16.0, 2.0 * math.exp(expo))
    s = math.isqrt(math.ceil(need - 1e-9))
    while s * s < need - 1e-9:
        s += 1
    if s * s > cap:
        raise InfeasibleError(f"q={s * s} exceeds the cap {cap}")
    return s * s


def analytic_floor(t: float, q: int, C_hat: float, lam_q: float) -> float:
    return math.log(math.sqrt(q)) / q - 2.0 * t * math.log(C_hat) / q - t * lam_q


@dataclass
class LowerBound:
    t: float
    q: int
    value: float
    floor: float
    target: float
    C_hat: float
    summary: MeasureSummary

    @property
    def gap(self) -> float:
        """lower bound minus -t lambda^u(delta_Q)."""
        return self.value - self.target

    @property
    def required_margin(self) -> float:
        return 0.5 * math.log(math.sqrt(self.q)) / self.q

    @property
    def removes(self) -> bool:
        return self.gap >= self.required_margin

    def to_dict(self) -> dict:
        return {
            "t": self.t, "q": self.q, "lower_bound": self.value, "analytic_floor": self.floor,
            "target": self.target, "C_hat": self.C_hat, "gap": self.gap,
            "required_margin": self.required_margin, "removes": self.removes,
            "entropy": self.summary.entropy, "lambda_u": self.summary.lambda_u,
            "n_words": self.summary.n_words, "stderr": self.summary.stderr,
            "method": self.summary.method,
        }


def pressure_lower_bound(p: MapParams, t: float, q: int, C_hat: float,
                         summary: MeasureSummary | None = None, **kw) -> LowerBound:
    """h - t lambda^u of the spread shift measure, and the analytic floor."""
    if not t < 0:
        raise ValueError("t must be negative")
    summary = shift_mme_summary(p, q, **kw) if summary is None else summary
    _, Q = fixed_points(p)
    lam_q = Q.lyapunov_unstable
    return LowerBound(t, q, summary.free_energy(t), analytic_floor(t, q, C_hat, lam_q),
                      -t * lam_q, C_hat, summary)


# ---------------------------------------------------------------- freezing points

@dataclass(frozen=True)
class FreezingEstimate:
    t_c: float
    t_c_flag: str       # "crossing", "no-freezing" (-inf) or "never-exceeds" (+inf)
    t_f: float
    t_f_flag: str


def _first_exceed(t, excess, from_left: bool):
    """Boundary of {excess > 0} scanned from one end of the grid."""
    pos = excess > 0
    if pos.all():
        return (-math.inf if from_left else math.inf), "no-freezing"
    if not pos.any():
        return (math.inf if from_left else -math.inf), "never-exceeds"
    idx = np.nonzero(pos)[0]
    i = idx[0] if from_left else idx[-1]
    j = i - 1 if from_left else i + 1
    if j < 0 or j >= len(t):
        return float(t[i]), "crossing"
    # linear interpolation of the zero between the bracketing nodes
    e0, e1 = excess[j], excess[i]
    return float(t[j] + (t[i] - t[j]) * (0 - e0) / (e1 - e0)), "crossing"


def freezing_points_estimate(curves, lam_min: float, lam_max: float) -> FreezingEstimate:
    """t_c = inf{t : P(t) > -t lam_max}, t_f = sup{t : P(t) > -t lam_min}.

    ``curves`` are PressureCurve objects on a common grid (their pointwise
    maximum is used).  The grid must reach t <= -10.
    """
    curves = list(curves)
    if not curves:
        raise ValueError("no curves")
    t = curves[0].t_grid
    if any(len(c.t_grid) != len(t) or np.any(c.t_grid != t) for c in curves):
        raise ValueError("curves must share one t grid")
    if t[0] > -10:
        raise ValueError("t grid must reach t <= -10")
    P = np.max(np.stack([c.values for c in curves]), axis=0)
    neg = t <= 0
    tc, fc = _first_exceed(t[neg], P[neg] + t[neg] * lam_max, from_left=True)
    pos = t >= 0
    if pos.sum() >= 1:
        tf, ff = _first_exceed(t[pos], P[pos] + t[pos] * lam_min, from_left=False)
        if ff == "no-freezing":
            tf = math.inf
    else:
        tf, ff = math.inf, "no-freezing"
    return FreezingEstimate(tc, fc, tf, ff)
