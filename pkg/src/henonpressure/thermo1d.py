"""Geometric pressure of the quadratic family from periodic orbits.

For x -> 1 - a x^2 with a >= 2 every periodic point is hyperbolic and the
partition function Z_n(t) = sum_{T^n x = x} |(T^n)'(x)|^{-t} gives the finite
depth estimate P_n(t) = (1/n) log Z_n(t).  At a = 2 the map is semi-conjugate
to angle doubling via x = -cos(theta), so its periodic points are known in
closed form and serve as an exact reference.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.special import logsumexp

LOG2 = math.log(2.0)
LOG4 = math.log(4.0)

METHODS = ("ClosedForm", "OrbitSum", "ShiftLowerBound")


class EnumerationError(RuntimeError):
    """Raised when periodic points cannot be located to the requested accuracy."""


@dataclass(frozen=True)
class PeriodicOrbit1D:
    period: int
    representative: float
    multiplier: float
    itinerary: str
    log_abs_multiplier: float = float("nan")

    @property
    def lyapunov(self) -> float:
        return self.log_abs_multiplier / self.period


@dataclass
class PeriodicPointSet:
    """All fixed points of T^n, stored column-wise.

    ``codes`` holds itineraries as integers: bit i is set when the i-th iterate
    lies in x >= 0 (letter R).  Iterating yields :class:`PeriodicOrbit1D`.
    """

    n: int
    a: float
    x: np.ndarray
    log_abs_multiplier: np.ndarray
    sign: np.ndarray
    codes: np.ndarray

    def __len__(self) -> int:
        return len(self.x)

    def itinerary(self, i: int) -> str:
        c = int(self.codes[i])
        return "".join("R" if (c >> j) & 1 else "L" for j in range(self.n))

    def multipliers(self) -> np.ndarray:
        return self.sign * np.exp(self.log_abs_multiplier)

    def __getitem__(self, i: int) -> PeriodicOrbit1D:
        lam = float(self.log_abs_multiplier[i])
        return PeriodicOrbit1D(self.n, float(self.x[i]), float(self.sign[i] * math.exp(lam)),
                               self.itinerary(i), lam)

    def __iter__(self) -> Iterator[PeriodicOrbit1D]:
        for i in range(len(self)):
            yield self[i]

    def sorted_by_code(self) -> "PeriodicPointSet":
        o = np.argsort(self.codes, kind="stable")
        return PeriodicPointSet(self.n, self.a, self.x[o], self.log_abs_multiplier[o],
                                self.sign[o], self.codes[o])


def _check_period(n: int, hi: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < 1 or n > hi:
        raise ValueError(f"period n={n} outside 1..{hi}")


# ---------------------------------------------------------------- Chebyshev map

def _doubling_family(n: int, m: int, ks: np.ndarray):
    """Orbit data of theta = 2 pi k / m under doubling, n steps (exact integers)."""
    j = ks.astype(np.int64) % m
    x0 = -np.cos(2.0 * np.pi * j / m)
    loglam = np.zeros(len(ks))
    sign = np.ones(len(ks))
    codes = np.zeros(len(ks), dtype=np.int64)
    for i in range(n):
        xi = -np.cos(2.0 * np.pi * j / m)
        loglam += np.log(4.0 * np.abs(xi))
        sign *= -np.sign(xi)
        codes |= (xi >= 0).astype(np.int64) << i
        j = (2 * j) % m
    return x0, loglam, sign, codes


def t2_periodic_points(n: int) -> PeriodicPointSet:
    """All 2^n fixed points of T_2^n with exact multipliers.

    T_2(-cos t) = -cos 2t, so fixed points of T_2^n correspond to angles in
    [0, pi] with 2^n t = +-t mod 2 pi: t = 2 pi k/(2^n - 1) and
    t = 2 pi k/(2^n + 1).  Multipliers are products of -4 x_i along the orbit,
    accumulated as logarithms with the sign kept separately.
    """
    _check_period(n, 24)
    N = 1 << n
    k1 = np.arange(0, N // 2)            # 2 pi k/(2^n - 1), k < (2^n - 1)/2
    k2 = np.arange(1, N // 2 + 1)        # 2 pi k/(2^n + 1), 1 <= k <= 2^(n-1)
    parts = [_doubling_family(n, N - 1, k1), _doubling_family(n, N + 1, k2)]
    x, lam, sign, codes = (np.concatenate(c) for c in zip(*parts))
    return PeriodicPointSet(n, 2.0, x, lam, sign, codes)


def t2_multiplier_closed_form(x) -> np.ndarray:
    """|(T_2^n)'| at a fixed point of T_2^n divided out: 2^n except 4^n at x = -1.

    Returned as the per-step exponent: log 4 at x = -1, log 2 elsewhere.
    """
    x = np.asarray(x, float)
    return np.where(np.isclose(x, -1.0, atol=1e-12, rtol=0), LOG4, LOG2)


# ---------------------------------------------------------------- general a >= 2

def quad_periodic_points(a: float, n: int, tol: float = 1e-13, max_iter: int = 200
                         ) -> PeriodicPointSet:
    """One periodic point per itinerary of length n for T_a, a >= 2.

    Each point is the fixed point of the composition of inverse branches
    x -> +-sqrt((1 - x)/a) taken along the reversed itinerary; the composition
    is a contraction on the invariant set.
    """
    if not a >= 2.0:
        raise ValueError(f"a={a} must be >= 2 (full-shift regime)")
    _check_period(n, 20)
    codes = np.arange(1 << n, dtype=np.int64)
    signs = np.stack([np.where((codes >> i) & 1, 1.0, -1.0) for i in range(n)])
    orbit = np.zeros((n, len(codes)))
    x = np.zeros(len(codes))
    for it in range(max_iter):
        prev = x.copy()
        for i in range(n - 1, -1, -1):
            x = signs[i] * np.sqrt(np.maximum(1.0 - x, 0.0) / a)
            orbit[i] = x
        if np.max(np.abs(x - prev)) <= tol:
            break
    else:
        raise EnumerationError(f"inverse-branch iteration did not converge in {max_iter} cycles")
    # orbit points from the last backward sweep; forward iteration would
    # amplify rounding by |T'| per step
    loglam = np.sum(np.log(np.abs(2.0 * a * orbit)), axis=0)
    sign = np.prod(-np.sign(orbit), axis=0)
    return PeriodicPointSet(n, a, x, loglam, sign, codes)


# ---------------------------------------------------------------- pressure

def _log_multipliers(points) -> tuple[np.ndarray, int]:
    if isinstance(points, PeriodicPointSet):
        return points.log_abs_multiplier, points.n
    pts = list(points)
    if not pts:
        raise ValueError("empty orbit list")
    lam = np.array([p.log_abs_multiplier if math.isfinite(p.log_abs_multiplier)
                    else math.log(abs(p.multiplier)) for p in pts])
    return lam, pts[0].period


def orbit_sum_pressure(points_by_period, t, n: int | None = None):
    """(1/n) log sum |Lambda|^-t over all fixed points of T^n.

    ``points_by_period`` is a :class:`PeriodicPointSet` or a sequence of
    :class:`PeriodicOrbit1D` covering Fix(T^n).  ``t`` may be an array.
    """
    lam, n0 = _log_multipliers(points_by_period)
    if len(lam) == 0:
        raise ValueError("empty orbit list")
    n = n0 if n is None else n
    if n < 1:
        raise ValueError("n must be >= 1")
    t = np.asarray(t, float)
    flat = t.reshape(-1)
    out = np.empty(flat.shape)
    step = max(1, 4_000_000 // len(lam))
    for i in range(0, len(flat), step):
        out[i:i + step] = logsumexp(-np.multiply.outer(flat[i:i + step], lam), axis=-1) / n
    return float(out[0]) if t.ndim == 0 else out.reshape(t.shape)


def t2_pressure_closed_form(t):
    """max(-t log 4, (1 - t) log 2); the branches cross at t = -1."""
    if np.ndim(t) == 0:
        return max(-t * LOG4, (1.0 - t) * LOG2)
    t = np.asarray(t, float)
    return np.maximum(-t * LOG4, (1.0 - t) * LOG2)


@dataclass
class PressureCurve:
    t_grid: np.ndarray
    values: np.ndarray
    method: str
    depth: int
    error_proxy: np.ndarray = field(default=None)

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, float)
        self.values = np.asarray(self.values, float)
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.t_grid.shape != self.values.shape:
            raise ValueError("t_grid and values differ in length")
        if np.any(np.diff(self.t_grid) <= 0):
            raise ValueError("t_grid must be strictly increasing")
        if self.error_proxy is None:
            self.error_proxy = np.zeros_like(self.values)
        self.error_proxy = np.asarray(self.error_proxy, float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "value", "method", "depth", "error_proxy"])
        for t, v, e in zip(self.t_grid, self.values, self.error_proxy):
            w.writerow([f"{t:.10g}", f"{v:.12g}", self.method, self.depth, f"{e:.6g}"])
        return buf.getvalue()


def t2_pressure_curve(t_grid: Sequence[float], n: int | None = None) -> PressureCurve:
    """Closed-form curve when ``n`` is None, orbit-sum estimate at depth n otherwise."""
    t = np.asarray(t_grid, float)
    if n is None:
        return PressureCurve(t, t2_pressure_closed_form(t), "ClosedForm", 0)
    return orbit_sum_curve(t, lambda m: t2_periodic_points(m), n)


def orbit_sum_curve(t_grid, enumerate_points, n: int) -> PressureCurve:
    """Orbit-sum curve at depth n with error proxy |P_n - P_{n-2}|."""
    t = np.asarray(t_grid, float)
    vals = orbit_sum_pressure(enumerate_points(n), t, n)
    err = np.zeros_like(vals)
    if n > 2:
        err = np.abs(vals - orbit_sum_pressure(enumerate_points(n - 2), t, n - 2))
    return PressureCurve(t, vals, "OrbitSum", n, err)


def t2_partition_closed_form(t, n: int):
    """(1/n) log Z_n(t) for T_2 from |Lambda| = 2^n (2^n - 1 points) and 4^n (x = -1)."""
    t = np.asarray(t, float)
    terms = np.stack(np.broadcast_arrays(math.log(2.0 ** n - 1.0) - n * t * LOG2, -n * t * LOG4))
    return logsumexp(terms, axis=0) / n


# ---------------------------------------------------------------- kinks

KINK_MAX_SCALE = 0.4


def detect_kink(curve: PressureCurve, jump: float = LOG4 - LOG2,
                max_scale: float = KINK_MAX_SCALE):
    """Location of a slope jump of size ~``jump`` in a pressure curve, or None.

    Second central differences P(t + H) - 2 P(t) + P(t - H) are examined at
    stencils H = m h, m = 1, 2, 4, ... with H <= ``max_scale``.  A corner with
    slope jump J gives J H once H exceeds its smoothing width; the first scale
    whose largest difference exceeds 0.5 H J reports its arg-max.  At m = 1
    this is the plain single-step test.
    """
    t = curve.t_grid
    v = curve.values
    if len(t) < 3:
        raise ValueError("grid too short")
    d = np.diff(t)
    h = float(d.mean())
    if h > 0.05 + 1e-12:
        raise ValueError(f"grid too coarse: step {h} > 0.05")
    if np.max(np.abs(d - h)) > 1e-9 * max(1.0, abs(h)):
        raise ValueError("t grid must be uniform")
    m = 1
    while m * h <= max_scale + 1e-12 and 2 * m < len(t):
        H = m * h
        d2 = v[2 * m:] - 2.0 * v[m:-m] + v[:-2 * m]
        i = int(np.argmax(d2))
        if d2[i] > 0.5 * H * jump:
            return float(t[m + i])
        m *= 2
    return None
