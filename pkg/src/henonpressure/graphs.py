"""Invariant-manifold pieces as graphs over one coordinate.

For the default variants every piece of an unstable manifold that crosses the
strip |x| < 1 is a graph y = Y(x) determined by the sequence of inverse
branches (backward itinerary) taken to reach it, and every nearly vertical
piece of a stable manifold is a graph x = X(y) determined by its forward
itinerary.  Both are fixed points of contracting sweeps, so they are evaluated
to near machine precision without growing polylines.  They serve as an
independent route next to :mod:`henonpressure.manifolds`.

Itineraries are strings over {"L", "R"} (sign of the x coordinate), read from
the curve outwards; the tail letter repeats forever and must match the saddle
the manifold belongs to (``L`` for Q, ``R`` for P).
"""
from __future__ import annotations

import numpy as np

from .mapcore import MapParams, fixed_points

_SIGN = {"L": -1.0, "R": 1.0}


def _tail_x(p: MapParams, tail: str) -> float:
    P, Q = fixed_points(p)
    return float((Q if tail == "L" else P).location[0])


def unstable_graph(p: MapParams, X, itinerary: str, depth: int = 40, sweeps: int = 200):
    """y-coordinate of the unstable strand with the given backward itinerary.

    ``itinerary[j]`` is the side of the (j+1)-th preimage; the last letter is
    repeated up to ``depth`` preimages.  Returns NaN where the strand does not
    reach abscissa X.
    """
    X = np.atleast_1d(np.asarray(X, dtype=float))
    word = (itinerary + itinerary[-1] * max(0, depth - len(itinerary)))[:max(depth, len(itinerary))]
    w = np.array([_SIGN[c] for c in word])
    D = len(w)
    sb = p.sign * p.b
    xs = np.empty((D + 2,) + X.shape)
    xs[0] = X
    xs[1:] = _tail_x(p, itinerary[-1])
    for _ in range(sweeps):
        prev = xs[1].copy()
        for j in range(1, D + 1):
            arg = (1.0 + sb * xs[j + 1] - xs[j - 1]) / p.a
            xs[j] = w[j - 1] * np.sqrt(np.where(arg >= 0, arg, np.nan))
        if np.all(np.abs(xs[1] - prev) <= 1e-17 + 1e-16 * np.abs(prev)) or np.all(np.isnan(xs[1])):
            break
    return sb * xs[1]


def stable_graph(p: MapParams, Y, itinerary: str, depth: int = 80, sweeps: int = 400):
    """x-coordinate of the stable curve with the given forward itinerary.

    ``itinerary[0]`` is the side of the point itself, ``itinerary[j]`` the
    side of its j-th image; the final letter repeats (the orbit converges to
    Q for ``L`` or P for ``R``).  Well conditioned when no image lies close to
    x = 0; returns NaN where the curve does not reach ordinate Y.
    """
    Y = np.atleast_1d(np.asarray(Y, dtype=float))
    word = (itinerary + itinerary[-1] * max(0, depth - len(itinerary)))[:max(depth, len(itinerary))]
    w = np.array([_SIGN[c] for c in word])
    D = len(w)
    sb = p.sign * p.b
    xs = np.empty((D + 1,) + Y.shape)
    xs[:] = _tail_x(p, itinerary[-1])
    for _ in range(sweeps):
        prev = xs[0].copy()
        for j in range(D - 1, -1, -1):
            yj = Y if j == 0 else sb * xs[j - 1]
            arg = (1.0 + yj - xs[j + 1]) / p.a
            xs[j] = w[j] * np.sqrt(np.where(arg >= 0, arg, np.nan))
        if np.all(np.abs(xs[0] - prev) <= 1e-17 + 1e-16 * np.abs(prev)) or np.all(np.isnan(xs[0])):
            break
    return xs[0]


def fold_stable_graph(p: MapParams, X, itinerary: str, **kw):
    """y = Y(x) for the fold of a stable curve near the origin.

    Points (x, y) whose image lies on the nearly vertical stable curve with
    the given forward ``itinerary`` (of the image).  For ``itinerary = "RL"``
    this is the parabola f^-2(W^s_loc(Q)) with its vertex close to (0, 0).
    """
    X = np.atleast_1d(np.asarray(X, dtype=float))
    sb = p.sign * p.b
    x1 = stable_graph(p, sb * X, itinerary, **kw)
    return x1 - 1.0 + p.a * X * X


def stable_orbit(p: MapParams, Y: float, itinerary: str, depth: int = 80, sweeps: int = 400):
    """Forward orbit (N, 2) of the point at height Y on the stable curve with
    the given forward itinerary, as produced by the sweep (not by iterating f)."""
    word = (itinerary + itinerary[-1] * max(0, depth - len(itinerary)))[:max(depth, len(itinerary))]
    w = np.array([_SIGN[c] for c in word])
    D = len(w)
    sb = p.sign * p.b
    xs = np.full(D + 1, _tail_x(p, itinerary[-1]))
    for _ in range(sweeps):
        prev = xs.copy()
        for j in range(D - 1, -1, -1):
            yj = Y if j == 0 else sb * xs[j - 1]
            arg = (1.0 + yj - xs[j + 1]) / p.a
            xs[j] = w[j] * np.sqrt(arg) if arg >= 0 else np.nan
        if not np.all(np.isfinite(xs)) or np.max(np.abs(xs - prev)) <= 1e-17:
            break
    ys = np.concatenate([[Y], sb * xs[:-1]])
    return np.stack([xs, ys], axis=-1)
