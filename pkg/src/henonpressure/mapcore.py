"""Quadratic family, concrete Hénon-like diffeomorphisms and their fixed saddles.

Two planar variants are provided, both globally invertible in closed form:

* ``OrientationReversing``:  (x, y) -> (1 - a x^2 + y,  b x),  det Df = -b
* ``OrientationPreserving``: (x, y) -> (1 - a x^2 + y, -b x),  det Df = +b

With ``b = 0`` the family collapses to the interval map ``x -> 1 - a x^2``.
All functions accept scalars or numpy arrays (last axis = coordinates).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

A_WINDOW = (1.8, 2.4)
B_WINDOW = (1e-5, 1e-2)


class Variant(str, enum.Enum):
    REVERSING = "OrientationReversing"
    PRESERVING = "OrientationPreserving"
    ONE_DIMENSIONAL = "OneDimensional"


class ParameterError(ValueError):
    """Raised for parameters outside the supported window."""


@dataclass(frozen=True)
class MapParams:
    a: float
    b: float
    variant: Variant = Variant.REVERSING

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not math.isfinite(self.a) or not math.isfinite(self.b):
            raise ParameterError("a and b must be finite")
        if self.a <= -0.25:
            raise ParameterError(f"a={self.a} must exceed -1/4")
        if self.b < 0 or self.b > B_WINDOW[1]:
            raise ParameterError(f"b={self.b} outside [0, {B_WINDOW[1]}]")
        if self.b == 0 and self.variant is not Variant.ONE_DIMENSIONAL:
            raise ParameterError("b = 0 requires the OneDimensional variant")
        if self.b > 0 and self.variant is Variant.ONE_DIMENSIONAL:
            raise ParameterError("b > 0 forbids the OneDimensional variant")

    @property
    def sign(self) -> float:
        """Sign s in the second coordinate s*b*x; equals -sign(det Df)."""
        return -1.0 if self.variant is Variant.PRESERVING else 1.0

    @property
    def det(self) -> float:
        return -self.sign * self.b

    def check_window(self) -> None:
        """Reject parameters outside the default working window."""
        if not (A_WINDOW[0] <= self.a <= A_WINDOW[1]):
            raise ParameterError(f"a={self.a} outside working window {A_WINDOW}")
        if self.variant is not Variant.ONE_DIMENSIONAL and not (
            B_WINDOW[0] <= self.b <= B_WINDOW[1]
        ):
            raise ParameterError(f"b={self.b} outside working window {B_WINDOW}")

    def with_a(self, a: float) -> "MapParams":
        return MapParams(a, self.b, self.variant)


# ---------------------------------------------------------------- 1-D family

def quad_apply(a, x):
    """T_a(x) = 1 - a x^2."""
    return 1.0 - a * np.square(x) if isinstance(x, np.ndarray) else 1.0 - a * x * x


def quad_derivative(a, x):
    return -2.0 * a * x


# ---------------------------------------------------------------- planar maps

def _require_planar(p: MapParams) -> None:
    if p.variant is Variant.ONE_DIMENSIONAL:
        raise ParameterError("planar operation requested for the OneDimensional variant")


def henon_apply(p: MapParams, z):
    _require_planar(p)
    z = np.asarray(z, dtype=float)
    x, y = z[..., 0], z[..., 1]
    return np.stack([1.0 - p.a * x * x + y, p.sign * p.b * x], axis=-1)


def henon_inverse(p: MapParams, z):
    _require_planar(p)
    z = np.asarray(z, dtype=float)
    u, v = z[..., 0], z[..., 1]
    x = v / (p.sign * p.b)
    return np.stack([x, u - 1.0 + p.a * x * x], axis=-1)


def henon_jacobian(p: MapParams, z):
    """Df at z; shape (..., 2, 2)."""
    _require_planar(p)
    z = np.asarray(z, dtype=float)
    x = z[..., 0]
    J = np.empty(x.shape + (2, 2))
    J[..., 0, 0] = -2.0 * p.a * x
    J[..., 0, 1] = 1.0
    J[..., 1, 0] = p.sign * p.b
    J[..., 1, 1] = 0.0
    return J


def henon_inverse_jacobian(p: MapParams, z):
    """D(f^-1) at z, i.e. the inverse of Df evaluated at f^-1(z)."""
    _require_planar(p)
    z = np.asarray(z, dtype=float)
    x = z[..., 1] / (p.sign * p.b)
    J = np.empty(x.shape + (2, 2))
    J[..., 0, 0] = 0.0
    J[..., 0, 1] = 1.0 / (p.sign * p.b)
    J[..., 1, 0] = 1.0
    J[..., 1, 1] = 2.0 * p.a * x / (p.sign * p.b)
    return J


def iterate(p: MapParams, z, n: int):
    """f^n(z) for n >= 0, f^{-|n|}(z) for n < 0."""
    step = henon_apply if n >= 0 else henon_inverse
    z = np.asarray(z, dtype=float)
    for _ in range(abs(n)):
        z = step(p, z)
    return z


# ---------------------------------------------------------------- directions

def slope(v) -> float:
    """|eta| / |xi| for v = (xi, eta); infinite for vertical vectors."""
    xi, eta = float(v[0]), float(v[1])
    return math.inf if xi == 0.0 else abs(eta) / abs(xi)


@dataclass(frozen=True)
class TangentDir:
    """A line in the tangent plane, stored as an angle in [0, pi)."""

    angle: float

    @classmethod
    def from_vector(cls, v) -> "TangentDir":
        ang = math.atan2(float(v[1]), float(v[0])) % math.pi
        if ang >= math.pi:
            ang = 0.0
        return cls(ang)

    @property
    def vector(self) -> np.ndarray:
        return np.array([math.cos(self.angle), math.sin(self.angle)])

    @property
    def slope(self) -> float:
        if abs(self.angle - math.pi / 2) < 1e-300:
            return math.inf
        return abs(math.tan(self.angle))

    def angle_to(self, other: "TangentDir") -> float:
        d = abs(self.angle - other.angle) % math.pi
        return min(d, math.pi - d)


def line_angle(u, v) -> float:
    """Angle in [0, pi/2] between the lines spanned by u and v."""
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    c = abs(float(u @ v)) / (np.linalg.norm(u) * np.linalg.norm(v))
    s = abs(float(u[0] * v[1] - u[1] * v[0])) / (np.linalg.norm(u) * np.linalg.norm(v))
    return math.atan2(s, c)


# ---------------------------------------------------------------- saddles

@dataclass(frozen=True)
class Saddle:
    location: np.ndarray
    eig_unstable: float
    eig_stable: float
    dir_unstable: TangentDir
    dir_stable: TangentDir
    label: str

    @property
    def lyapunov_unstable(self) -> float:
        """Unstable Lyapunov exponent of the Dirac measure at the saddle."""
        return math.log(abs(self.eig_unstable))


def _eigen(J: np.ndarray):
    w, V = np.linalg.eig(J)
    w = np.real_if_close(w)
    if np.iscomplexobj(w):
        raise ParameterError("complex multipliers: fixed point is not a saddle")
    order = np.argsort(-np.abs(w))
    return w[order].astype(float), np.real(V[:, order])


def fixed_points(p: MapParams) -> tuple[Saddle, Saddle]:
    """Return (P, Q): P near (1/2, 0), Q near (-1, 0).

    Fixed points solve a x^2 + (1 - s b) x - 1 = 0 where s = +1 (reversing)
    or -1 (preserving); y = s b x.
    """
    if p.variant is Variant.ONE_DIMENSIONAL:
        disc = 1.0 + 4.0 * p.a
        if disc <= 0:
            raise ParameterError("no real fixed points")
        roots = ((-1.0 + math.sqrt(disc)) / (2 * p.a), (-1.0 - math.sqrt(disc)) / (2 * p.a))
        out = []
        for x, lab in zip(roots, ("P", "Q")):
            m = -2.0 * p.a * x
            out.append(
                Saddle(np.array([x, 0.0]), m, 0.0, TangentDir(0.0), TangentDir(math.pi / 2), lab)
            )
        return out[0], out[1]
    c1 = 1.0 - p.sign * p.b
    disc = c1 * c1 + 4.0 * p.a
    if disc <= 0:
        raise ParameterError("discriminant <= 0: no real fixed points")
    sq = math.sqrt(disc)
    # numerically stable pair of roots
    q = -0.5 * (c1 + sq)
    x_q = q / p.a
    x_p = -1.0 / q
    out = []
    for x, lab in ((x_p, "P"), (x_q, "Q")):
        loc = np.array([x, p.sign * p.b * x])
        # one Newton polish on f(z) = z
        for _ in range(2):
            J = henon_jacobian(p, loc)
            r = henon_apply(p, loc) - loc
            loc = loc - np.linalg.solve(J - np.eye(2), r)
        J = henon_jacobian(p, loc)
        w, V = _eigen(J)
        if not (abs(w[0]) > 1.0 > abs(w[1]) > 0.0):
            raise ParameterError(f"fixed point {lab} is not a saddle (multipliers {w})")
        out.append(
            Saddle(
                location=loc,
                eig_unstable=float(w[0]),
                eig_stable=float(w[1]),
                dir_unstable=TangentDir.from_vector(V[:, 0]),
                dir_stable=TangentDir.from_vector(V[:, 1]),
                label=lab,
            )
        )
    return out[0], out[1]
