"""Pressure, manifold geometry and induced-shift estimates for Hénon-like maps
near the first bifurcation parameter."""
from .mapcore import (
    MapParams,
    ParameterError,
    Saddle,
    TangentDir,
    Variant,
    fixed_points,
    henon_apply,
    henon_inverse,
    henon_jacobian,
    quad_apply,
)

__all__ = [
    "MapParams",
    "ParameterError",
    "Saddle",
    "TangentDir",
    "Variant",
    "fixed_points",
    "henon_apply",
    "henon_inverse",
    "henon_jacobian",
    "quad_apply",
    "cli",
    "config",
    "graphs",
    "induced",
    "manifolds",
    "thermo1d",
    "unstable",
]

__version__ = "0.1.0"
