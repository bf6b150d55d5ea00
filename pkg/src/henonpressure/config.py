"""Flat key=value run configuration."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .mapcore import Variant

DEFAULT_BUDGETS = {"words": 200, "points": 2_000_000, "time": 600.0, "exact_r": 5000}

# key -> (parser, default)
def _floats(s: str) -> tuple:
    return tuple(float(v) for v in s.split(",") if v.strip())


def _ints(s: str) -> tuple:
    return tuple(int(v) for v in s.split(",") if v.strip())


def _budgets(s: str) -> dict:
    out = dict(DEFAULT_BUDGETS)
    for item in s.split(","):
        if not item.strip():
            continue
        k, _, v = item.partition(":")
        k = k.strip()
        if k not in DEFAULT_BUDGETS:
            raise ConfigError(f"unknown budget {k!r}")
        out[k] = type(DEFAULT_BUDGETS[k])(float(v))
    return out


def _optional_float(s: str):
    return None if s.strip().lower() in ("", "auto", "none") else float(s)


def _optional_int(s: str):
    return None if s.strip().lower() in ("", "auto", "none") else int(s)


KEYS = {
    "a": _optional_float,
    "b": _floats,
    "variant": lambda s: Variant(s.strip()),
    "t_min": float,
    "t_max": float,
    "t_step": float,
    "n_max": int,
    "q_schedule": _ints,
    "k0": _optional_int,
    "k1": int,
    "delta": float,
    "tau": float,
    "budgets": _budgets,
    "seed": int,
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    a: float | None = None
    b: tuple = (1e-3,)
    variant: Variant = Variant.REVERSING
    t_min: float = -3.0
    t_max: float = 1.5
    t_step: float = 0.02
    n_max: int = 18
    q_schedule: tuple = ()
    k0: int | None = None
    k1: int = 24
    delta: float = 0.05
    tau: float = 0.01
    budgets: dict = field(default_factory=lambda: dict(DEFAULT_BUDGETS))
    seed: int = 0
    explicit: frozenset = frozenset()

    def t_grid(self):
        import numpy as np

        if self.t_step <= 0:
            raise ConfigError("t_step must be positive")
        n = int(round((self.t_max - self.t_min) / self.t_step)) + 1
        if n < 1:
            raise ConfigError("empty t grid")
        return self.t_min + self.t_step * np.arange(n)

    def echo(self) -> dict:
        d = {}
        for k in KEYS:
            v = getattr(self, k)
            if isinstance(v, Variant):
                v = v.value
            elif isinstance(v, tuple):
                v = list(v)
            d[k] = v
        return d

    def validate(self) -> None:
        if not self.b:
            raise ConfigError("b grid is empty")
        for v in (self.t_min, self.t_max, self.t_step, self.delta, self.tau):
            if not math.isfinite(v):
                raise ConfigError("non-finite numeric entry")
        if self.t_max < self.t_min:
            raise ConfigError("t_max < t_min")
        if not 1 <= self.n_max <= 24:
            raise ConfigError("n_max must lie in 1..24")
        if not 0 < self.delta < 1 or not 0 < self.tau < 1:
            raise ConfigError("delta and tau must lie in (0, 1)")
        if self.k1 > 60:
            raise ConfigError("k1 exceeds the cap 60")


def parse_text(text: str, overrides=()) -> RunConfig:
    values = {}
    lines = list(text.splitlines()) + list(overrides)
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {n}: expected key=value")
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}")
        try:
            values[key] = KEYS[key](val.strip())
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from exc
    cfg = RunConfig(**values, explicit=frozenset(values))
    cfg.validate()
    return cfg


def load(path: str | Path | None, overrides=()) -> RunConfig:
    """Read a config file (FileNotFoundError if missing) and apply overrides."""
    text = "" if path is None else Path(path).read_text()
    return parse_text(text, overrides)
