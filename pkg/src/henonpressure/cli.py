"""Command-line driver: ``henonpressure <command> [--config PATH] [--out DIR] ...``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import config as config_mod
from .config import ConfigError, RunConfig
from .mapcore import MapParams, Variant, fixed_points

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2

REMOVAL_DEFAULT_T = (-10.0, -5.0, -2.0, -1.0)


# ---------------------------------------------------------------- output

def _check_finite(obj, path="") -> None:
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return
    if isinstance(obj, (int, float, np.floating, np.integer)):
        if not math.isfinite(float(obj)):
            raise ValueError(f"non-finite value at {path or 'top level'}")
        return
    if isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{path}.{k}")
        return
    if isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _check_finite(v, f"{path}[{i}]")
        return
    raise TypeError(f"unsupported value {obj!r} at {path}")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(float(v)):
            raise ValueError("non-finite value in CSV row")
        return f"{float(v):.10g}"
    return str(v)


class Output:
    """Writes result files into one directory and keeps the file index."""

    def __init__(self, out_dir: Path):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def _register(self, name: str) -> Path:
        if name not in self.files:
            self.files.append(name)
        return self.dir / name

    def csv(self, name: str, header, rows) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        self._register(name).write_text(buf.getvalue())

    def json(self, name: str, obj) -> None:
        _check_finite(obj)
        self._register(name).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def text(self, name: str, text: str) -> None:
        self._register(name).write_text(text)

    def manifest(self, command: str, cfg: RunConfig, constants: dict, wall: float) -> None:
        path = self.dir / "manifest.json"
        runs = []
        if path.exists():
            runs = json.loads(path.read_text()).get("runs", [])
        entry = {
            "command": command,
            "config": cfg.echo(),
            "version": __version__,
            "files": sorted(self.files),
            "constants": constants,
        }
        _check_finite(entry)
        runs.append(entry)
        path.write_text(json.dumps({"runs": runs}, indent=2, sort_keys=True) + "\n")
        # wall time is kept out of the JSON so reruns stay byte-identical
        with open(self.dir / "run.log", "a") as fh:
            fh.write(f"{command} wall_time_s={wall:.3f}\n")


def _a_star(b: float, variant) -> float:
    from .manifolds import find_a_star

    return find_a_star(b, variant).parameter


def _params(cfg: RunConfig) -> MapParams:
    b = cfg.b[0]
    a = cfg.a if cfg.a is not None else _a_star(b, cfg.variant)
    return MapParams(a, b, cfg.variant)


# ---------------------------------------------------------------- pressure1d

def cmd_pressure1d(cfg: RunConfig, out: Output) -> dict:
    from .thermo1d import (detect_kink, orbit_sum_curve, quad_periodic_points,
                           t2_periodic_points, t2_pressure_closed_form)

    a = 2.0 if cfg.a is None else cfg.a
    n = cfg.n_max
    t = cfg.t_grid()
    if a == 2.0:
        curve = orbit_sum_curve(t, t2_periodic_points, n)
        closed = t2_pressure_closed_form(t)
    else:
        if n > 20:
            raise ConfigError("n_max must be <= 20 for a != 2")
        curve = orbit_sum_curve(t, lambda m: quad_periodic_points(a, m), n)
        closed = None
    header = ["t", "pressure", "error_proxy"] + (["closed_form"] if closed is not None else [])
    rows = []
    for i in range(len(t)):
        row = [t[i], curve.values[i], curve.error_proxy[i]]
        if closed is not None:
            row.append(closed[i])
        rows.append(row)
    out.csv("pressure1d.csv", header, rows)
    kink = detect_kink(curve) if len(t) >= 3 else None
    out.json("kink.json", {"a": a, "n": n, "grid_points": int(len(t)), "kink": kink})
    return {"a": a, "n": n, "kink": kink}


# ---------------------------------------------------------------- bifurcation

def _bifurcation_row(args):
    from .manifolds import (curves_to_svg, find_a_star, find_a_star_star, stable_fold_curves,
                            tangency_unstable_curves)

    b, variant = args
    rs = find_a_star(b, variant)
    rss = find_a_star_star(b, variant, a_star=rs.parameter)
    p = MapParams(rs.parameter, b, variant)
    curves = list(stable_fold_curves(p)) + list(tangency_unstable_curves(p))
    svg = curves_to_svg(curves, view=(-0.3, 0.3, -0.01, 0.01))
    return b, rs.to_dict(), rss.to_dict(), svg


def cmd_bifurcation(cfg: RunConfig, out: Output, threads: int = 1) -> dict:
    if not cfg.b:
        raise ConfigError("b grid is empty")
    jobs = [(b, cfg.variant) for b in cfg.b]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(_bifurcation_row, jobs))
    else:
        results = [_bifurcation_row(j) for j in jobs]
    rows = []
    table = {}
    for b, rs, rss, svg in results:
        tag = f"{b:.0e}"
        out.json(f"tangency_astar_b{tag}.json", rs)
        out.json(f"tangency_astarstar_b{tag}.json", rss)
        out.text(f"manifolds_b{tag}.svg", svg)
        rows.append([b, rs["parameter"], rss["parameter"], rs["gap"], rss["gap"],
                     rss["extra"].get("ell_u_half_width", 0.01)])
        table[tag] = {"a_star": rs["parameter"], "a_star_star": rss["parameter"]}
    out.csv("bifurcation.csv", ["b", "a_star", "a_star_star", "gap_at_a_star",
                                "gap_at_a_star_star", "ell_u_half_width"], rows)
    return {"bifurcation": table}


# ---------------------------------------------------------------- removal

def cmd_removal(cfg: RunConfig, out: Output) -> dict:
    from . import induced as ind

    if cfg.explicit & {"t_min", "t_max", "t_step"}:
        t = cfg.t_grid()
    else:
        t = np.array(REMOVAL_DEFAULT_T)
    if np.any(t >= 0):
        raise ConfigError("removal requires t < 0 throughout the grid")
    p = _params(cfg)
    _, Q = fixed_points(p)
    lam_q = Q.lyapunov_unstable
    pair = ind.theta_pair(p, cfg.delta)
    k0 = cfg.k0 if cfg.k0 is not None else ind.find_k0(p, pair, cfg.delta)
    k1 = min(cfg.k1, ind.max_resolvable_k(p, pair, k0, cfg.delta))
    rng = np.random.default_rng(cfg.seed)
    C_hat, mins = ind.fit_C_hat(p, range(k0, k1 + 1), rng=rng)
    summaries = {}

    def summary(q):
        if q not in summaries:
            words = []
            s = ind.shift_mme_summary(p, q, n_words=int(cfg.budgets["words"]),
                                      rng=np.random.default_rng(cfg.seed + q),
                                      exact_r_cap=int(cfg.budgets["exact_r"]), per_word=words)
            out.csv(f"words_q{q}.csv", ["r", "log_norm"], words)
            summaries[q] = s
        return summaries[q]

    rows = []
    results = []
    for tv in t:
        tv = float(tv)
        plan = []
        try:
            plan.append(("choose_q", ind.choose_q(tv, C_hat)))
        except ind.InfeasibleError as exc:
            rows.append([tv, "", "choose_q", "infeasible", "", -tv * lam_q, "", "", ""])
            results.append({"t": tv, "source": "choose_q", "status": "infeasible",
                            "reason": str(exc)})
        plan += [("schedule", q) for q in cfg.q_schedule]
        for source, q in plan:
            lb = ind.pressure_lower_bound(p, tv, q, C_hat, summary=summary(q))
            rows.append([tv, q, source, "ok", lb.value, lb.target, lb.gap,
                         lb.required_margin, lb.removes])
            d = lb.to_dict()
            d.update(source=source, status="ok")
            results.append(d)
    out.csv("removal.csv", ["t", "q", "source", "status", "lower_bound", "target", "gap",
                            "required_margin", "removes"], rows)
    ok = [r for r in results if r["status"] == "ok"]
    flag = "no-freezing" if ok and all(r["gap"] > 0 for r in ok) else "undetermined"
    out.json("removal.json", {
        "params": {"a": p.a, "b": p.b, "variant": p.variant.value},
        "C_hat": C_hat, "lambda_u_Q": lam_q, "k0": k0, "k1": k1,
        "per_letter_min_log": [float(v) for v in mins],
        "results": results, "freezing_flag": flag,
    })
    return {"a_star": p.a, "C_hat": C_hat, "lambda_u_Q": lam_q, "freezing_flag": flag}


# ---------------------------------------------------------------- manifolds

def cmd_manifolds(cfg: RunConfig, out: Output) -> dict:
    from .manifolds import (curves_to_svg, grow_unstable, rectangle_R, stable_fold_curves)

    p = _params(cfg)
    P, Q = fixed_points(p)
    curves = [grow_unstable(p, Q, 4.5, 1.0), grow_unstable(p, P, 4.5, 1.0),
              grow_unstable(p, P, 4.5, -1.0)] + list(stable_fold_curves(p))
    R = rectangle_R(p)
    out.text("manifolds.svg", curves_to_svg(curves + R.sides(), view=(-1.3, 1.3, -0.01, 0.01)))
    out.json("manifolds.json", {
        "params": {"a": p.a, "b": p.b, "variant": p.variant.value},
        "curves": [c.to_dict() for c in curves],
        "rectangle_R": {"corners": R.corners,
                        "invariance_error": R.invariance_error,
                        "bounding_box": list(R.bounding_box())},
    })
    return {"a": p.a, "b": p.b}


# ---------------------------------------------------------------- verify

def cmd_verify(cfg: RunConfig, out: Output) -> tuple[dict, bool]:
    from .verify import run_checks

    checks = run_checks(cfg)
    out.json("verify.json", {"checks": checks})
    ok = all(c["ok"] for c in checks)
    return {"passed": sum(c["ok"] for c in checks), "total": len(checks)}, ok


# ---------------------------------------------------------------- main

COMMANDS = ("pressure1d", "bifurcation", "removal", "manifolds", "verify")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="henonpressure", description=__doc__)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, default=None, help="key=value config file")
    ap.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config entry (repeatable)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    try:
        cfg = config_mod.load(args.config, overrides)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Output(args.out)
    t0 = time.perf_counter()
    ok = True
    try:
        if args.command == "pressure1d":
            constants = cmd_pressure1d(cfg, out)
        elif args.command == "bifurcation":
            constants = cmd_bifurcation(cfg, out, args.threads)
        elif args.command == "removal":
            constants = cmd_removal(cfg, out)
        elif args.command == "manifolds":
            constants = cmd_manifolds(cfg, out)
        else:
            constants, ok = cmd_verify(cfg, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out.manifest(args.command, cfg, constants, time.perf_counter() - t0)
    print(json.dumps(constants, sort_keys=True))
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
