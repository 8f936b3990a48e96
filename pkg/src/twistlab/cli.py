"""Command-line front end: one subcommand per experiment, JSON/CSV reports."""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import __version__
from .errors import InvalidArgument, TwistlabError

FIXTURE_VERSION = "pilot-1"


def jsonable(obj: Any) -> Any:
    """Convert reports to plain JSON types; complex numbers become [re, im]."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return jsonable(obj.to_dict())
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if f.repr}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, Path):
        return str(obj)
    return obj


@dataclasses.dataclass
class RunConfig:
    command: str
    params: dict
    seed: int = 0
    out: Optional[str] = None
    format: str = "json"
    cache: Optional[str] = None
    threads: Optional[int] = None
    dry_run: bool = False

    def to_dict(self) -> dict:
        return jsonable(dataclasses.asdict(self))


# ---------------------------------------------------------------- helpers

def _window(text):
    if text is None:
        return None
    from .analysis.windows import make_window
    parts = [float(v) for v in text.split(",")]
    if len(parts) not in (2, 3):
        raise InvalidArgument(f"window must be 'a,b' or 'a,b,r', got {text!r}")
    return make_window(*parts)


def _coeffs(kind: str, limit: int, cfg: RunConfig, weight: int = 12):
    from .arith import make_coeffs
    if cfg.cache or os.environ.get("TWISTLAB_CACHE"):
        from .cache import load_coeffs
        name = {"d": "divisor", "f": "hecke"}.get(kind, kind)
        return load_coeffs(name, limit, cfg.cache, weight)
    return make_coeffs(kind, limit, weight)


def _positive(name, v):
    if v is None or v <= 0:
        raise InvalidArgument(f"--{name} must be positive, got {v}")
    return v


# ---------------------------------------------------------------- commands
# each returns (results, error_estimates, csv_text or None)

def cmd_coeffs(p, cfg):
    from .cache import cache_coeffs, read_cache
    _positive("limit", p["limit"])
    path = cache_coeffs(p["kind"], p["limit"], cfg.cache, p["weight"])
    kind, weight, limit, values = read_cache(path)
    head = values[: min(10, limit)]
    csv = "n,value\n" + "".join(f"{n},{v}\n" for n, v in enumerate(values, 1))
    return {"path": str(path), "kind": kind, "weight": weight, "limit": limit,
            "first": head}, {}, csv


def cmd_sum(p, cfg):
    from .expsum import eval_direct, eval_grid, parse_alpha, dump_grid_csv
    X = _positive("X", p["X"])
    w = _window(p["window"])
    coeffs = _coeffs(p["kind"], int(math.floor((w.b if w else 1) * X)), cfg)
    if p["grid"]:
        g = eval_grid(coeffs, w, X, p["grid"])
        a = np.abs(g.values)
        csv = "j,alpha,re,im\n" + "".join(
            f"{j},{j / g.M!r},{float(v.real)!r},{float(v.imag)!r}\n" for j, v in enumerate(g.values))
        return {"M": g.M, "max_abs": float(a.max()), "argmax_j": int(a.argmax()),
                "l2_mean": float(np.mean(a**2))}, {}, csv
    if p["alpha"] is None:
        raise InvalidArgument("sum needs --alpha or --grid")
    alpha = parse_alpha(p["alpha"])
    v = complex(eval_direct(coeffs, w, X, alpha, workers=cfg.threads))
    return {"alpha": alpha, "value": v, "abs": abs(v)}, {}, None


def cmd_moment(p, cfg):
    from .moments import moment
    X = _positive("X", p["X"])
    w = _window(p["window"])
    coeffs = _coeffs(p["kind"], int(math.floor((w.b if w else 1) * X)), cfg)
    r = moment(coeffs, w, X, _positive("s", p["s"]), p["tol"])
    return {"raw": r.raw, "normalized": r.normalized, "M": r.M, "kind": r.kind,
            "window": r.window}, {"raw": r.error_estimate}, None


def cmd_ladder(p, cfg):
    from .moments import ladder, ladder_values
    Xs = ladder_values(p["X_start"], p["X_end"], p["factor"])
    coeffs = _coeffs(p["star"], Xs[-1], cfg)
    r = ladder(p["star"], _positive("s", p["s"]), p["X_start"], p["X_end"], p["factor"],
               coeffs=coeffs, tol=p["tol"])
    res = r.to_dict()
    return res, {"fit_residual": r.fit_residual}, r.csv()


def cmd_dist(p, cfg):
    from .moments import distribution
    X = _positive("X", p["X"])
    r = distribution(X, p["M"], p["bins"], coeffs=_coeffs("hecke", X, cfg))
    return r.to_dict(), {"mass_sum_minus_one": float(sum(r.masses)) - 1.0}, r.csv()


def cmd_voronoi(p, cfg):
    from .voronoi import voronoi_residual
    r = voronoi_residual(p["star"], p["q"], p["a"], _positive("X", p["X"]))
    rec = r.to_record()
    rec["passed"] = r.passed
    return rec, {"tail_bound": r.tail_bound}, None


def cmd_calibrate(p, cfg):
    from .voronoi import calibrate_constant
    probes = None
    if p["probes"]:
        probes = [tuple(int(v) for v in item.split(",")) for item in p["probes"].split(";")]
    r = calibrate_constant(p["star"], probes)
    return r.to_dict(), {"fit_residual": r.fit_residual}, None


def cmd_jutila(p, cfg):
    from .circle import DEFECT_CSV_HEADER, build_farey_system, chi_l2_defect
    sys_ = build_farey_system(_positive("Q", p["Q"]), _positive("H", p["H"]))
    r = chi_l2_defect(sys_)
    res = {"Q": r.Q, "H": r.H, "L": r.L, "defect": r.defect, "bound": r.bound,
           "ratio": r.ratio, "l_max": r.l_max}
    return res, {}, DEFECT_CSV_HEADER + "\n" + r.csv_row() + "\n"


def cmd_coprime(p, cfg):
    from .circle import coprime_average_vs_integral
    Y = _positive("Y", p["Y"])
    r = coprime_average_vs_integral(_coeffs(p["kind"], Y, cfg), Y, p["q"], p["s"])
    return dataclasses.asdict(r), {"diff": r.diff}, None


def cmd_nq(p, cfg):
    from .arith import num_divisors, reduced_residue_count, totient
    rng = np.random.default_rng(cfg.seed)
    qs = [p["q"]] if p["q"] else list(range(1, p["qmax"] + 1))
    worst, rows = 0.0, 0
    for q in qs:
        phi, dq = totient(q), num_divisors(q)
        if p["x"] is not None:
            intervals = [(p["x"], p["H"])]
        else:
            intervals = zip(rng.uniform(-5 * q, 5 * q, p["trials"]),
                            rng.uniform(0, 5 * q, p["trials"]))
        for x, H in intervals:
            err = abs(reduced_residue_count(q, x, H) - phi * H / q)
            worst = max(worst, err / dq)
            rows += 1
    return {"checked": rows, "max_error_over_dq": worst, "holds": worst <= 1.0}, {}, None


def cmd_mls(p, cfg):
    from .circle import maximal_large_sieve_check
    rng = np.random.default_rng(cfg.seed)
    N, R = _positive("N", p["N"]), _positive("R", p["R"])
    a = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    base = np.arange(R) / R
    freqs = base + rng.uniform(0, 0.5 / R, R)
    ratio = maximal_large_sieve_check(a, freqs, eta=0.5 / R)
    return {"N": N, "R": R, "ratio": ratio}, {}, None


def cmd_afe(p, cfg):
    from .moments import afe_check
    r = afe_check(p["star"], _positive("s", p["s"]), _positive("X", p["X"]), p["X_prime"],
                  p["X1"], p["tol"], diagnostics=not p["no_diagnostics"])
    return r.to_dict(), {"tol": p["tol"]}, None


def cmd_major_arc(p, cfg):
    from .voronoi import major_arc_profile
    r = major_arc_profile(p["s"], _positive("X", p["X"]), p["c"])
    return r.to_dict(), {}, None


COMMANDS: dict[str, Callable] = {
    "coeffs": cmd_coeffs, "sum": cmd_sum, "moment": cmd_moment, "ladder": cmd_ladder,
    "dist": cmd_dist, "voronoi-check": cmd_voronoi, "calibrate": cmd_calibrate,
    "jutila": cmd_jutila, "coprime-avg": cmd_coprime, "nq-check": cmd_nq,
    "mls-check": cmd_mls, "afe": cmd_afe, "major-arc": cmd_major_arc,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dry-run", action="store_true", help="validate and print the plan")
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--out", default=None, help="report path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--cache", default=None, help="coefficient cache directory")

    ap = argparse.ArgumentParser(prog="twistlab", description=__doc__)
    ap.add_argument("--version", action="version", version=f"twistlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    kinds = ("divisor", "hecke", "squares", "d", "f")

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    s = add("coeffs", "write and validate a coefficient cache")
    s.add_argument("--kind", choices=("divisor", "hecke", "squares"), required=True)
    s.add_argument("--limit", type=int, required=True)
    s.add_argument("--weight", type=int, default=12)

    s = add("sum", "evaluate S(alpha; X) at a point or on a grid")
    s.add_argument("--kind", choices=kinds, required=True)
    s.add_argument("--X", type=int, required=True)
    s.add_argument("--alpha", default=None, help="'a/b' or a decimal")
    s.add_argument("--grid", type=int, default=None, help="grid size M (power of two)")
    s.add_argument("--window", default=None, help="'a,b' or 'a,b,r'")

    s = add("moment", "L^s moment of the exponential sum")
    s.add_argument("--kind", choices=kinds, required=True)
    s.add_argument("--X", type=int, required=True)
    s.add_argument("--s", type=float, required=True)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--window", default=None)

    s = add("ladder", "normalized moments along a geometric ladder in X")
    s.add_argument("--star", choices=("d", "f"), required=True)
    s.add_argument("--s", type=float, required=True)
    s.add_argument("--X-start", dest="X_start", type=int, required=True)
    s.add_argument("--X-end", dest="X_end", type=int, required=True)
    s.add_argument("--factor", type=float, default=2.0)
    s.add_argument("--tol", type=float, default=1e-8)

    s = add("dist", "empirical distribution of |S_f| / sqrt(X)")
    s.add_argument("--X", type=int, required=True)
    s.add_argument("--M", type=int, default=None)
    s.add_argument("--bins", type=int, default=64)

    s = add("voronoi-check", "residual of the twisted Voronoi identity")
    s.add_argument("--star", choices=("d", "f"), required=True)
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--a", type=int, required=True)
    s.add_argument("--X", type=int, required=True)

    s = add("calibrate", "fit the dual-sum constant")
    s.add_argument("--star", choices=("d", "f"), required=True)
    s.add_argument("--probes", default=None, help="'q,a,X;q,a,X;...'")

    s = add("jutila", "L2 defect of the Farey approximant")
    s.add_argument("--Q", type=int, required=True)
    s.add_argument("--H", type=float, required=True)

    s = add("coprime-avg", "average over reduced residues against the integral")
    s.add_argument("--kind", choices=kinds, default="divisor")
    s.add_argument("--Y", type=int, required=True)
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--s", type=float, default=1.0)

    s = add("nq-check", "reduced residues in intervals")
    s.add_argument("--q", type=int, default=None)
    s.add_argument("--qmax", type=int, default=200)
    s.add_argument("--x", type=float, default=None)
    s.add_argument("--H", type=float, default=None)
    s.add_argument("--trials", type=int, default=100)

    s = add("mls-check", "maximal large sieve ratio on random data")
    s.add_argument("--N", type=int, default=64)
    s.add_argument("--R", type=int, default=16)

    s = add("afe", "functional-equation check for the moment")
    s.add_argument("--star", choices=("d", "f"), required=True)
    s.add_argument("--s", type=float, required=True)
    s.add_argument("--X", type=int, required=True)
    s.add_argument("--X-prime", dest="X_prime", type=int, default=None)
    s.add_argument("--X1", type=float, default=16.0)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--no-diagnostics", action="store_true")

    s = add("major-arc", "major-arc mass of the smoothed divisor sum")
    s.add_argument("--s", type=float, required=True)
    s.add_argument("--X", type=int, required=True)
    s.add_argument("--c", type=float, default=0.125)
    return ap


GLOBAL_KEYS = ("command", "dry_run", "threads", "out", "format", "seed", "cache")


def config_from_args(argv=None) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    params = {k: v for k, v in ns.items() if k not in GLOBAL_KEYS}
    if ns["threads"] is not None and ns["threads"] < 1:
        raise InvalidArgument("--threads must be >= 1")
    if ns["command"] == "nq-check" and (ns["x"] is None) != (ns["H"] is None):
        raise InvalidArgument("nq-check needs both --x and --H, or neither")
    return RunConfig(ns["command"], params, ns["seed"], ns["out"], ns["format"],
                     ns["cache"], ns["threads"] or os.cpu_count(), ns["dry_run"])


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def dumps(report: dict) -> str:
    return json.dumps(jsonable(report), sort_keys=True, indent=2) + "\n"


def run(cfg: RunConfig) -> int:
    """Dispatch a validated config; returns the process exit status."""
    if cfg.dry_run:
        _emit(dumps({"plan": cfg.to_dict(), "fixture_version": FIXTURE_VERSION}), cfg.out)
        return 0
    t0 = time.perf_counter()
    try:
        results, errs, csv = COMMANDS[cfg.command](cfg.params, cfg)
    except TwistlabError as exc:
        report = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code,
                  "params": cfg.to_dict(), "fixture_version": FIXTURE_VERSION}
        best = getattr(exc, "best", None)
        if best is not None and np.ndim(best) == 0:
            report["best_estimate"] = best
        _emit(dumps(report), cfg.out)
        print(f"twistlab: {exc}", file=sys.stderr)
        return exc.exit_code
    if cfg.format == "csv":
        if csv is None:
            flat = {k: v for k, v in jsonable(results).items() if not isinstance(v, (dict, list))}
            csv = "key,value\n" + "".join(f"{k},{flat[k]}\n" for k in sorted(flat))
        _emit(csv, cfg.out)
        return 0
    report = {"params": cfg.to_dict(), "results": results, "error_estimates": errs,
              "runtime_ms": round((time.perf_counter() - t0) * 1000, 3),
              "fixture_version": FIXTURE_VERSION}
    _emit(dumps(report), cfg.out)
    return 0


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
    except InvalidArgument as exc:
        print(dumps({"error": "InvalidArgument", "message": str(exc), "exit_code": 2}))
        print(f"twistlab: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
