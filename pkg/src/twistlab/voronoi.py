"""Voronoi summation for d(n) and lambda_f(n) twisted by e(an/q).

For g(x) = w(x/X) and prime q with (a, q) = 1:

  sum d(n) e(an/q) g(n) = main + (X/q) sum d(n) [e(-a'n/q) I_Y(y_n) + e(a'n/q) I_K(y_n)]
  sum lf(n) e(an/q) g(n) = c_k (X/q) sum lf(n) e(-a'n/q) I_J(y_n)

with y_n = nX/q^2, a' the inverse of a mod q, I_Y, I_K the -2 pi Y0 and
4 K0 parts of the divisor kernel, and c_k a normalisation fixed by
calibration. The single-phase "combined" variant of the divisor dual sum
is kept for comparison.
"""
from __future__ import annotations

import json
import math
from fractions import Fraction
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .analysis.bessel import EULER_GAMMA
from .analysis.quadrature import gauss_legendre, integrate_doubling, subdivide
from .analysis.transforms import (TAIL_LEVEL, VoronoiTransform, hankel_batch,
                                  transform_table)
from .analysis.windows import SmoothWindow, default_voronoi_window, make_window, window_eval
from .arith import CoeffSeq, is_prime, make_coeffs, num_divisors, totient
from .errors import CalibrationError, InvalidArgument, ResourceLimitError
from .expsum import eval_direct

MAIN_VARIANTS = {"2gamma": 0.0, "2gamma-1": -1.0}
DEFAULT_PROBES = {
    "d": [(13, 5, 80), (17, 3, 120), (3, 1, 30), (19, 7, 150)],
    "f": [(13, 5, 80), (17, 3, 120), (3, 1, 30), (19, 7, 150)],
}


def candidate_constants(k: int = 12) -> list[complex]:
    ik = 1j**k
    return [1.0 + 0j, 2 * np.pi + 0j, -2 * np.pi + 0j, 2 * np.pi * ik, -2 * np.pi * ik]


@lru_cache(maxsize=16)
def _coeffs(star: str, limit: int, k: int) -> CoeffSeq:
    # round the limit up so repeated calls share one sequence
    lim = 1 << max(10, math.ceil(math.log2(max(limit, 2))))
    return make_coeffs("divisor" if star == "d" else "hecke", lim, k)


def coeffs_for(star: str, limit: int, k: int = 12) -> CoeffSeq:
    return _coeffs(star, int(limit), k)


@lru_cache(maxsize=16)
def default_table(star: str, k: int = 12, window: Optional[SmoothWindow] = None) -> VoronoiTransform:
    return transform_table(window or default_voronoi_window(), star, k=k, extent=4.0)


def main_term_divisor(q: int, X: float, w: SmoothWindow, variant: str = "2gamma") -> float:
    """(X/q) int (log(X u / q^2) + 2 gamma [- 1]) w(u) du."""
    if q < 1:
        raise InvalidArgument(f"q must be >= 1, got {q}")
    shift = MAIN_VARIANTS[variant]
    c0 = math.log(X / q**2) + 2 * EULER_GAMMA + shift
    edges = subdivide(np.array(w.breakpoints()), w.r / 8)
    if w.a == 0:
        # log u is integrable but w kills it only inside the first ramp
        edges = np.unique(np.concatenate([edges, w.r * np.geomspace(1e-6, 1, 20)]))
    val, _ = integrate_doubling(
        lambda u: (c0 + np.log(np.where(u > 0, u, 1.0))) * window_eval(w, u), edges, 1e-12)
    return float(X / q * val)


def _check_pair(q: int, a: int):
    if q < 1:
        raise InvalidArgument(f"q must be >= 1, got {q}")
    if math.gcd(a, q) != 1:
        raise InvalidArgument(f"gcd(a, q) must be 1, got a={a}, q={q}")


@dataclass(frozen=True)
class DualSum:
    value: complex
    truncation_n: int
    tail_bound: float


def dual_sum_details(star: str, q: int, a: int, X: float, w: SmoothWindow,
                     table: VoronoiTransform, n_max: Optional[int] = None,
                     phase: str = "split", coeffs: Optional[CoeffSeq] = None) -> DualSum:
    """Dual sum with constant 1; n_max defaults to the certified tail."""
    _check_pair(q, a)
    if not table.matches(w, star, table.weight):
        raise InvalidArgument("transform table was built for a different window or star")
    if n_max is None:
        if not table.tail_reached:
            raise InvalidArgument("transform table did not reach its decay threshold")
        n_max = max(1, math.ceil(table.tail_threshold * q * q / X))
    if coeffs is None:
        coeffs = coeffs_for(star, 2 * n_max, table.weight)
    coeffs.check_length(n_max)
    n = np.arange(1, n_max + 1)
    lam = coeffs.values[1 : n_max + 1]
    abar = pow(a, -1, q) if q > 1 else 0
    y = n * (X / q**2)
    ph = np.exp(-2j * np.pi * ((abar * n) % q) / q)
    if star == "d":
        iy = table.evaluate(y, "Y")
        ik = table.evaluate(y, "K")
        if phase == "split":
            terms = lam * (ph * iy + np.conj(ph) * ik)
        elif phase == "combined":
            terms = lam * ph * (iy + ik)
        else:
            raise InvalidArgument(f"phase must be 'split' or 'combined', got {phase!r}")
    else:
        terms = lam * ph * table.evaluate(y)
    # tail estimate: the next block (n_max, 2 n_max] with tabulated values;
    # beyond that the transform is certified below the tail level
    nb = np.arange(n_max + 1, 2 * n_max + 1)
    cb = coeffs_for(star, 2 * n_max, table.weight)
    yb = nb * (X / q**2)
    mag = sum(np.abs(table.evaluate(yb, c)) for c in (("Y", "K") if star == "d" else ("J",)))
    tail = X / q * float(np.sum(np.abs(cb.values[nb]) * mag))
    return DualSum(complex(X / q * terms.sum()), int(n_max), float(tail))


def dual_sum(star: str, q: int, a: int, X: float, w: SmoothWindow,
             table: VoronoiTransform, n_max: Optional[int] = None, phase: str = "split") -> complex:
    return dual_sum_details(star, q, a, X, w, table, n_max, phase).value


def _lhs(star: str, q: int, a: int, X: int, w: SmoothWindow, k: int) -> complex:
    N = int(math.floor(w.b * X))
    return eval_direct(coeffs_for(star, N, k), w, X, Fraction(a % q, q))


@dataclass
class CalibrationResult:
    star: str
    constant: complex
    raw_fit: complex
    winner: Optional[complex]
    fit_residual: float
    main_variant: str
    phase: str
    variants: dict = field(default_factory=dict)
    table: Optional[VoronoiTransform] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        c = lambda z: None if z is None else [z.real, z.imag]
        return {"star": self.star, "constant": c(self.constant), "raw_fit": c(self.raw_fit),
                "winner": c(self.winner), "fit_residual": self.fit_residual,
                "main_variant": self.main_variant, "phase": self.phase,
                "variants": self.variants}


def _fit(lhs, main, dual):
    lhs, main, dual = map(np.asarray, (lhs, main, dual))
    den = float(np.sum(np.abs(dual) ** 2))
    if den < 1e-24 * (1 + float(np.sum(np.abs(lhs) ** 2))):
        raise CalibrationError("dual sums vanish at every probe; fit is ill-conditioned")
    c = complex(np.sum(np.conj(dual) * (lhs - main)) / den)
    res = float(np.sqrt(np.sum(np.abs(lhs - main - c * dual) ** 2)))
    return c, res


def calibrate_constant(star: str, probes: Optional[Sequence] = None,
                       w: Optional[SmoothWindow] = None, table: Optional[VoronoiTransform] = None,
                       k: int = 12, snap_tol: float = 1e-6) -> CalibrationResult:
    """Least-squares dual-sum constant over probes (q, a, X).

    For the divisor kind each main-term variant and both phase
    conventions are fitted; the best fit is adopted. The adopted constant
    snaps to a candidate when the fit is within ``snap_tol`` of it.
    """
    if star not in ("d", "f"):
        raise InvalidArgument(f"star must be 'd' or 'f', got {star!r}")
    probes = list(probes or DEFAULT_PROBES[star])
    if len(probes) < 3:
        raise InvalidArgument("calibration needs at least 3 probes")
    w = w or default_voronoi_window()
    table = table or (default_table(star, k) if w == default_voronoi_window() else
                      transform_table(w, star, k=k))
    lhs = [_lhs(star, q, a, X, w, k) for q, a, X in probes]
    variants = {}
    combos = ([(v, p) for v in MAIN_VARIANTS for p in ("split", "combined")]
              if star == "d" else [(None, "split")])
    for variant, phase in combos:
        main = [main_term_divisor(q, X, w, variant) if variant else 0.0 for q, _, X in probes]
        dual = [dual_sum(star, q, a, X, w, table, phase=phase) for q, a, X in probes]
        c, res = _fit(lhs, main, dual)
        variants[f"{variant or 'none'}/{phase}"] = {"constant": [c.real, c.imag], "fit_residual": res}
    best = min(variants, key=lambda key: variants[key]["fit_residual"])
    variant, phase = best.split("/")
    raw = complex(*variants[best]["constant"])
    cands = candidate_constants(k) if star == "f" else [1.0 + 0j]
    near = min(cands, key=lambda z: abs(z - raw))
    winner = near if abs(near - raw) <= snap_tol * max(1.0, abs(near)) else None
    const = winner if winner is not None else raw
    return CalibrationResult(star, const, raw, winner, variants[best]["fit_residual"],
                             variant, phase, variants, table.with_constant(const))


@dataclass
class VoronoiResidual:
    star: str
    q: int
    a: int
    X: int
    window: dict
    lhs: complex
    main_term: complex
    dual_sum: complex
    truncation_n: int
    residual: float
    constant_used: complex
    tail_bound: float = 0.0
    tolerance: float = 1e-6

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual < self.tolerance)

    def to_record(self) -> dict:
        c = lambda z: [complex(z).real, complex(z).imag]
        return {"star": self.star, "q": self.q, "a": self.a, "X": self.X,
                "lhs": c(self.lhs), "main": c(self.main_term), "dual": c(self.dual_sum),
                "constant": c(self.constant_used), "residual": self.residual,
                "truncation_n": self.truncation_n}

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)


def voronoi_residual(star: str, q: int, a: int, X: int, w: Optional[SmoothWindow] = None,
                     table: Optional[VoronoiTransform] = None, k: int = 12,
                     calibration: Optional[CalibrationResult] = None,
                     tol: float = 1e-6) -> VoronoiResidual:
    """|lhs - main - c * dual| for prime q."""
    if not is_prime(q):
        raise InvalidArgument(f"Voronoi check requires prime q, got {q}")
    _check_pair(q, a)
    w = w or default_voronoi_window()
    if calibration is None:
        if table is not None and table.calibrated:
            c, variant, phase = table.norm_constant, "2gamma", "split"
        else:
            calibration = calibrate_constant(star, w=w, table=table, k=k)
    if calibration is not None:
        c, table = calibration.constant, calibration.table
        variant = calibration.main_variant if star == "d" else None
        phase = calibration.phase
    lhs = _lhs(star, q, a, X, w, k)
    main = main_term_divisor(q, X, w, variant) if star == "d" else 0.0
    ds = dual_sum_details(star, q, a, X, w, table, phase=phase)
    # extend the truncation in 25% steps until the next block is negligible
    while abs(c) * ds.tail_bound >= 1e-10 * (1 + abs(lhs)):
        n_new = int(ds.truncation_n * 1.25) + 1
        if 2 * n_new * X / q**2 > table.ymax:
            break
        ds = dual_sum_details(star, q, a, X, w, table, n_max=n_new, phase=phase)
    res = abs(lhs - main - c * ds.value)
    return VoronoiResidual(star, q, a, X, w.descriptor(), lhs, main, ds.value, ds.truncation_n,
                           float(res), complex(c), ds.tail_bound, tol)


# ---------------------------------------------------------------- major arcs

def major_arc_window(X: float) -> SmoothWindow:
    """Window on [0, 1] whose ramps have width X^(-1/10)."""
    return make_window(0.0, 1.0, min(0.5, X ** -0.1))


@dataclass
class MajorArcReport:
    s: float
    X: int
    c: float
    moduli: list
    total: float
    ratio: float
    per_q: list
    e_truncation: int
    window: dict

    def to_dict(self) -> dict:
        return asdict(self)


def major_arc_profile(s: float, X: int, c: float, w: Optional[SmoothWindow] = None,
                      nbeta: int = 16, e_truncation: Optional[int] = None,
                      op_budget: float = 5e9) -> MajorArcReport:
    """sum_{q in (cR, 2cR]} sum'_a int_{|b| <= c/X} |S~(a/q + b)|^s db, R = sqrt(X).

    Also reports, per q, the error functional E(q, a; b) of the dual sum
    truncated at n <= X^(1/9), compared with phi(q) q^(2s) q/phi(q).
    """
    if not 0 < s < 1:
        raise InvalidArgument(f"s must lie in (0, 1), got {s}")
    if not 0 < c <= 0.25:
        raise InvalidArgument(f"c must lie in (0, 1/4], got {c}")
    if c * math.sqrt(X) < 2:
        raise InvalidArgument(f"c sqrt(X) = {c * math.sqrt(X):.3g} must be >= 2")
    w = w or major_arc_window(X)
    lo = math.floor(c * math.sqrt(X)) + 1
    hi = math.floor(2 * c * math.sqrt(X))
    moduli = list(range(lo, hi + 1))
    nfrac = sum(totient(q) for q in moduli)
    N = int(math.floor(w.b * X))
    if nfrac * nbeta * N > op_budget:
        raise ResourceLimitError(
            f"major-arc profile needs {nfrac * nbeta * N:.3g} operations, budget {op_budget:.3g}")
    xg, wg = gauss_legendre(nbeta)
    betas = xg * c / X
    bw = wg * c / X
    coeffs = coeffs_for("d", N)
    nE = e_truncation if e_truncation is not None else max(1, int(math.floor(X ** (1 / 9))))
    dE = coeffs_for("d", nE).values[1 : nE + 1]
    total = 0.0
    per_q = []
    for q in moduli:
        avec = [a for a in range(1, q) if math.gcd(a, q) == 1]
        alphas = [a / q + b for a in avec for b in betas]
        S = eval_direct(coeffs, w, X, alphas).reshape(len(avec), nbeta)
        mass = np.abs(S) ** s @ bw
        total += float(mass.sum())
        main = main_term_divisor(q, X, w)
        s0 = np.abs(eval_direct(coeffs, w, X, [Fraction(a, q) for a in avec])) ** s
        # E(q, a; b) with the modulated window w(u) e(u X b)
        nn = np.arange(1, nE + 1)
        z = np.sqrt(nn * X / q**2)
        esum = np.zeros(nbeta)
        for j, b in enumerate(betas):
            fb = X * b
            tr = hankel_batch(w, "d", z, modulation=lambda u, fb=fb: np.exp(2j * np.pi * u * fb),
                              mod_freq=fb)
            for a in avec:
                abar = pow(a, -1, q)
                ph = np.exp(-2j * np.pi * ((abar * nn) % q) / q)
                E = abs(X * np.sum(dE * (ph * tr["Y"] + np.conj(ph) * tr["K"])))
                esum[j] += E**s
        phi_q = totient(q)
        per_q.append({
            "q": q, "phi": phi_q, "mass": float(mass.sum()),
            "beta0_sum": float(s0.sum()), "beta0_main_bound": float(phi_q * abs(main) ** s),
            "main": main, "E_moment_max": float(esum.max()),
            "E_bound": float(phi_q * q ** (2 * s) * q / phi_q),
        })
    return MajorArcReport(s, int(X), c, moduli, total, total / X ** (s / 2), per_q, nE,
                          w.descriptor())
