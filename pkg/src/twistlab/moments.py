"""L^s moments of exponential sums, ladders, the functional-equation check
and the empirical distribution of |S_f| / sqrt(X)."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .analysis.quadrature import gauss_legendre
from .analysis.transforms import VoronoiTransform, transform_table
from .analysis.windows import SmoothWindow, default_afe_window, window_eval
from .arith import CoeffSeq, make_coeffs, star_of, totient
from .errors import InvalidArgument, NumericError, ResourceLimitError
from .expsum import weighted_coeffs

M_MIN = 1 << 12
M_CAP = 1 << 26


def _pow2_at_least(n: int) -> int:
    return 1 << max(0, int(math.ceil(math.log2(max(n, 1)))))


def _fold(pos: np.ndarray, M: int, neg: Optional[np.ndarray] = None) -> np.ndarray:
    """Fold coefficients at frequencies n (and -n for ``neg``) onto Z/MZ."""
    n = np.arange(pos.size)
    f = np.bincount(n % M, weights=pos, minlength=M)
    if neg is not None:
        f += np.bincount((-np.arange(neg.size)) % M, weights=neg, minlength=M)
    return f


def half_grid_abs(folded: np.ndarray) -> np.ndarray:
    """|S(j/M)| for j = 0..M/2 from real folded coefficients."""
    return np.abs(np.fft.rfft(folded))


def half_grid_weights(M: int) -> np.ndarray:
    """Weights on j = 0..M/2 reproducing the full uniform average."""
    w = np.full(M // 2 + 1, 2.0 / M)
    w[0] = w[-1] = 1.0 / M
    return w


@dataclass
class MomentReport:
    kind: str
    s: float
    X: float
    M: int
    raw: float
    normalized: float
    error_estimate: float
    window: Optional[dict] = None
    converged: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def _grid_moment(pos, neg, s, tol, M0, cap):
    """Doubling M from M0 until the relative change in the moment is < tol."""
    M = M0
    prev = None
    err = math.inf
    while M <= cap:
        a = half_grid_abs(_fold(pos, M, neg))
        cur = float(np.dot(half_grid_weights(M), a**s))
        if prev is not None:
            err = abs(cur - prev)
            if err <= tol * abs(cur):
                return cur, M, err
        prev = cur
        M *= 2
    raise NumericError(f"moment did not converge to {tol:g} by M={cap}",
                       best=prev, achieved=err / abs(prev) if prev else err)


def moment(coeffs: CoeffSeq, window: Optional[SmoothWindow], X: int, s: float,
           tol: float = 1e-8, cap: int = M_CAP) -> MomentReport:
    """int_0^1 |S(alpha; X)|^s d alpha on doubling uniform grids."""
    if s <= 0:
        raise InvalidArgument(f"s must be positive, got {s}")
    c = weighted_coeffs(coeffs, window, X)
    M0 = max(M_MIN, _pow2_at_least(4 * (c.size - 1)))
    raw, M, err = _grid_moment(c, None, s, tol, M0, cap)
    return MomentReport(coeffs.kind, s, X, M, raw, raw / X ** (s / 2), err,
                        None if window is None else window.descriptor())


def grid_moments(coeffs: CoeffSeq, X: int, s_values: Sequence[float],
                 window: Optional[SmoothWindow] = None, M: Optional[int] = None) -> dict:
    """Normalized moments for several s from one shared grid."""
    c = weighted_coeffs(coeffs, window, X)
    M = M or max(M_MIN, _pow2_at_least(16 * (c.size - 1)))
    a = half_grid_abs(_fold(c, M)) / math.sqrt(X)
    w = half_grid_weights(M)
    return {float(s): float(np.dot(w, a**s)) for s in s_values}


# ---------------------------------------------------------------- transformed sums

def _transformed_coeffs(table: VoronoiTransform, coeffs: CoeffSeq, X1: float, t: float,
                        phase: str = "split", with_main: bool = False):
    Y = X1 * t * t
    ycut = table.tail_threshold if table.tail_reached else table.ymax
    nmax = int(math.floor(ycut * Y))
    if nmax > coeffs.limit:
        raise ResourceLimitError(
            f"transformed sum needs coefficients up to {nmax}, have {coeffs.limit}")
    n = np.arange(nmax + 1)
    lam = coeffs.values[: nmax + 1].copy()
    lam[0] = 0.0
    y = np.maximum(n, 1) / Y
    if table.star == "d":
        iy, ik = table.evaluate(y, "Y"), table.evaluate(y, "K")
        if phase == "split":
            pos, neg = lam * iy, lam * ik
        elif phase == "combined":
            pos, neg = lam * (iy + ik), None
        else:
            raise InvalidArgument(f"phase must be 'split' or 'combined', got {phase!r}")
    else:
        pos, neg = lam * table.evaluate(y), None
    if with_main:
        if table.star != "d":
            raise InvalidArgument("only the divisor kind has a main term")
        from .voronoi import main_term_divisor
        # (1/q) int (log(x/q^2) + 2 gamma) w(x/X') dx with q = tQ, in units of sqrt(X')
        pos = pos.copy()
        pos[0] = main_term_divisor(1, 1.0 / Y, table.window) * Y
    return pos, neg


def transformed_moment(table: VoronoiTransform, coeffs: CoeffSeq, X1: float, t: float,
                       s: float, tol: float = 1e-8, phase: str = "split",
                       with_main: bool = False, cap: int = M_CAP) -> MomentReport:
    """int_0^1 |c/(t sqrt X1) sum_n lambda(n) e(n alpha) I(n/(X1 t^2))|^s d alpha.

    c is the table's calibrated constant; only |c| matters. The divisor
    kernel's K0 part sits at negative frequencies unless phase='combined'.
    """
    if not 1.0 <= t <= 2.0:
        raise InvalidArgument(f"t must lie in [1, 2], got {t}")
    pos, neg = _transformed_coeffs(table, coeffs, X1, t, phase, with_main)
    scale = abs(table.norm_constant) / (t * math.sqrt(X1))
    pos = pos * scale
    neg = None if neg is None else neg * scale
    # effective length: where the l2 tail of the coefficients becomes negligible
    mass = pos**2 if neg is None else pos**2 + neg**2
    cum = np.cumsum(mass[::-1])[::-1]
    neff = int(np.searchsorted(-cum, -(tol**2) * cum[0], side="left"))
    M0 = max(M_MIN, _pow2_at_least(4 * max(neff, 1)))
    raw, M, err = _grid_moment(pos, neg, s, tol, M0, cap)
    return MomentReport(coeffs.kind, s, X1 * t * t, M, raw, raw, err,
                        table.window.descriptor())


def transformed_plancherel(table: VoronoiTransform, coeffs: CoeffSeq, X1: float, t: float,
                           phase: str = "split") -> float:
    """s = 2 transformed moment straight from the coefficients."""
    pos, neg = _transformed_coeffs(table, coeffs, X1, t, phase)
    scale2 = abs(table.norm_constant) ** 2 / (t * t * X1)
    tot = float(np.sum(pos**2))
    if neg is not None:
        tot += float(np.sum(neg**2))
    return tot * scale2


def rational_average(coeffs: CoeffSeq, window: Optional[SmoothWindow], X: int, Q: float,
                     s: float, weighted: bool = True) -> float:
    """(1/L) sum_{Q<q<=2Q} sum'_a |X^-1/2 S(a/q)|^s, L = sum phi(q), via size-q FFTs."""
    c = weighted_coeffs(coeffs, window, X)
    n = np.arange(c.size)
    lo, hi = int(math.floor(Q)) + 1, int(math.floor(2 * Q))
    tot, L = 0.0, 0
    for q in range(lo, hi + 1):
        f = np.bincount(n % q, weights=c, minlength=q)
        S = np.fft.fft(f)  # S[j] = sum c_n e(-n j / q); |.| is symmetric in j -> -j
        a = np.arange(q)
        cop = np.gcd(a, q) == 1
        tot += float(np.sum(np.abs(S[cop] / math.sqrt(X)) ** s))
        L += int(cop.sum())
    return tot / L


# ---------------------------------------------------------------- functional equation

_RHS_CACHE: dict = {}


@dataclass
class AFEReport:
    star: str
    s: float
    X: int
    X_prime: int
    X1: float
    lhs: float
    rhs: float
    diff: float
    rel_diff: float
    nodes: int
    diagnostics: dict = field(default_factory=dict)
    s2_crosscheck: Optional[dict] = None

    def to_dict(self) -> dict:
        return asdict(self)


def afe_table(star: str, window: Optional[SmoothWindow] = None, k: int = 12) -> VoronoiTransform:
    """Transform table for the functional equation with the calibrated constant."""
    from .voronoi import candidate_constants

    window = window or default_afe_window()
    key = ("table", star, window, k)
    if key not in _RHS_CACHE:
        tab = transform_table(window, star, k=k)
        # constants established by the Voronoi calibration: 1 for d, 2 pi i^k for f
        const = 1.0 if star == "d" else candidate_constants(k)[3]
        _RHS_CACHE[key] = tab.with_constant(const)
    return _RHS_CACHE[key]


def afe_rhs(star: str, s: float, X1: float, tol: float = 1e-8, nodes: int = 16,
            window: Optional[SmoothWindow] = None, k: int = 12, phase: str = "split",
            with_main: bool = False, plancherel: bool = False) -> float:
    """(2/3) int_1^2 t * transformed_moment(t) dt with Gauss-Legendre in t."""
    window = window or default_afe_window()
    key = ("rhs", star, s, X1, tol, nodes, window, k, phase, with_main, plancherel)
    if key in _RHS_CACHE:
        return _RHS_CACHE[key]
    table = afe_table(star, window, k)
    ycut = table.tail_threshold if table.tail_reached else table.ymax
    coeffs = make_coeffs("divisor" if star == "d" else "hecke",
                         int(math.floor(ycut * X1 * 4)) + 1, k)
    x, w = gauss_legendre(nodes)
    ts, ws = 1.5 + x / 2, w / 2
    tot = 0.0
    for t, wt in zip(ts, ws):
        if plancherel:
            val = transformed_plancherel(table, coeffs, X1, t, phase)
        else:
            val = transformed_moment(table, coeffs, X1, t, s, tol, phase, with_main).raw
        tot += wt * t * val
    val = float(2.0 / 3.0 * tot)
    _RHS_CACHE[key] = val
    return val


def afe_check(star: str, s: float, X: int, X_prime: Optional[int] = None, X1: float = 16,
              tol: float = 1e-8, nodes: int = 16, window: Optional[SmoothWindow] = None,
              k: int = 12, diagnostics: bool = True) -> AFEReport:
    """Normalized moment of the sharp sum at X' against the transformed-side integral."""
    star = star_of(star)
    Xp = X if X_prime is None else X_prime
    if not X / 2 <= Xp <= 2 * X:
        raise InvalidArgument(f"X'={Xp} must lie in [X/2, 2X]")
    if X1 < 4:
        raise InvalidArgument(f"X1 must be >= 4, got {X1}")
    window = window or default_afe_window()
    coeffs = make_coeffs("divisor" if star == "d" else "hecke", int(Xp), k)
    lhs = moment(coeffs, None, Xp, s, tol).normalized
    rhs = afe_rhs(star, s, X1, tol, nodes, window, k)
    diff = lhs - rhs
    diag = {}
    if diagnostics:
        Q = math.sqrt(Xp * X1)
        diag["lhs_smoothed"] = moment(coeffs, window, Xp, s, tol).normalized
        diag["rational_average_smoothed"] = rational_average(coeffs, window, Xp, Q, s)
        diag["rational_average_sharp"] = rational_average(coeffs, None, Xp, Q, s)
        if star == "d":
            diag["rhs_combined_phase"] = afe_rhs(star, s, X1, tol, nodes, window, k, "combined")
            diag["rhs_with_main"] = afe_rhs(star, s, X1, tol, nodes, window, k, with_main=True)
    cross = None
    if s == 2:
        cross = {
            "lhs_grid": lhs,
            "lhs_plancherel": float(np.sum(coeffs.values[1 : Xp + 1] ** 2)) / Xp,
            "rhs_grid": rhs,
            "rhs_plancherel": afe_rhs(star, 2.0, X1, tol, nodes, window, k, plancherel=True),
        }
    return AFEReport(star, s, int(X), int(Xp), X1, lhs, rhs, diff, abs(diff) / abs(lhs),
                     nodes, diag, cross)


# ---------------------------------------------------------------- ladders

@dataclass
class LadderReport:
    star: str
    s: float
    X_values: list
    normalized: list
    differences: list
    decay_exponent: Optional[float]
    fit_residual: Optional[float]
    c_f: Optional[list] = None

    def to_dict(self) -> dict:
        return asdict(self)

    def csv(self) -> str:
        rows = ["X,normalized,difference"]
        for i, (X, m) in enumerate(zip(self.X_values, self.normalized)):
            d = self.differences[i - 1] if i else ""
            rows.append(f"{X},{float(m)!r},{float(d)!r}" if i else f"{X},{float(m)!r},")
        return "\n".join(rows) + "\n"


def ladder_values(X_start: int, X_end: int, factor: float) -> list[int]:
    if not 1 < factor <= 4:
        raise InvalidArgument(f"factor must lie in (1, 4], got {factor}")
    if X_start < 1 or X_end < X_start:
        raise InvalidArgument("need 1 <= X_start <= X_end")
    out, x = [], float(X_start)
    while round(x) <= X_end:
        if not out or round(x) != out[-1]:
            out.append(int(round(x)))
        x *= factor
    return out


def ladder(star: str, s: float, X_start: int, X_end: int, factor: float = 2.0,
           coeffs: Optional[CoeffSeq] = None, tol: float = 1e-8, k: int = 12) -> LadderReport:
    star = star_of(star)
    Xs = ladder_values(X_start, X_end, factor)
    if coeffs is None:
        coeffs = make_coeffs({"d": "divisor", "f": "hecke"}.get(star, star), Xs[-1], k)
    coeffs.check_length(Xs[-1])
    m = [moment(coeffs, None, X, s, tol).normalized for X in Xs]
    diffs = [m[i + 1] - m[i] for i in range(len(m) - 1)]
    expo = res = None
    nz = [(X, abs(d)) for X, d in zip(Xs, diffs) if d != 0]
    if len(nz) >= 2:
        lx = np.log([x for x, _ in nz])
        ly = np.log([d for _, d in nz])
        A = np.vstack([lx, np.ones_like(lx)]).T
        coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
        expo = float(-coef[0])
        res = float(np.sqrt(np.mean((A @ coef - ly) ** 2)))
    cf = None
    if star == "f" and s == 2:
        cf = [float(np.sum(coeffs.values[1 : X + 1] ** 2)) / X for X in Xs]
    return LadderReport(star, s, Xs, m, diffs, expo, res, cf)


# ---------------------------------------------------------------- distribution

@dataclass
class DistributionReport:
    X: int
    M: int
    edges: list
    masses: list
    quantiles: dict
    moments: list
    second_moment_plancherel: float
    samples: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("samples")
        return d

    def csv(self) -> str:
        rows = ["left,right,mass"]
        for l, r, m in zip(self.edges[:-1], self.edges[1:], self.masses):
            rows.append(f"{float(l)!r},{float(r)!r},{float(m)!r}")
        return "\n".join(rows) + "\n"


QUANTILE_LEVELS = (0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99)


def distribution(X: int, M: Optional[int] = None, bins: int = 64,
                 coeffs: Optional[CoeffSeq] = None, k: int = 12) -> DistributionReport:
    """Histogram, quantiles and moments of X^-1/2 |S_f(j/M)| over the full grid."""
    if coeffs is None:
        coeffs = make_coeffs("hecke", X, k)
    if coeffs.kind != "hecke":
        raise InvalidArgument("distribution is defined for the cusp-form kind")
    M = M or _pow2_at_least(8 * X)
    if M < 8 * X or M & (M - 1):
        raise InvalidArgument(f"grid size must be a power of two >= 8X, got {M}")
    if bins < 1:
        raise InvalidArgument("bins must be >= 1")
    c = weighted_coeffs(coeffs, None, X)
    v = np.abs(np.fft.fft(_fold(c, M))) / math.sqrt(X)
    top = float(v.max()) * (1 + 1e-12)
    edges = np.linspace(0.0, top, bins + 1)
    counts, _ = np.histogram(v, edges)
    masses = counts / M
    srt = np.sort(v)
    quant = {str(p): float(np.quantile(srt, p)) for p in QUANTILE_LEVELS}
    moms = [float(np.mean(v**j)) for j in range(1, 5)]
    plan = float(np.sum(c**2)) / X
    return DistributionReport(int(X), int(M), edges.tolist(), masses.tolist(), quant, moms,
                              plan, srt)


def ks_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|."""
    a, b = np.sort(np.asarray(a)), np.sort(np.asarray(b))
    pts = np.concatenate([a, b])
    Fa = np.searchsorted(a, pts, side="right") / a.size
    Fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(Fa - Fb)))
