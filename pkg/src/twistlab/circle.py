"""Smoothed Farey dissection: chi~, its L2 defect, and averaging checks.

chi~(alpha) = 1/(phi^(0) Delta L) sum_{q in Q} sum'_{a mod q} phi((alpha - a/q)/Delta)

with Delta = H/Q^2 and L = sum phi(q). Its Fourier coefficient at l is
phi^(Delta l)/(phi^(0) L) * sum_q c_q(l), and sum_q c_q(l) = sum_{d|l} d M_d
with M_d = sum_{d q1 in Q} mu(q1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional

import numpy as np

from .analysis.transforms import FourierTable, envelope_cutoff, fourier_table
from .analysis.windows import SmoothWindow, default_bump, window_eval
from .arith import CoeffSeq, divisors, mobius, ramanujan_sum, totient
from .errors import InvalidArgument, NumericError, ResourceLimitError


@lru_cache(maxsize=8)
def _cutoff(phi: SmoothWindow, rel: float) -> float:
    return envelope_cutoff(phi, rel)


@lru_cache(maxsize=8)
def _ftable(phi: SmoothWindow, tmax: float) -> FourierTable:
    return fourier_table(phi, tmax)


@dataclass(frozen=True)
class FareySystem:
    Q: int
    H: float
    delta: Fraction
    moduli: tuple
    phi: SmoothWindow
    L: int
    fourier_truncation: int
    phi0: float
    fractions: np.ndarray = field(repr=False)
    fourier: FourierTable = field(repr=False)

    @property
    def delta_float(self) -> float:
        return float(self.delta)

    def chi_bound(self) -> float:
        """Pointwise bound 4 (1 + Delta Q^2) max(phi) / (phi^(0) L Delta)."""
        d = self.delta_float
        return 4 * (1 + d * self.Q**2) / (self.phi0 * self.L * d)

    def descriptor(self) -> dict:
        return {"Q": self.Q, "H": self.H, "Delta": self.delta_float, "L": self.L,
                "num_moduli": len(self.moduli), "l_max": self.fourier_truncation}


def build_farey_system(Q: int, H: float, phi: Optional[SmoothWindow] = None,
                       moduli: Optional[Iterable[int]] = None, rel: float = 1e-14) -> FareySystem:
    """Farey system on the moduli (default (Q, 2Q]) with Delta = H/Q^2."""
    if moduli is None:
        if Q < 4:
            raise InvalidArgument(f"Q must be >= 4, got {Q}")
        moduli = range(Q + 1, 2 * Q + 1)
    moduli = tuple(sorted(set(int(q) for q in moduli)))
    if not moduli or moduli[0] < 1:
        raise InvalidArgument("moduli must be positive integers")
    if H < 1:
        raise InvalidArgument(f"H must be >= 1, got {H}")
    if H > Q * Q:
        raise InvalidArgument(f"H={H} exceeds Q^2={Q * Q}: arcs would cover the circle")
    phi = phi or default_bump()
    if phi.a != 1.0 or phi.b != 2.0:
        raise InvalidArgument("the bump must be supported on [1, 2]")
    delta = Fraction(H) / (Q * Q)
    L = sum(totient(q) for q in moduli)
    tstar = _cutoff(phi, rel)
    lmax = int(math.ceil(tstar / float(delta)))
    fr = []
    for q in moduli:
        a = np.arange(q)
        a = a[np.gcd(a, q) == 1]
        fr.append(a / q)
    fractions = np.sort(np.concatenate(fr))
    ft = _ftable(phi, float(tstar) + 2.0)
    return FareySystem(int(Q), H, delta, moduli, phi, int(L), lmax, ft.phi0, fractions, ft)


def chi_tilde_eval(sys: FareySystem, alpha):
    """chi~ at alpha (scalar or array, 1-periodic), via binary search on the fractions."""
    alpha = np.asarray(alpha, dtype=np.float64)
    scalar = alpha.ndim == 0
    al = np.atleast_1d(alpha) % 1.0
    d = sys.delta_float
    F = np.concatenate([sys.fractions - 2, sys.fractions - 1, sys.fractions])
    lo = np.searchsorted(F, al - 2 * d, side="left")
    hi = np.searchsorted(F, al - d, side="right")
    cnt = hi - lo
    tot = np.zeros(al.shape)
    for j in range(int(cnt.max()) if cnt.size else 0):
        m = cnt > j
        idx = lo[m] + j
        tot[m] += window_eval(sys.phi, (al[m] - F[idx]) / d)
    out = tot / (sys.phi0 * d * sys.L)
    return out[0] if scalar else out


def ramanujan_totals(moduli: Iterable[int], lmax: int) -> np.ndarray:
    """A[l] = sum_{q in moduli} c_q(l) for l = 0..lmax, via sum_{d|l} d M_d."""
    moduli = list(moduli)
    M: dict[int, int] = {}
    for q in moduli:
        for d in divisors(q):
            M[d] = M.get(d, 0) + mobius(q // d)
    A = np.zeros(lmax + 1, dtype=np.int64)
    for d, m in M.items():
        if m:
            A[d::d] += d * m
    A[0] = sum(totient(q) for q in moduli)
    return A


@dataclass
class DefectReport:
    Q: int
    H: float
    L: int
    defect: float
    bound: float
    l_max: int

    @property
    def ratio(self) -> float:
        return self.defect / self.bound

    def csv_row(self) -> str:
        return f"{self.Q},{self.H},{self.L},{float(self.defect)!r},{float(self.bound)!r},{float(self.ratio)!r}"


DEFECT_CSV_HEADER = "Q,H,L,defect,bound,ratio"


def defect_bound(Q: int, H: float, L: int) -> float:
    """Q^4/(H L^2) + Q^2 (log Q)^2 / L^2."""
    return Q**4 / (H * L**2) + Q**2 * math.log(Q) ** 2 / L**2


def chi_l2_defect(sys: FareySystem, chunk: int = 1 << 20) -> DefectReport:
    """int_0^1 |chi~ - 1|^2 from the Fourier series, truncated at l_max."""
    lmax = sys.fourier_truncation
    A = ramanujan_totals(sys.moduli, lmax).astype(np.float64)
    d = sys.delta_float
    total = 0.0
    for s in range(1, lmax + 1, chunk):
        l = np.arange(s, min(lmax, s + chunk - 1) + 1)
        ph = np.abs(sys.fourier(d * l)) ** 2
        total += float(np.sum(ph * A[l] ** 2))
    defect = 2 * total / (sys.phi0**2 * sys.L**2)
    return DefectReport(sys.Q, sys.H, sys.L, defect, defect_bound(sys.Q, sys.H, sys.L), lmax)


def chi_quadrature(sys: FareySystem, tol: float = 1e-9, start: int = 1 << 12,
                   cap: int = 1 << 24):
    """(mass, defect) from uniform grids, doubling until both settle.

    chi~ is smooth and periodic, so the rectangle rule converges fast once
    the grid resolves the bump width Delta.
    """
    N = max(start, 1 << int(math.ceil(math.log2(64 / sys.delta_float))))
    prev = None
    while N <= cap:
        al = np.arange(N) / N
        chi = chi_tilde_eval(sys, al)
        cur = (float(chi.mean()), float(np.mean((chi - 1) ** 2)))
        if prev is not None and abs(cur[0] - prev[0]) < tol and abs(cur[1] - prev[1]) < tol:
            return cur
        prev = cur
        N *= 2
    raise NumericError("chi~ quadrature did not settle", best=prev)


# ---------------------------------------------------------------- averaging checks

@dataclass
class CoprimeAverage:
    Y: int
    q: int
    s: float
    average: float
    integral: float
    diff: float
    predicted_scale: float


def coprime_average_vs_integral(coeffs: CoeffSeq, Y: int, q: int, s: float,
                                weight: Optional[np.ndarray] = None,
                                tol: float = 1e-12, op_budget: float = 2e8) -> CoprimeAverage:
    """(1/phi(q)) sum'_a |Y^-1/2 sum_{n<=Y} a(n) e(an/q)|^s against its integral over [0, 1]."""
    from .moments import moment

    if Y < 1:
        raise InvalidArgument(f"Y must be >= 1, got {Y}")
    if s <= 0:
        raise InvalidArgument(f"s must be positive, got {s}")
    if weight is None and not 0 < s < 2:
        raise InvalidArgument("the plain bound needs 0 < s < 2")
    if q * Y > op_budget:
        raise ResourceLimitError(f"coprime average needs {q * Y:.3g} operations, budget {op_budget:.3g}")
    coeffs.check_length(Y)
    c = coeffs.values[1 : Y + 1].astype(np.float64)
    if weight is not None:
        c = c * np.asarray(weight, dtype=np.float64)[:Y]
    a = np.arange(1, q, dtype=np.int64)
    a = a[np.gcd(a, q) == 1]
    S = np.zeros(a.shape, dtype=complex)
    for n in range(1, Y + 1):
        S += c[n - 1] * np.exp(2j * np.pi * ((a * n) % q) / q)
    avg = float(np.mean(np.abs(S / math.sqrt(Y)) ** s))
    wcoef = np.zeros(Y + 1)
    wcoef[1:] = c
    seq = CoeffSeq("weighted", Y, wcoef)
    integral = moment(seq, None, Y, s, tol=tol).normalized
    return CoprimeAverage(Y, q, s, avg, integral, avg - integral, float(Y) ** -s)


def maximal_large_sieve_check(a, freqs, eta: Optional[float] = None) -> float:
    """sum_r sup_J |sum_{n in J} a(n) e(n alpha_r)|^2 / ((1/eta + N) sum |a|^2)."""
    a = np.asarray(a, dtype=complex)
    N = a.size
    if N > 256:
        raise InvalidArgument(f"brute force supports N <= 256, got {N}")
    freqs = np.asarray(freqs, dtype=np.float64) % 1.0
    R = freqs.size
    if R >= 2:
        f = np.sort(freqs)
        gaps = np.diff(np.concatenate([f, [f[0] + 1.0]]))
        sep = float(gaps.min())
    else:
        sep = 1.0
    if eta is None:
        eta = sep
    if eta <= 0 or sep < eta * (1 - 1e-12):
        raise InvalidArgument(f"frequencies are {sep:.3g}-separated, fewer than eta={eta:.3g}")
    n = np.arange(1, N + 1)
    lhs = 0.0
    for al in freqs:
        P = np.concatenate([[0], np.cumsum(a * np.exp(2j * np.pi * n * al))])
        lhs += float(np.max(np.abs(P[None, :] - P[:, None]) ** 2))
    return lhs / ((1 / eta + N) * float(np.sum(np.abs(a) ** 2)))
