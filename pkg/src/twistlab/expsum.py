"""Evaluation of S(alpha; X) = sum_{n <= X} lambda(n) w(n/X) e(n alpha)."""
from __future__ import annotations

import struct
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .analysis.windows import SmoothWindow, window_eval
from .arith import CoeffSeq
from .errors import DataCorruptionError, InvalidArgument

BLOCK = 1024
GRID_MAGIC = b"TWGRID01"


def weighted_coeffs(coeffs: CoeffSeq, window: Optional[SmoothWindow], X: int) -> np.ndarray:
    """c[n] = lambda(n) w(n/X) for n = 0..N (c[0] = 0)."""
    if X < 1:
        raise InvalidArgument(f"X must be >= 1, got {X}")
    if window is None:
        N = int(X)
    else:
        N = int(np.floor(window.b * X))
    coeffs.check_length(N)
    c = coeffs.values[: N + 1].astype(np.float64).copy()
    c[0] = 0.0
    if window is not None:
        n = np.arange(N + 1, dtype=np.float64)
        c *= window_eval(window, n / X)
    return c


def pairwise_sum(terms: np.ndarray) -> np.ndarray:
    """Sum over the last axis in fixed blocks of 1024, then a fixed binary tree."""
    terms = np.asarray(terms)
    n = terms.shape[-1]
    nb = max(1, -(-n // BLOCK))
    pad = nb * BLOCK - n
    if pad:
        terms = np.concatenate([terms, np.zeros(terms.shape[:-1] + (pad,), terms.dtype)], axis=-1)
    parts = terms.reshape(terms.shape[:-1] + (nb, BLOCK)).sum(axis=-1)
    while parts.shape[-1] > 1:
        if parts.shape[-1] % 2:
            parts = np.concatenate([parts, np.zeros(parts.shape[:-1] + (1,), parts.dtype)], axis=-1)
        parts = parts[..., 0::2] + parts[..., 1::2]
    return parts[..., 0]


def _unit_phases(n: np.ndarray, alpha) -> np.ndarray:
    """e(n alpha) for a vector of alphas (rows) and integers n (columns)."""
    if all(isinstance(a, Fraction) for a in alpha):
        rows = []
        for a in alpha:
            p, q = a.numerator, a.denominator
            frac = (n.astype(object) * p % q).astype(np.float64) / q if q > 2**31 \
                else (n * p % q) / q
            rows.append(np.exp(2j * np.pi * frac))
        return np.array(rows)
    al = np.array([float(a) for a in alpha])
    ph = np.outer(al, n.astype(np.float64))
    ph -= np.floor(ph)
    return np.exp(2j * np.pi * ph)


def parse_alpha(text) -> Fraction | float:
    """'a/b' parses to an exact Fraction, anything else to a float."""
    if isinstance(text, (Fraction, float, int)):
        return text if not isinstance(text, int) else Fraction(text)
    s = str(text).strip()
    if "/" in s:
        try:
            return Fraction(s)
        except (ValueError, ZeroDivisionError) as e:
            raise InvalidArgument(f"bad rational alpha {s!r}") from e
    try:
        return float(s)
    except ValueError as e:
        raise InvalidArgument(f"bad alpha {s!r}") from e


def eval_direct(coeffs: CoeffSeq, window: Optional[SmoothWindow], X: int, alpha,
                workers: int = 1):
    """Direct evaluation at one alpha or an array of alphas."""
    c = weighted_coeffs(coeffs, window, X)
    n = np.arange(1, c.size)
    c = c[1:]
    scalar = np.ndim(alpha) == 0 and not isinstance(alpha, (list, tuple))
    alphas = [alpha] if scalar else list(alpha)
    rows = max(1, 4_000_000 // max(1, n.size))
    chunks = [alphas[i : i + rows] for i in range(0, len(alphas), rows)]

    def job(ch):
        return pairwise_sum(_unit_phases(n, ch) * c[None, :])

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(job, chunks))
    else:
        parts = [job(ch) for ch in chunks]
    out = np.concatenate(parts) if parts else np.zeros(0, complex)
    return complex(out[0]) if scalar else out


@dataclass(frozen=True)
class GridEvaluation:
    M: int
    X: int
    values: np.ndarray = field(repr=False)
    coeffs: dict = field(default_factory=dict)
    window: Optional[dict] = None

    @property
    def alphas(self) -> np.ndarray:
        return np.arange(self.M) / self.M


def _check_pow2(M: int):
    if M < 1 or M & (M - 1):
        raise InvalidArgument(f"grid size must be a power of two, got {M}")


def grid_values(c: np.ndarray, M: int) -> np.ndarray:
    """S(j/M) = sum_n c[n] e(n j/M) for j < M via one inverse FFT.

    c may carry negative frequencies via the optional ``neg`` folding in
    the callers; here index n of c is frequency n.
    """
    folded = np.bincount(np.arange(c.size) % M, weights=c.real, minlength=M)
    if np.iscomplexobj(c):
        folded = folded + 1j * np.bincount(np.arange(c.size) % M, weights=c.imag, minlength=M)
    return M * np.fft.ifft(folded)


def eval_grid(coeffs: CoeffSeq, window: Optional[SmoothWindow], X: int, M: int) -> GridEvaluation:
    _check_pow2(M)
    c = weighted_coeffs(coeffs, window, X)
    if M < 2 * (c.size - 1):
        warnings.warn(f"grid size M={M} is below twice the sum length {c.size - 1}",
                      stacklevel=2)
    vals = grid_values(c, M)
    return GridEvaluation(M, int(X), vals, coeffs.descriptor(),
                          None if window is None else window.descriptor())


@dataclass(frozen=True)
class SupNormReport:
    value: float
    alpha: float
    grid_max: float
    M: int
    certified_upper: float
    peaks: tuple = ()

    def __float__(self):
        return self.value


def _golden_max(f, lo, hi, tol):
    g = (np.sqrt(5) - 1) / 2
    a, b = lo, hi
    x1, x2 = b - g * (b - a), a + g * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + g * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - g * (b - a)
            f1 = f(x1)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def sup_norm(coeffs: CoeffSeq, X: int, refine: float = 1e-9,
             window: Optional[SmoothWindow] = None, peaks: int = 8) -> SupNormReport:
    """max |S(alpha)| from a 32X-point grid plus golden-section refinement.

    ``certified_upper`` adds the worst-case gap pi X sum|c|/M implied by
    |S'| <= 2 pi X sum|c|.
    """
    c = weighted_coeffs(coeffs, window, X)
    N = c.size - 1
    M = 1 << max(5, int(np.ceil(np.log2(32 * max(N, 1)))))
    vals = np.abs(grid_values(c, M))
    gmax = float(vals.max())
    is_peak = (vals >= np.roll(vals, 1)) & (vals >= np.roll(vals, -1))
    cand = np.flatnonzero(is_peak)
    cand = cand[np.argsort(-vals[cand], kind="stable")][:peaks]
    best_v, best_a = gmax, float(np.argmax(vals)) / M
    found = []
    for j in cand:
        a0 = j / M
        a, v = _golden_max(lambda t: abs(eval_direct(coeffs, window, X, t)),
                           a0 - 1.0 / M, a0 + 1.0 / M, refine)
        found.append((float(a % 1.0), float(v)))
        if v > best_v:
            best_v, best_a = float(v), float(a % 1.0)
    cert = gmax + np.pi * N * float(np.abs(c).sum()) / M
    return SupNormReport(best_v, best_a, gmax, M, float(cert), tuple(found))


# ---------------------------------------------------------------- dumps

def dump_grid_csv(grid: GridEvaluation, path) -> None:
    j = np.arange(grid.M)
    with open(path, "w") as fh:
        fh.write("j,alpha,re,im,abs\n")
        for jj, v in zip(j, grid.values):
            fh.write(f"{jj},{float(jj / grid.M)!r},{float(v.real)!r},{float(v.imag)!r},{float(abs(v))!r}\n")


def dump_grid_binary(grid: GridEvaluation, path) -> None:
    kind = str(grid.coeffs.get("kind", "")).encode()[:16].ljust(16, b"\0")
    with open(path, "wb") as fh:
        fh.write(GRID_MAGIC + struct.pack("<QQ", grid.M, grid.X) + kind)
        fh.write(np.asarray(grid.values, dtype="<c16").tobytes())


def load_grid_binary(path) -> GridEvaluation:
    with open(path, "rb") as fh:
        head = fh.read(40)
        if head[:8] != GRID_MAGIC:
            raise DataCorruptionError(f"{path} is not a grid dump")
        M, X = struct.unpack("<QQ", head[8:24])
        kind = head[24:40].rstrip(b"\0").decode()
        vals = np.frombuffer(fh.read(), dtype="<c16")
    if vals.size != M:
        raise DataCorruptionError(f"{path}: expected {M} values, found {vals.size}")
    return GridEvaluation(int(M), int(X), vals.astype(complex), {"kind": kind})
