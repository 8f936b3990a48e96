"""Exact integer arithmetic: multiplicative tables, Ramanujan sums, tau.

Arrays are indexed directly by n, with a dummy slot at index 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import gmpy2
import numpy as np

from .errors import DataCorruptionError, InvalidArgument, ResourceLimitError

TAU_CEILING = 200_000
HECKE_WEIGHTS = (12, 16, 18, 20, 22, 26)


@dataclass(frozen=True)
class ArithTables:
    limit: int
    divisor: np.ndarray
    mobius: np.ndarray
    totient: np.ndarray


def prime_sieve(limit: int) -> np.ndarray:
    """All primes <= limit, ascending."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_p[p]:
            is_p[p * p :: p] = False
    return np.flatnonzero(is_p).astype(np.int64)


def build_tables(limit: int) -> ArithTables:
    """d, mu, phi up to ``limit`` via a prime-power sieve.

    Each prime touches only its own multiples, so the total work is
    O(limit log log limit) and every array op is vectorised.
    """
    if limit < 1:
        raise InvalidArgument(f"limit must be >= 1, got {limit}")
    d = np.ones(limit + 1, dtype=np.int64)
    mu = np.ones(limit + 1, dtype=np.int64)
    phi = np.arange(limit + 1, dtype=np.int64)
    for p in prime_sieve(limit).tolist():
        sl = slice(p, None, p)
        phi[sl] -= phi[sl] // p
        mu[sl] *= -1
        d[sl] *= 2
        pk, e = p * p, 2
        if pk <= limit:
            mu[pk::pk] = 0
        while pk <= limit:
            # d[n] currently carries the factor e for p^(e-1) || n
            d[pk::pk] = d[pk::pk] // e * (e + 1)
            pk *= p
            e += 1
    d[0] = mu[0] = phi[0] = 0
    return ArithTables(limit, d, mu, phi)


def factorize(n: int) -> dict[int, int]:
    if n < 1:
        raise InvalidArgument(f"cannot factor {n}")
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def mobius(n: int) -> int:
    f = factorize(n)
    if any(e > 1 for e in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


def totient(n: int) -> int:
    r = n
    for p in factorize(n):
        r -= r // p
    return r


def num_divisors(n: int) -> int:
    return math.prod(e + 1 for e in factorize(n).values())


def divisors(n: int) -> list[int]:
    ds = [1]
    for p, e in factorize(n).items():
        ds = [d * p**k for d in ds for k in range(e + 1)]
    return sorted(ds)


def is_prime(n: int) -> bool:
    return n >= 2 and bool(gmpy2.is_prime(n, 50))


def next_prime(n: int) -> int:
    return int(gmpy2.next_prime(n))


def ramanujan_sum(q: int, l: int) -> int:
    """c_q(l) = sum over d | gcd(q, |l|) of d * mu(q/d)."""
    if q < 1:
        raise InvalidArgument(f"q must be >= 1, got {q}")
    g = math.gcd(q, abs(l))  # gcd(q, 0) = q
    return sum(d * mobius(q // d) for d in divisors(g))


@dataclass(frozen=True)
class RamanujanSumCache:
    """c_q(l) for q <= maxQ; row q stores one period l = 0..q-1."""

    maxQ: int
    table: tuple = field(repr=False)

    @classmethod
    def build(cls, maxQ: int) -> "RamanujanSumCache":
        if maxQ < 1:
            raise InvalidArgument("maxQ must be >= 1")
        rows = [np.zeros(0, dtype=np.int64)]
        for q in range(1, maxQ + 1):
            # c_q(l) depends on l only through gcd(q, l)
            vals = {g: ramanujan_sum(q, g) for g in divisors(q)}
            rows.append(np.array([vals[math.gcd(q, l)] for l in range(q)], dtype=np.int64))
        return cls(maxQ, tuple(rows))

    def __call__(self, q: int, l: int) -> int:
        if not 1 <= q <= self.maxQ:
            raise InvalidArgument(f"q={q} outside cache range 1..{self.maxQ}")
        return int(self.table[q][l % q])


def reduced_residue_count(q: int, x: float, H: float) -> int:
    """Number of integers n in [x, x+H] with gcd(n, q) = 1."""
    if q < 1:
        raise InvalidArgument(f"q must be >= 1, got {q}")
    if H < 0:
        raise InvalidArgument(f"H must be >= 0, got {H}")
    lo, hi = math.ceil(x), math.floor(x + H)
    if hi < lo:
        return 0
    total = 0
    primes = list(factorize(q))
    for mask in range(1 << len(primes)):
        d, sign = 1, 1
        for i, p in enumerate(primes):
            if mask >> i & 1:
                d *= p
                sign = -sign
        total += sign * (hi // d - (-(-lo // d)) + 1)
    return total


# ---------------------------------------------------------------- power series

def _kronecker_bits(bound: int) -> int:
    b = bound.bit_length() + 2
    return (b + 7) // 8 * 8


def _pack(coeffs: list[int], bits: int) -> gmpy2.mpz:
    # positive and negative parts are packed separately as raw bytes
    nbytes = bits // 8
    pos = b"".join(max(c, 0).to_bytes(nbytes, "little") for c in coeffs)
    neg = b"".join(max(-c, 0).to_bytes(nbytes, "little") for c in coeffs)
    return gmpy2.mpz(int.from_bytes(pos, "little")) - gmpy2.mpz(int.from_bytes(neg, "little"))


def _unpack(val, bits: int, count: int) -> list[int]:
    neg = val < 0
    if neg:
        val = -val
    nbytes = bits // 8
    raw = int(val).to_bytes(max(1, (int(val).bit_length() + 7) // 8), "little")
    half = 1 << (bits - 1)
    full = 1 << bits
    out = []
    carry = 0
    for i in range(count):
        chunk = raw[i * nbytes : (i + 1) * nbytes]
        v = int.from_bytes(chunk, "little") + carry
        if v >= half:
            v -= full
            carry = 1
        else:
            carry = 0
        out.append(-v if neg else v)
    return out


def series_mul(a: list[int], b: list[int], n: int) -> list[int]:
    """First n coefficients of a*b, exact, by Kronecker substitution."""
    a, b = a[:n], b[:n]
    ma = max((abs(c) for c in a), default=0)
    mb = max((abs(c) for c in b), default=0)
    # slots must hold both the inputs and every product coefficient
    bits = _kronecker_bits(max(ma * mb * min(len(a), len(b)) + 1, ma, mb))
    prod = _pack(a, bits) * _pack(b, bits)
    return _unpack(prod, bits, n)


def _eta_cubed(n: int) -> list[int]:
    # Jacobi: prod (1-q^m)^3 = sum_k (-1)^k (2k+1) q^{k(k+1)/2}
    c = [0] * n
    k = 0
    while k * (k + 1) // 2 < n:
        c[k * (k + 1) // 2] = (-1) ** k * (2 * k + 1)
        k += 1
    return c


def _sigma_series(power: int, n: int) -> list[int]:
    s = [0] * n
    for d in range(1, n):
        dp = d**power
        for m in range(d, n, d):
            s[m] += dp
    return s


def _eisenstein(k: int, n: int) -> list[int]:
    const = {4: 240, 6: -504}[k]
    s = _sigma_series(k - 1, n)
    s = [const * v for v in s]
    s[0] = 1
    return s


def tau_series(limit: int, ceiling: int = TAU_CEILING, weight: int = 12) -> list[int]:
    """Exact Fourier coefficients a(1..limit) of the level-1 weight-k eigenform.

    Weight 12 is Delta = q * (eta^3)^8; the other one-dimensional cusp
    spaces are Delta times products of E4 and E6. Entry 0 is a dummy 0.
    """
    if limit < 1:
        raise InvalidArgument(f"limit must be >= 1, got {limit}")
    if limit > ceiling:
        raise ResourceLimitError(
            f"tau limit {limit} exceeds the exact-arithmetic ceiling {ceiling}")
    if weight not in HECKE_WEIGHTS:
        raise InvalidArgument(f"weight must be one of {HECKE_WEIGHTS}, got {weight}")
    n = limit  # coefficient of q^(m-1) in the product gives a(m)
    s = _eta_cubed(n)
    for _ in range(3):
        s = series_mul(s, s, n)
    extra = {12: (), 16: (4,), 18: (6,), 20: (4, 4), 22: (4, 6), 26: (4, 4, 6)}[weight]
    for e in extra:
        s = series_mul(s, _eisenstein(e, n), n)
    return [0] + s


# ---------------------------------------------------------------- coefficient sequences

@dataclass(frozen=True)
class CoeffSeq:
    kind: str
    limit: int
    values: np.ndarray = field(repr=False)
    exact: Optional[object] = field(default=None, repr=False)
    weight: Optional[int] = None

    def descriptor(self) -> dict:
        d = {"kind": self.kind, "limit": self.limit}
        if self.weight is not None:
            d["weight"] = self.weight
        return d

    def check_length(self, X: int) -> None:
        if X > self.limit:
            raise InvalidArgument(
                f"X={X} exceeds coefficient range {self.limit} for kind {self.kind}")


def check_deligne(exact, k: int, divisor: np.ndarray) -> None:
    half = (k - 1) / 2
    for n in range(1, len(exact)):
        if abs(float(exact[n])) / n**half > divisor[n] * (1 + 1e-12):
            raise DataCorruptionError(
                f"Deligne bound violated at n={n}: a(n)={exact[n]}, weight {k}")


def hecke_normalize(exact, k: int = 12) -> CoeffSeq:
    """lambda(n) = a(n) / n^((k-1)/2), with the Deligne bound enforced."""
    if len(exact) < 2:
        raise InvalidArgument("exact coefficient array is empty")
    if k % 2 or k < 12:
        raise InvalidArgument(f"weight must be even and >= 12, got {k}")
    limit = len(exact) - 1
    n = np.arange(1, limit + 1, dtype=np.float64)
    a = np.array([float(v) for v in exact[1:]])
    vals = np.zeros(limit + 1)
    vals[1:] = a / n ** ((k - 1) / 2)
    d = build_tables(limit).divisor
    bad = np.flatnonzero(np.abs(vals[1:]) > d[1:] * (1 + 1e-12))
    if bad.size:
        m = int(bad[0]) + 1
        raise DataCorruptionError(
            f"Deligne bound violated at n={m}: a(n)={exact[m]}, weight {k}")
    return CoeffSeq("hecke", limit, vals, exact=list(exact), weight=k)


def divisor_coeffs(limit: int) -> CoeffSeq:
    d = build_tables(limit).divisor
    return CoeffSeq("divisor", limit, d.astype(np.float64), exact=d)


def hecke_coeffs(limit: int, weight: int = 12, ceiling: int = TAU_CEILING) -> CoeffSeq:
    return hecke_normalize(tau_series(limit, ceiling, weight), weight)


def squares_coeffs(limit: int) -> CoeffSeq:
    v = np.zeros(limit + 1)
    m = np.arange(1, math.isqrt(limit) + 1)
    v[m * m] = 1.0
    return CoeffSeq("squares", limit, v, exact=v.astype(np.int64))


def make_coeffs(kind: str, limit: int, weight: int = 12) -> CoeffSeq:
    """Dispatch on kind: 'divisor'/'d', 'hecke'/'f', 'squares'."""
    if limit < 1:
        raise InvalidArgument(f"limit must be >= 1, got {limit}")
    if kind in ("divisor", "d"):
        return divisor_coeffs(limit)
    if kind in ("hecke", "f"):
        return hecke_coeffs(limit, weight)
    if kind == "squares":
        return squares_coeffs(limit)
    raise InvalidArgument(f"unknown coefficient kind {kind!r}")


def star_of(kind: str) -> str:
    return {"divisor": "d", "d": "d", "hecke": "f", "f": "f"}.get(kind, kind)
