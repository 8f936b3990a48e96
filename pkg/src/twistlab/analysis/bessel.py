"""Bessel kernels J_n, Y_0, Y_1, K_0, K_1 and the Voronoi combinations.

Small arguments use power series in extended precision; large arguments
use the Hankel asymptotic expansions. K in the middle range comes from
the trapezoid rule on its cosh integral, which converges geometrically.
"""
from __future__ import annotations

import numpy as np

from ..errors import InvalidArgument

LD = np.longdouble
PI_LD = LD("3.14159265358979323846264338327950288")
EULER_GAMMA = 0.57721566490153286060651209008240243
GAMMA_LD = LD("0.57721566490153286060651209008240243")

SERIES_CUTOFF = 17.0  # series/asymptotic switch for J and Y
K_SERIES_CUTOFF = 2.0
K_ASYMPT_CUTOFF = 30.0
MAX_ORDER = 32
_NTERMS = 90


def _digamma_table(n):
    # psi(k+1) = -gamma + H_k
    h = np.zeros(n + 2, dtype=LD)
    for k in range(1, n + 2):
        h[k] = h[k - 1] + LD(1) / LD(k)
    return h - GAMMA_LD


_PSI = _digamma_table(_NTERMS + MAX_ORDER + 2)


def _series_sums(x: np.ndarray, sign: int):
    """Power-series pieces shared by J0/J1/Y0/Y1 (sign -1) and I0/I1/K0/K1 (+1).

    Returns (S0, S1, T0, T1) with z = sign*x^2/4 and
      S0 = sum z^k/k!^2,            S1 = sum z^k/(k!(k+1)!),
      T0 = sum psi(k+1) z^k/k!^2,   T1 = sum (psi(k+1)+psi(k+2)) z^k/(k!(k+1)!).
    """
    xl = x.astype(LD)
    z = sign * xl * xl / 4
    a0 = np.ones_like(xl)
    a1 = np.ones_like(xl)
    S0, S1 = a0.copy(), a1.copy()
    T0 = _PSI[0] * a0
    T1 = (_PSI[0] + _PSI[1]) * a1
    for k in range(1, _NTERMS):
        a0 = a0 * z / (k * k)
        a1 = a1 * z / (k * (k + 1))
        S0 += a0
        S1 += a1
        T0 += _PSI[k] * a0
        T1 += (_PSI[k] + _PSI[k + 1]) * a1
        if np.all(np.abs(a0) * (k + 2) < 1e-21 * np.maximum(np.abs(S0), 1e-300)) and \
                np.all(np.abs(a1) * (k + 2) < 1e-21 * np.maximum(np.abs(S1), 1e-300)):
            break
    return S0, S1, T0, T1


def _hankel_coeffs(nu: int, count: int = 80) -> np.ndarray:
    mu = 4.0 * nu * nu
    c = np.ones(count)
    for k in range(1, count):
        c[k] = c[k - 1] * (mu - (2 * k - 1) ** 2) / (k * 8.0)
    return c


_HANKEL = {nu: _hankel_coeffs(nu) for nu in (0, 1)}


def _hankel_pq(x: np.ndarray, nu: int):
    """Asymptotic P, Q for order nu via Horner in 1/x.

    The number of terms is fixed by the smallest x: enough to push the
    terms below 1e-17, never past the smallest term of the series.
    """
    c = _HANKEL[nu]
    xmin = float(np.min(x))
    mags = np.abs(c) * (1.0 / xmin) ** np.arange(c.size)
    stop = int(np.argmin(mags))
    small = np.flatnonzero(mags[:stop + 1] < 1e-17)
    K = int(small[0]) if small.size else stop
    K = max(K, 2)
    # P = sum_{k even} (-1)^{k/2} c_k x^-k,  Q = sum_{k odd} (-1)^{(k-1)/2} c_k x^-k
    r2 = 1.0 / (x * x)
    P = np.zeros_like(x)
    Q = np.zeros_like(x)
    for k in range(K - K % 2, -1, -2):
        P = P * r2 + (-1) ** (k // 2) * c[k]
    for k in range(K - 1 + K % 2, 0, -2):
        Q = Q * r2 + (-1) ** ((k - 1) // 2) * c[k]
    return P, Q / x


def _phase(x, nu):
    # cos and sin of x - (nu/2 + 1/4) pi without forming the shifted argument
    c, s = np.cos(x), np.sin(x)
    phi = (nu / 2 + 0.25) * np.pi
    return c * np.cos(phi) + s * np.sin(phi), s * np.cos(phi) - c * np.sin(phi)


def _check_x(x):
    x = np.asarray(x, dtype=np.float64)
    if np.any(~(x > 0)):
        raise InvalidArgument("Bessel kernels require x > 0")
    return x


def _jy01(x):
    """(J0, J1, Y0, Y1) for x > 0."""
    out = [np.empty_like(x) for _ in range(4)]
    small = x < SERIES_CUTOFF
    if small.any():
        xs = x[small]
        S0, S1, T0, T1 = _series_sums(xs, -1)
        xl = xs.astype(LD)
        lg = np.log(xl / 2)
        j0 = S0
        j1 = xl / 2 * S1
        y0 = 2 / PI_LD * lg * j0 - 2 / PI_LD * T0
        y1 = -2 / (PI_LD * xl) + 2 / PI_LD * lg * j1 - xl / (2 * PI_LD) * T1
        for o, v in zip(out, (j0, j1, y0, y1)):
            o[small] = v.astype(np.float64)
    big = ~small
    if big.any():
        xb = x[big]
        amp = np.sqrt(2.0 / (np.pi * xb))
        for nu in (0, 1):
            P, Q = _hankel_pq(xb, nu)
            c, s = _phase(xb, nu)
            out[nu][big] = amp * (P * c - Q * s)
            out[2 + nu][big] = amp * (P * s + Q * c)
    return out


def _k01_scaled(x):
    """(e^x K0(x), e^x K1(x)) for x > 0."""
    k0 = np.empty_like(x)
    k1 = np.empty_like(x)
    small = x < K_SERIES_CUTOFF
    if small.any():
        xs = x[small]
        S0, S1, T0, T1 = _series_sums(xs, +1)
        xl = xs.astype(LD)
        lg = np.log(xl / 2)
        i0 = S0
        i1 = xl / 2 * S1
        e = np.exp(xl)
        k0[small] = (e * (-lg * i0 + T0)).astype(np.float64)
        k1[small] = (e * (1 / xl + lg * i1 - xl / 4 * T1)).astype(np.float64)
    mid = (x >= K_SERIES_CUTOFF) & (x < K_ASYMPT_CUTOFF)
    if mid.any():
        xm = x[mid][:, None]
        # e^x K_nu(x) = int_0^inf exp(-x (cosh t - 1)) cosh(nu t) dt
        h = 0.1
        t = np.arange(0, 6.0 + h / 2, h)[None, :]
        f = np.exp(-xm * (np.cosh(t) - 1))
        w = np.full(t.shape, h)
        w[0, 0] = h / 2
        k0[mid] = (f * w).sum(axis=1)
        k1[mid] = (f * np.cosh(t) * w).sum(axis=1)
    big = x >= K_ASYMPT_CUTOFF
    if big.any():
        xb = x[big]
        amp = np.sqrt(np.pi / (2 * xb))
        for nu, dest in ((0, k0), (1, k1)):
            mu = 4.0 * nu * nu
            s = np.ones_like(xb)
            term = np.ones_like(xb)
            for k in range(1, 40):
                term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * xb)
                s += term
                if np.all(np.abs(term) < 1e-18):
                    break
            dest[big] = amp * s
    return k0, k1


def besselj(n: int, x):
    """J_n(x) for integer 0 <= n <= 32."""
    if not (0 <= int(n) <= MAX_ORDER and int(n) == n):
        raise InvalidArgument(f"order must be an integer in 0..{MAX_ORDER}, got {n}")
    n = int(n)
    x = _check_x(x)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if n <= 1:
        r = _jy01(x)[n]
        return r[0] if scalar else r
    out = np.empty_like(x)
    small = x < max(SERIES_CUTOFF, float(n))
    if small.any():
        xl = x[small].astype(LD)
        z = -xl * xl / 4
        a = np.ones_like(xl)
        fact = LD(1)
        for m in range(2, n + 1):
            fact *= m
        a = a / fact
        s = a.copy()
        for k in range(1, _NTERMS + n):
            a = a * z / (k * (k + n))
            s += a
            if np.all(np.abs(a) < 1e-22 * np.maximum(np.abs(s), 1e-300)):
                break
        out[small] = ((xl / 2) ** n * s).astype(np.float64)
    big = ~small
    if big.any():
        xb = x[big]
        j0, j1, _, _ = _jy01(xb)
        # upward recurrence is stable while the order stays below x
        jm, jc = j0, j1
        for m in range(1, n):
            jm, jc = jc, (2 * m / xb) * jc - jm
        out[big] = jc
    return out[0] if scalar else out


def bessely(n: int, x):
    if n not in (0, 1):
        raise InvalidArgument("Y is provided for orders 0 and 1 only")
    x = _check_x(x)
    scalar = x.ndim == 0
    r = _jy01(np.atleast_1d(x))[2 + n]
    return r[0] if scalar else r


def besselk(n: int, x):
    if n not in (0, 1):
        raise InvalidArgument("K is provided for orders 0 and 1 only")
    x = _check_x(x)
    scalar = x.ndim == 0
    xa = np.atleast_1d(x)
    r = _k01_scaled(xa)[n]
    with np.errstate(under="ignore"):
        r = r * np.exp(-xa)
    return r[0] if scalar else r


def kernel_eval(kind: str, x, nu: int | None = None, k: int | None = None):
    """Evaluate a named kernel.

    kinds: 'J' (order nu), 'Y0', 'Y1', 'K0', 'K1',
    'Bd' = 4K0 - 2 pi Y0, 'B1' = -4K1 - 2 pi Y1, 'Bf' = J_{k-1}.
    """
    if kind == "J":
        return besselj(0 if nu is None else nu, x)
    if kind in ("J0", "J1"):
        return besselj(int(kind[1]), x)
    if kind in ("Y0", "Y1"):
        return bessely(int(kind[1]), x)
    if kind in ("K0", "K1"):
        return besselk(int(kind[1]), x)
    if kind == "Bd":
        return 4 * besselk(0, x) - 2 * np.pi * bessely(0, x)
    if kind == "B1":
        return -4 * besselk(1, x) - 2 * np.pi * bessely(1, x)
    if kind == "Bf":
        if k is None:
            k = 12
        return besselj(k - 1, x)
    raise InvalidArgument(f"unknown kernel kind {kind!r}")
