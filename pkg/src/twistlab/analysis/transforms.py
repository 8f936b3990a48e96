"""Fourier transforms of bumps and the Bessel-kernel transforms I_*w(y).

I_*w(y) = int w(u) K_*(4 pi sqrt(u y)) du, with K_d = 4 K0 - 2 pi Y0 and
K_f = J_{k-1}. For the divisor kernel the K0 and Y0 pieces are kept apart
because they pair with opposite additive phases in the dual sum.

Everything is computed in the variables v = sqrt(u), z = sqrt(y), where
the kernel oscillates with fixed period 1/(2z) in v.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from ..errors import InvalidArgument, NumericError, TableResolutionError
from .bessel import besselj, besselk, bessely
from .quadrature import composite_nodes, gauss_legendre, integrate_doubling, subdivide
from .windows import SmoothWindow, window_eval

TAIL_LEVEL = 1e-12


# ---------------------------------------------------------------- Chebyshev tables

def _cheb_nodes(n: int):
    j = np.arange(n)
    theta = (2 * j + 1) * np.pi / (2 * n)
    x = np.cos(theta)
    w = (-1.0) ** j * np.sin(theta)
    return x, w


@dataclass(frozen=True)
class ChebTable:
    """Piecewise Chebyshev interpolant: panel i spans edges[i]..edges[i+1]."""

    edges: np.ndarray
    degree: np.ndarray  # per panel
    values: list  # per panel arrays of node values

    @staticmethod
    def panel_nodes(edges, degree):
        out = []
        for lo, hi, n in zip(edges[:-1], edges[1:], degree):
            x, _ = _cheb_nodes(int(n))
            out.append((lo + hi) / 2 + (hi - lo) / 2 * x)
        return out

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        idx = np.clip(np.searchsorted(self.edges, t, side="right") - 1, 0, len(self.edges) - 2)
        dtype = np.result_type(*[v.dtype for v in self.values])
        out = np.empty(t.shape, dtype=dtype)
        for n in np.unique(self.degree):
            panels = np.flatnonzero(self.degree == n)
            sel = np.isin(idx, panels)
            if not sel.any():
                continue
            x, w = _cheb_nodes(int(n))
            pi = idx[sel]
            lo, hi = self.edges[pi], self.edges[pi + 1]
            s = (2 * t[sel] - lo - hi) / (hi - lo)
            vals = np.stack([self.values[p] for p in range(len(self.values))
                             if self.degree[p] == n])
            # map panel index to row within vals
            rowmap = np.full(len(self.degree), -1)
            rowmap[panels] = np.arange(len(panels))
            V = vals[rowmap[pi]]
            d = s[:, None] - x[None, :]
            hit = d == 0
            d[hit] = 1.0
            c = w[None, :] / d
            r = (c * V).sum(axis=1) / c.sum(axis=1)
            anyhit = hit.any(axis=1)
            if anyhit.any():
                r[anyhit] = V[anyhit][hit[anyhit]]
            out[sel] = r
        return out


# ---------------------------------------------------------------- bump Fourier transform

def _window_fourier_nodes(phi: SmoothWindow, tmax: float, refine: int):
    ramp_len = phi.r / (8 * refine)
    period = 1.0 / (abs(tmax) + 1.0) / refine
    br = np.array(phi.breakpoints())
    segs = []
    for lo, hi in zip(br[:-1], br[1:]):
        on_ramp = (lo < phi.a + phi.r - 1e-15) or (hi > phi.b - phi.r + 1e-15)
        segs.append(min(period, ramp_len) if on_ramp else period)
    return composite_nodes(subdivide(br, segs), 20)


def bump_fourier(phi: SmoothWindow, t, tol: float = 1e-12):
    """phi^(t) = int phi(x) exp(-2 pi i x t) dx, vectorised over t.

    Panels are halved until two passes agree to ``tol``.
    """
    t = np.asarray(t, dtype=np.float64)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    tmax = float(np.max(np.abs(t))) if t.size else 0.0

    def run(refine):
        x, w = _window_fourier_nodes(phi, tmax, refine)
        fw = w * window_eval(phi, x)
        c = (phi.a + phi.b) / 2
        xc = x - c  # demodulate to keep phase arguments small
        out = np.empty(t.shape, dtype=complex)
        step = max(1, 2_000_000 // max(1, x.size))
        for i in range(0, t.size, step):
            tt = t[i : i + step]
            out[i : i + step] = (np.exp(-2j * np.pi * np.outer(tt, xc)) @ fw) \
                * np.exp(-2j * np.pi * c * tt)
        return out

    prev = run(1)
    for refine in (2, 4, 8):
        cur = run(refine)
        err = float(np.max(np.abs(cur - prev))) if t.size else 0.0
        if err <= tol:
            return cur[0] if scalar else cur
        prev = cur
    raise NumericError(f"bump_fourier did not reach {tol:g} (achieved {err:.3g})",
                       best=prev, achieved=err)


@dataclass(frozen=True)
class FourierTable:
    """Interpolated phi^ on [-tmax, tmax] for repeated lattice evaluation.

    The transform is demodulated by the centre c of the support, which
    leaves a slowly varying function tabulated on unit panels.
    """

    phi: SmoothWindow
    tmax: float
    center: float
    table: ChebTable
    phi0: float

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        out = np.zeros(t.shape, dtype=complex)
        inside = np.abs(t) <= self.tmax
        tt = t[inside]
        g = self.table(np.abs(tt))
        g = np.where(tt < 0, np.conj(g), g)
        out[inside] = g * np.exp(-2j * np.pi * self.center * tt)
        return out


def envelope_cutoff(phi: SmoothWindow, rel: float = 1e-14, step: float = 0.25,
                    tmax: float = 4000.0) -> float:
    """Smallest T with |phi^(t)| < rel*phi^(0) for every sampled |t| >= T.

    Sampled on [0, tmax] at spacing ``step``, scaled by the support width.
    """
    width = phi.b - phi.a
    phi0 = bump_fourier(phi, 0.0).real
    T = 16.0 / width
    while T < tmax:
        ts = np.arange(T, 2 * T, step / width)
        # refinement test is limited by rounding near 1e-14 absolute
        vals = np.abs(bump_fourier(phi, ts, tol=max(rel * phi0 / 2, 1e-14)))
        above = np.flatnonzero(vals >= rel * phi0)
        if above.size == 0:
            return float(T)
        if above[-1] < ts.size - 1:
            return float(ts[above[-1] + 1])
        T *= 2
    raise NumericError(f"bump transform has not decayed below {rel:g} by t={tmax}")


def fourier_table(phi: SmoothWindow, tmax: float, degree: int = 16) -> FourierTable:
    center = (phi.a + phi.b) / 2
    half_width = (phi.b - phi.a) / 2
    # demodulated transform has band limit half_width: panel of one period
    h = 1.0 / (2 * half_width + 1e-300)
    npan = max(1, int(np.ceil(tmax / h)))
    edges = np.linspace(0.0, npan * h, npan + 1)
    deg = np.full(npan, degree)
    nodes = ChebTable.panel_nodes(edges, deg)
    allt = np.concatenate(nodes)
    g = bump_fourier(phi, allt) * np.exp(2j * np.pi * center * allt)
    vals, pos = [], 0
    for nd in nodes:
        vals.append(g[pos : pos + nd.size])
        pos += nd.size
    phi0 = float(bump_fourier(phi, 0.0).real)
    return FourierTable(phi, float(npan * h), center, ChebTable(edges, deg, vals), phi0)


# ---------------------------------------------------------------- kernels

def kernel_components(star: str) -> tuple[str, ...]:
    return ("Y", "K") if star == "d" else ("J",)


def _kernel(comp: str, x: np.ndarray, k: int) -> np.ndarray:
    if comp == "Y":
        return -2 * np.pi * bessely(0, x)
    if comp == "K":
        out = np.zeros_like(x)
        live = x < 740.0  # K0 underflows beyond this
        out[live] = 4 * besselk(0, x[live])
        return out
    return besselj(k - 1, x)


def _check_star(star: str, k: int):
    if star not in ("d", "f"):
        raise InvalidArgument(f"star must be 'd' or 'f', got {star!r}")
    if star == "f" and (k % 2 or not 12 <= k <= 32):
        raise InvalidArgument(f"weight must be even in 12..32, got {k}")


def _v_edges(w: SmoothWindow, zmax: float, freq: float, refine: float) -> np.ndarray:
    """Panels in v = sqrt(u): one kernel period, finer on the ramps."""
    br = np.sqrt(np.array(w.breakpoints()))
    vb = br[-1]
    period = 1.0 / (2 * zmax + 2 * vb * abs(freq) + 1.0) / refine
    segs = []
    for lo, hi in zip(br[:-1], br[1:]):
        on_ramp = (lo * lo < w.a + w.r - 1e-15) or (hi * hi > w.b - w.r + 1e-15)
        segs.append(min(period, (hi - lo) / (8 * refine)) if on_ramp else period)
    return subdivide(br, segs)


def hankel_batch(w: SmoothWindow, star: str, z, k: int = 12,
                 modulation: Optional[Callable] = None, mod_freq: float = 0.0,
                 refine: float = 1.0, chunk: int = 64) -> dict:
    """Transforms at z = sqrt(y) for many z, per kernel component.

    ``modulation(u)`` multiplies the window (e.g. an additive phase whose
    frequency in u is ``mod_freq``).
    """
    _check_star(star, k)
    z = np.asarray(z, dtype=np.float64)
    comps = kernel_components(star)
    cplx = modulation is not None
    out = {c: np.zeros(z.shape, dtype=complex if cplx else float) for c in comps}
    if np.any(z < 0):
        raise InvalidArgument("y must be >= 0")
    zero = z == 0
    if zero.any() and star == "d":
        raise InvalidArgument("the divisor transform is singular at y = 0")
    order = np.argsort(z, kind="stable")
    order = order[~zero[order]]
    for i in range(0, order.size, chunk):
        idx = order[i : i + chunk]
        zc = z[idx]
        edges = _v_edges(w, float(zc.max()), mod_freq, refine)
        v, wt = composite_nodes(edges, 20)
        u = v * v
        g = 2 * v * wt * window_eval(w, u)
        if cplx:
            g = g * modulation(u)
        keep = g != 0
        v, g = v[keep], g[keep]
        x = 4 * np.pi * np.outer(zc, v)
        for c in comps:
            out[c][idx] = _kernel(c, x, k) @ g
    return out


def hankel_transform(w: SmoothWindow, star: str, y: float, k: int = 12,
                     tol: float = 1e-10, components: bool = False):
    """I_*w(y) by panel doubling until successive values agree to ``tol``."""
    if y < 0:
        raise InvalidArgument("y must be >= 0")
    z = np.array([np.sqrt(float(y))])
    if y == 0 and star == "f":
        res = {"J": 0.0}
        return res if components else 0.0
    prev = hankel_batch(w, star, z, k)
    err = np.inf
    for refine in (2, 4, 8, 16):
        cur = hankel_batch(w, star, z, k, refine=refine)
        err = max(abs(cur[c][0] - prev[c][0]) for c in cur)
        if err <= tol:
            res = {c: float(cur[c][0]) for c in cur}
            return res if components else sum(res.values())
        prev = cur
    raise NumericError(f"hankel_transform at y={y} did not reach {tol:g}",
                       best=sum(float(v[0]) for v in prev.values()), achieved=err)


# ---------------------------------------------------------------- tables

@dataclass(frozen=True)
class VoronoiTransform:
    """Tabulated I_*w on [ymin, ymax] as piecewise Chebyshev in z = sqrt(y)."""

    star: str
    weight: int
    window: SmoothWindow
    ymin: float
    ymax: float
    ygrid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    tables: dict = field(repr=False)
    tail_threshold: Optional[float]
    norm_constant: complex = 1.0
    calibrated: bool = False
    probe_error: float = 0.0

    @property
    def tail_reached(self) -> bool:
        return self.tail_threshold is not None

    def matches(self, w: SmoothWindow, star: str, k: int = 12) -> bool:
        return self.window == w and self.star == star and (star == "d" or self.weight == k)

    def with_constant(self, c: complex) -> "VoronoiTransform":
        return replace(self, norm_constant=complex(c), calibrated=True)

    def evaluate(self, y, component: Optional[str] = None):
        """Interpolated transform; 'Y'/'K' select divisor pieces, None sums."""
        y = np.asarray(y, dtype=np.float64)
        comps = kernel_components(self.star) if component is None else (component,)
        z = np.sqrt(y)
        res = np.zeros(y.shape)
        inside = (y >= self.ymin) & (y <= self.ymax)
        dead = (y > self.ymax) & self.tail_reached
        other = ~(inside | dead)
        for c in comps:
            res[inside] += self.tables[c](z[inside])
        if other.any():
            direct = hankel_batch(self.window, self.star, z[other], self.weight, refine=2)
            res[other] += sum(direct[c] for c in comps)
        return res

    def __call__(self, y, component: Optional[str] = None):
        return self.evaluate(y, component)

    def descriptor(self) -> dict:
        return {"star": self.star, "weight": self.weight, "window": self.window.descriptor(),
                "ymax": self.ymax, "tail_threshold": self.tail_threshold,
                "norm_constant": [self.norm_constant.real, self.norm_constant.imag]}


def find_decay_point(w: SmoothWindow, star: str, k: int = 12, level: float = 1e-12,
                     zstart: float = 4.0, zcap: float = 2000.0) -> float:
    """y beyond which sampled |I_*w| stays below ``level`` for two blocks."""
    z0 = zstart
    vb = np.sqrt(w.b)
    while z0 < zcap:
        block = max(2.0, z0 / 8)
        zs = np.linspace(z0, z0 + block, int(8 * block * vb) + 1)
        vals = hankel_batch(w, star, zs, k)
        amp = np.max(np.abs(sum(vals.values())))
        if amp < level:
            return float(z0**2)
        z0 += block
    raise NumericError(f"transform has not decayed below {level:g} by y={zcap ** 2:g}")


def transform_table(w: SmoothWindow, star: str, ymax: Optional[float] = None, k: int = 12,
                    ymin: float = 1e-3, probes: int = 32, tol: float = 1e-8,
                    seed: int = 0, max_refine: int = 3, extent: float = 2.0) -> VoronoiTransform:
    """Build and probe-check a transform table.

    With ymax=None the table extends to ``extent`` times the detected decay
    point so that extended dual-sum truncations stay inside it.
    """
    _check_star(star, k)
    if w.a < 0:
        raise InvalidArgument("window must be supported on [0, inf)")
    if ymax is None:
        ymax = extent * find_decay_point(w, star, k)
    if ymax <= 0:
        raise InvalidArgument(f"ymax must be positive, got {ymax}")
    ymin = min(ymin, ymax / 4)
    zmin, zmax = np.sqrt(ymin), np.sqrt(ymax)
    comps = kernel_components(star)
    vb = np.sqrt(w.b)
    rng = np.random.default_rng(seed)
    for level in range(max_refine + 1):
        # geometric panels up to z = 1 (log singularity at 0), then uniform
        geo = [zmin]
        while geo[-1] * 2 < min(1.0, zmax):
            geo.append(geo[-1] * 2)
        geo.append(min(1.0, zmax))
        edges = np.array(geo)
        deg = [24 * 2**level] * (len(edges) - 1)
        if zmax > 1.0:
            h = 0.5 / vb / 2**level
            npan = int(np.ceil((zmax - 1.0) / h))
            uni = np.linspace(1.0, zmax, npan + 1)
            edges = np.concatenate([edges, uni[1:]])
            deg += [16] * npan
        deg = np.array(deg)
        nodes = ChebTable.panel_nodes(edges, deg)
        allz = np.concatenate(nodes)
        vals = hankel_batch(w, star, allz, k)
        tables = {}
        for c in comps:
            per, pos = [], 0
            for nd in nodes:
                per.append(vals[c][pos : pos + nd.size])
                pos += nd.size
            tables[c] = ChebTable(edges, deg, per)
        # probes: half log-uniform below y = 1, half uniform in z above
        pz = np.concatenate([
            np.exp(rng.uniform(np.log(zmin), np.log(min(1.0, zmax)), probes // 2)),
            rng.uniform(min(1.0, zmax), zmax, probes - probes // 2)])
        direct = hankel_batch(w, star, pz, k, refine=2)
        err = max(float(np.max(np.abs(tables[c](pz) - direct[c]))) for c in comps)
        if err < tol:
            break
    else:
        raise TableResolutionError(
            f"transform table probe error {err:.3g} exceeds {tol:g} after refinement",
            achieved=err)
    combined = sum(vals[c] for c in comps)
    ygrid = allz**2
    order = np.argsort(ygrid)
    ygrid, combined = ygrid[order], combined[order]
    amp = np.max(np.abs(np.stack([vals[c][order] for c in comps])), axis=0)
    loud = np.flatnonzero(amp >= TAIL_LEVEL)
    tail = None
    if loud.size and loud[-1] < ygrid.size - 1:
        tail = float(ygrid[loud[-1] + 1])
        spots = np.sqrt(np.array([1.25, 2.0, 4.0]) * tail)
        chk = hankel_batch(w, star, spots, k, refine=2)
        if max(float(np.max(np.abs(chk[c]))) for c in comps) >= TAIL_LEVEL:
            tail = None
    return VoronoiTransform(star, k, w, float(ymin), float(ymax), ygrid, combined, tables,
                            tail, probe_error=err)
