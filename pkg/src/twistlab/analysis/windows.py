"""Smooth compactly supported windows built from the exp(-1/t) step."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgument


def _sigma_derivs(h: np.ndarray):
    """Logistic sigma(h) and its first four derivatives, overflow-safe."""
    e = np.exp(-np.abs(h))
    s = np.where(h >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    s1 = e / (1.0 + e) ** 2
    s2 = s1 * (1 - 2 * s)
    s3 = s1 * (1 - 6 * s + 6 * s * s)
    s4 = s1 * (1 - 2 * s) * (1 - 12 * s + 12 * s * s)
    return s, s1, s2, s3, s4


def smooth_step(t, order: int = 0) -> np.ndarray:
    """psi(t) = E(t) / (E(t) + E(1-t)) with E(t) = exp(-1/t), and derivatives.

    psi = sigma(h) with h = 1/(1-t) - 1/t, so derivatives come from
    Faa di Bruno on the logistic function.
    """
    if not 0 <= order <= 4:
        raise InvalidArgument(f"derivative order must be in 0..4, got {order}")
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(t)
    if order == 0:
        out[t >= 1] = 1.0
    inside = (t > 0) & (t < 1)
    if not inside.any():
        return out
    u = t[inside]
    v = 1.0 - u
    with np.errstate(over="ignore"):
        h = 1.0 / v - 1.0 / u
        s, s1, s2, s3, s4 = _sigma_derivs(h)
        if order == 0:
            out[inside] = s
            return out
        h1 = 1 / u**2 + 1 / v**2
        h2 = -2 / u**3 + 2 / v**3
        h3 = 6 / u**4 + 6 / v**4
        h4 = -24 / u**5 + 24 / v**5
        if order == 1:
            r = s1 * h1
        elif order == 2:
            r = s2 * h1**2 + s1 * h2
        elif order == 3:
            r = s3 * h1**3 + 3 * s2 * h1 * h2 + s1 * h3
        else:
            r = s4 * h1**4 + 6 * s3 * h1**2 * h2 + s2 * (3 * h2**2 + 4 * h1 * h3) + s1 * h4
    # near the endpoints sigma' underflows to 0 while powers of h' overflow
    out[inside] = np.where(s1 == 0.0, 0.0, r)
    return out


@dataclass(frozen=True)
class SmoothWindow:
    """w on [a, b]: rises over [a, a+r], falls over [b-r, b].

    ``bump`` orientation means r = (b-a)/2, a single hump with no plateau.
    """

    a: float
    b: float
    r: float
    orientation: str = "window"

    def __call__(self, x, order: int = 0):
        return window_eval(self, x, order)

    @property
    def plateau(self):
        return (self.a + self.r, self.b - self.r)

    def descriptor(self) -> dict:
        return {"a": self.a, "b": self.b, "r": self.r, "orientation": self.orientation}

    def breakpoints(self) -> list[float]:
        pts = [self.a, self.a + self.r, self.b - self.r, self.b]
        return sorted(set(pts))


def make_window(a: float, b: float, r: float | None = None,
                orientation: str = "window") -> SmoothWindow:
    a, b = float(a), float(b)
    if orientation not in ("window", "bump"):
        raise InvalidArgument(f"orientation must be 'window' or 'bump', got {orientation!r}")
    if not (0 <= a < b) or not np.isfinite(b):
        raise InvalidArgument(f"need 0 <= a < b, got a={a}, b={b}")
    if orientation == "bump":
        half = (b - a) / 2
        if r is not None and abs(float(r) - half) > 1e-15 * max(1.0, b):
            raise InvalidArgument(f"bump orientation requires r = (b-a)/2 = {half}")
        r = half
    if r is None or not (0 < r and 2 * r <= (b - a) * (1 + 1e-15)):
        raise InvalidArgument(f"need 0 < 2r <= b-a, got r={r}, b-a={b - a}")
    return SmoothWindow(a, b, float(r), orientation)


def window_eval(w: SmoothWindow, x, order: int = 0):
    """order-th derivative of w at x, analytic through the chain rule."""
    if not 0 <= order <= 4:
        raise InvalidArgument(f"derivative order must be in 0..4, got {order}")
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = np.zeros_like(x)
    if order == 0:
        out[(x >= w.a + w.r) & (x <= w.b - w.r)] = 1.0
    rise = (x > w.a) & (x < w.a + w.r)
    fall = (x > w.b - w.r) & (x < w.b)
    if w.orientation == "bump":
        mid = w.a + w.r
        rise = (x > w.a) & (x <= mid)
        fall = (x > mid) & (x < w.b)
    out[rise] = smooth_step((x[rise] - w.a) / w.r, order) / w.r**order
    out[fall] = smooth_step((w.b - x[fall]) / w.r, order) * (-1.0 / w.r) ** order
    return out[0] if scalar else out


# shipped defaults
def default_bump() -> SmoothWindow:
    """Bump on [1, 2] used as the circle-method mollifier."""
    return make_window(1.0, 2.0, orientation="bump")


def default_voronoi_window() -> SmoothWindow:
    return make_window(1.0 / 16, 1.0, 15.0 / 32, "bump")


def default_afe_window() -> SmoothWindow:
    return make_window(0.0, 1.0, 0.25)


def default_major_arc_window() -> SmoothWindow:
    return make_window(0.0, 1.0, 0.25)
