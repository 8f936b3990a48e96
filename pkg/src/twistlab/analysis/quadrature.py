"""Composite Gauss-Legendre rules and small quadrature helpers."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..errors import NumericError


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_nodes(edges, order: int = 20):
    """Nodes and weights of a Gauss-Legendre rule on each panel [e_i, e_{i+1}]."""
    edges = np.asarray(edges, dtype=np.float64)
    x, w = gauss_legendre(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = (hi - lo) / 2
    nodes = (lo + hi) / 2 + half * x[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def subdivide(breaks, max_len) -> np.ndarray:
    """Refine the sorted breakpoints so no panel exceeds max_len.

    max_len may be a scalar or one value per segment.
    """
    breaks = np.asarray(breaks, dtype=np.float64)
    lens = np.broadcast_to(np.asarray(max_len, dtype=np.float64), (len(breaks) - 1,))
    out = [breaks[:1]]
    for lo, hi, m in zip(breaks[:-1], breaks[1:], lens):
        k = max(1, int(np.ceil((hi - lo) / m)))
        out.append(np.linspace(lo, hi, k + 1)[1:])
    return np.concatenate(out)


def integrate_doubling(fn, edges, tol: float, order: int = 20, max_levels: int = 8):
    """Integrate fn over the panels, halving every panel until two passes agree.

    fn takes an array of nodes and may return complex values.
    """
    edges = np.asarray(edges, dtype=np.float64)
    x, w = composite_nodes(edges, order)
    prev = np.sum(w * fn(x))
    err = np.inf
    for _ in range(max_levels):
        mids = (edges[:-1] + edges[1:]) / 2
        edges = np.sort(np.concatenate([edges, mids]))
        x, w = composite_nodes(edges, order)
        cur = np.sum(w * fn(x))
        err = abs(cur - prev)
        if err <= tol:
            return cur, err
        prev = cur
    raise NumericError(f"quadrature did not reach {tol:g} (achieved {err:.3g})",
                       best=prev, achieved=err)
