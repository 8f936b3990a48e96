"""Numerical experiments on moments of additive twists of d(n) and lambda_f(n)."""

__version__ = "0.1.0"
