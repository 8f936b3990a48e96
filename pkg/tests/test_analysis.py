import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import mp_kernel, quad_transform
from twistlab.analysis.bessel import besselj, bessely, besselk, kernel_eval
from twistlab.analysis.quadrature import gauss_legendre, integrate_doubling
from twistlab.analysis.transforms import (bump_fourier, envelope_cutoff, fourier_table,
                                          hankel_transform, transform_table)
from twistlab.analysis.windows import (default_afe_window, default_bump, default_voronoi_window,
                                       make_window, smooth_step, window_eval)
from twistlab.errors import InvalidArgument

windows = st.builds(
    lambda a, width, frac: make_window(a, a + width, frac * width / 2),
    st.floats(0, 5), st.floats(0.1, 4), st.floats(0.05, 1.0))


@given(windows, st.floats(-1, 10))
def test_window_range_and_support(w, x):
    v = float(window_eval(w, x))
    assert 0.0 <= v <= 1.0
    if x <= w.a or x >= w.b:
        assert v == 0.0
    lo, hi = w.plateau
    if lo <= x <= hi and hi > lo:
        assert v == 1.0


@given(st.floats(0.01, 0.99), st.integers(0, 3))
def test_smooth_step_derivatives_by_differences(t, k):
    h = 1e-5
    fd = (smooth_step(t + h, k) - smooth_step(t - h, k)) / (2 * h)
    exact = smooth_step(t, k + 1)
    assert abs(fd - exact) <= 1e-4 * (1 + abs(exact))


def test_smooth_step_symmetry():
    t = np.linspace(-0.5, 1.5, 401)
    assert np.allclose(smooth_step(t) + smooth_step(1 - t), 1.0, atol=1e-15)


def test_derivative_scale_law():
    x = np.linspace(0, 3, 200_001)
    for r in (0.05, 0.1, 0.2):
        s1 = np.max(np.abs(window_eval(make_window(0, 3, r), x, 1)))
        s2 = np.max(np.abs(window_eval(make_window(0, 3, 2 * r), x, 1)))
        assert abs(s1 / s2 - 2) <= 0.2


def test_window_validation():
    with pytest.raises(InvalidArgument):
        make_window(1, 2, 0.6)
    with pytest.raises(InvalidArgument):
        make_window(-1, 2, 0.1)
    with pytest.raises(InvalidArgument):
        window_eval(make_window(0, 1, 0.2), 0.5, 5)


def test_gauss_legendre_exactness():
    x, w = gauss_legendre(10)
    for p in range(20):
        assert abs(np.dot(w, x**p) - (2 / (p + 1) if p % 2 == 0 else 0)) < 1e-14


def test_integrate_doubling():
    val, err = integrate_doubling(np.sin, [0, math.pi], 1e-13)
    assert abs(val - 2) < 1e-13


# ---------------------------------------------------------------- Bessel

XS = [1e-6, 1e-3, 0.1, 0.5, 1, 1.9, 2.1, 5, 11.9, 12.1, 16.9, 17.1, 25, 29.9, 30.1, 50, 100,
      1e3, 1e4, 1e6]


@pytest.mark.parametrize("n", [0, 1, 2, 11, 15, 21, 32])
def test_besselj_against_mpmath(n):
    for x in XS:
        ref = float(mp.besselj(n, x))
        env = max(abs(ref), min(1.0, math.sqrt(2 / (math.pi * x))) * 1e-3 * (x > 1))
        assert abs(besselj(n, x) - ref) <= 1e-11 * max(env, abs(ref)) + 1e-300, (n, x)


@pytest.mark.parametrize("n", [0, 1])
def test_bessely_besselk_against_mpmath(n):
    for x in XS:
        ry = float(mp.bessely(n, x))
        env = max(abs(ry), math.sqrt(2 / (math.pi * x)))
        assert abs(bessely(n, x) - ry) <= 1e-11 * env, (n, x)
        if x < 700:
            rk = float(mp.besselk(n, x))
            assert abs(besselk(n, x) - rk) <= 1e-11 * abs(rk), (n, x)


def test_kernel_combinations_exact():
    x = np.geomspace(1e-4, 1e4, 257)
    assert np.array_equal(kernel_eval("Bd", x), 4 * besselk(0, x) - 2 * np.pi * bessely(0, x))
    assert np.array_equal(kernel_eval("Bf", x, k=12), besselj(11, x))
    for xv in (0.3, 3.0, 40.0):
        assert abs(kernel_eval("Bd", xv) - mp_kernel("Bd", xv)) <= 1e-11 * (1 + abs(mp_kernel("Bd", xv)))


def test_b1_decay():
    x = np.geomspace(1, 1e4, 2000)
    assert np.max(np.abs(kernel_eval("B1", x)) * np.sqrt(x)) < 10
    x = np.geomspace(1e-6, 1, 2000)
    assert np.max(np.abs(kernel_eval("B1", x)) * x) < 10


def test_kernel_unknown():
    with pytest.raises(InvalidArgument):
        kernel_eval("H0", 1.0)


# ---------------------------------------------------------------- transforms

def test_bump_fourier_at_zero_is_mass():
    phi = default_bump()
    x, w = gauss_legendre(40)
    xs = np.concatenate([1.25 + 0.25 * x, 1.75 + 0.25 * x])
    mass = 0.25 * np.dot(np.concatenate([w, w]), window_eval(phi, xs))
    assert abs(bump_fourier(phi, 0.0) - mass) < 1e-13


@pytest.mark.parametrize("T", [10, 40])
def test_poisson_summation(T):
    phi = default_bump()
    n = np.arange(0, 3 * T)
    lhs = float(np.sum(window_eval(phi, n / T)))
    ls = np.arange(-8, 9)
    vals = bump_fourier(phi, T * ls)
    assert np.max(np.abs(vals[[0, -1]])) < 1e-12
    rhs = T * float(np.sum(vals).real)
    assert abs(lhs - rhs) < 1e-8


def test_bump_fourier_decay_and_conjugation():
    phi = default_bump()
    t = np.array([3.3, 17.1, 40.5])
    assert np.allclose(bump_fourier(phi, -t), np.conj(bump_fourier(phi, t)), atol=1e-15)
    tstar = envelope_cutoff(phi)
    assert 100 < tstar < 250
    assert abs(bump_fourier(phi, tstar + 0.3)) < 1e-14 * 0.5 + 2e-15


def test_fourier_table_interpolation():
    phi = default_bump()
    tab = fourier_table(phi, 60.0)
    t = np.random.default_rng(1).uniform(-60, 60, 50)
    assert np.max(np.abs(tab(t) - bump_fourier(phi, t))) < 1e-12


def test_hankel_zero_and_oracle():
    w = default_voronoi_window()
    assert hankel_transform(w, "f", 0.0) == 0.0
    for star in ("d", "f"):
        for y in (0.05, 1.0, 7.5):
            ref = quad_transform(lambda u: window_eval(w, u), w.a, w.b, star, y)
            assert abs(hankel_transform(w, star, y) - ref) < 1e-8, (star, y)


@pytest.fixture(scope="module")
def d_table():
    return transform_table(default_voronoi_window(), "d")


def test_table_probes_and_tail(d_table):
    w = default_voronoi_window()
    rng = np.random.default_rng(3)
    ys = np.exp(rng.uniform(math.log(1e-3), math.log(d_table.ymax), 32))
    direct = np.array([hankel_transform(w, "d", y) for y in ys])
    assert np.max(np.abs(d_table(ys) - direct)) < 1e-8
    assert d_table.tail_reached and d_table.tail_threshold <= d_table.ymax
    spot = hankel_transform(w, "d", 4 * d_table.tail_threshold)
    assert abs(spot) < 1e-12
    assert np.all(np.diff(d_table.ygrid) > 0)


def test_table_boundedness(d_table):
    assert np.max(np.abs(d_table.values)) <= 10
    for star in ("d", "f"):
        tab = transform_table(default_afe_window(), star)
        assert np.max(np.abs(tab.values)) <= 10


def test_table_below_range_falls_back(d_table):
    w = default_voronoi_window()
    y = 1e-5
    assert abs(d_table(np.array([y]))[0] - hankel_transform(w, "d", y)) < 1e-8


def test_window_basics():
    w = make_window(1.0, 3.0, 0.5)
    assert window_eval(w, 2.0) == 1.0
    assert window_eval(w, 1.0) == 0.0 and window_eval(w, 3.0) == 0.0
    assert window_eval(w, 2.0, 1) == 0.0
    assert smooth_step(0.5) == pytest.approx(0.5, abs=1e-16)
    h = 1e-6
    fd = (window_eval(w, 1.2 + h) - window_eval(w, 1.2 - h)) / (2 * h)
    assert window_eval(w, 1.2, 1) == pytest.approx(fd, rel=1e-6)


def test_bump_decay_at_twenty_over_ramp():
    # "width" read as the ramp length of the bump
    phi = default_bump()
    assert abs(bump_fourier(phi, 20 / phi.r)) <= 1e-6 * bump_fourier(phi, 0.0).real
