import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_sum
from twistlab.analysis.windows import make_window, window_eval
from twistlab.arith import make_coeffs
from twistlab.errors import DataCorruptionError, InvalidArgument
from twistlab.expsum import (dump_grid_binary, dump_grid_csv, eval_direct, eval_grid,
                             load_grid_binary, parse_alpha, sup_norm)

D = make_coeffs("divisor", 5000)
F = make_coeffs("hecke", 5000)


def test_examples():
    assert eval_direct(D, None, 4, 0.0) == pytest.approx(8)
    assert eval_direct(D, None, 4, Fraction(1, 2)) == pytest.approx(2)
    # d(1) e(1/3) + d(2) e(2/3) + d(3) = 1 + (e(1/3) + 2 e(2/3))
    v = eval_direct(D, None, 3, Fraction(1, 3))
    assert abs(v - complex(0.5, -math.sqrt(3) / 2)) < 1e-14


@given(st.sampled_from(["divisor", "hecke"]), st.integers(1, 400), st.floats(0, 1))
@settings(max_examples=40)
def test_direct_matches_brute(kind, X, alpha):
    c = D if kind == "divisor" else F
    assert abs(eval_direct(c, None, X, alpha) - brute_sum(c.values, X, alpha)) < 1e-9 * X


@given(st.integers(1, 10**6), st.integers(1, 10**6))
def test_exact_rational_phase(p, q):
    a = Fraction(p, q)
    assert abs(eval_direct(D, None, 50, a) - eval_direct(D, None, 50, float(a))) < 1e-6


def test_rational_phase_large_denominator():
    q = 2**40 + 15
    a = Fraction(12345, q)
    v = eval_direct(D, None, 1000, a)
    ref = sum(D.values[n] * np.exp(2j * np.pi * ((12345 * n) % q) / q) for n in range(1, 1001))
    assert abs(v - ref) < 1e-9


def test_grid_matches_direct_and_symmetry():
    w = make_window(0.1, 1.0, 0.2)
    g = eval_grid(F, w, 1000, 4096)
    j = np.random.default_rng(0).integers(0, 4096, 64)
    direct = eval_direct(F, w, 1000, [Fraction(int(k), 4096) for k in j])
    assert np.max(np.abs(g.values[j] - direct)) < 1e-10
    assert np.allclose(g.values[(-j) % 4096], np.conj(g.values[j]), atol=1e-10)
    n = np.arange(1, 1001)
    assert abs(g.values[0] - np.sum(F.values[1:1001] * window_eval(w, n / 1000))) < 1e-10


@given(st.integers(1, 3000), st.sampled_from([1, 2, 4]))
@settings(max_examples=25)
def test_grid_plancherel(X, mult):
    M = 1 << max(4, math.ceil(math.log2(4 * X)))
    M *= mult
    g = eval_grid(D, None, X, M)
    lhs = float(np.mean(np.abs(g.values) ** 2))
    rhs = float(np.sum(D.values[1 : X + 1] ** 2))
    assert abs(lhs / rhs - 1) < 1e-10


def test_reflection_symmetry():
    al = np.random.default_rng(5).uniform(0, 1, 64)
    a = eval_direct(F, None, 777, al)
    b = eval_direct(F, None, 777, 1 - al)
    assert np.max(np.abs(np.abs(a) - np.abs(b))) < 1e-12 * 777


def test_grid_validation():
    with pytest.raises(InvalidArgument):
        eval_grid(D, None, 10, 100)
    with pytest.warns(UserWarning):
        eval_grid(D, None, 100, 128)
    with pytest.raises(InvalidArgument):
        eval_direct(D, None, 6000, 0.1)


def test_parse_alpha():
    assert parse_alpha("3/7") == Fraction(3, 7)
    assert parse_alpha("0.25") == 0.25
    with pytest.raises(InvalidArgument):
        parse_alpha("1/0")
    with pytest.raises(InvalidArgument):
        parse_alpha("abc")


def test_sup_norm():
    r = sup_norm(D, 300)
    assert r.value >= float(np.sum(D.values[1:301])) - 1e-9
    assert r.value <= r.certified_upper
    assert sup_norm(F, 1).value == pytest.approx(1.0)
    s = sup_norm(F, 1024)
    assert s.value / math.sqrt(1024) <= 5


def test_grid_dumps(tmp_path):
    g = eval_grid(F, None, 100, 256)
    dump_grid_binary(g, tmp_path / "g.bin")
    back = load_grid_binary(tmp_path / "g.bin")
    assert back.M == 256 and back.X == 100 and np.array_equal(back.values, g.values)
    dump_grid_csv(g, tmp_path / "g.csv")
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert len(lines) == 257 and complex(float(lines[5].split(",")[2]),
                                         float(lines[5].split(",")[3])) == g.values[4]
    (tmp_path / "bad.bin").write_bytes(b"nonsense" * 10)
    with pytest.raises(DataCorruptionError):
        load_grid_binary(tmp_path / "bad.bin")


def test_thread_count_independent():
    al = list(np.random.default_rng(8).uniform(0, 1, 3000))
    a = eval_direct(D, None, 5000, al, workers=1)
    b = eval_direct(D, None, 5000, al, workers=4)
    assert np.array_equal(a, b)
