import json

import numpy as np
import pytest

from oracles import naive_tau
from twistlab import cli
from twistlab.arith import build_tables
from twistlab.cache import cache_coeffs, load_coeffs, read_cache
from twistlab.errors import DataCorruptionError, NumericError


def test_cache_roundtrip(tmp_path):
    p = cache_coeffs("hecke", 2000, tmp_path)
    first = p.read_bytes()
    assert cache_coeffs("hecke", 2000, tmp_path) == p
    assert p.read_bytes() == first
    kind, weight, limit, values = read_cache(p)
    assert (kind, weight, limit) == ("hecke", 12, 2000)
    assert [0] + values == naive_tau(2000)
    assert first.splitlines()[0] == b"# kind=hecke weight=12 limit=2000"
    assert first.splitlines()[1] == b"1,1"


def test_divisor_cache_matches_sieve(tmp_path):
    c = load_coeffs("divisor", 500, tmp_path)
    assert np.array_equal(c.values, build_tables(500).divisor.astype(float))


def test_corrupt_cache_refused(tmp_path):
    p = cache_coeffs("hecke", 50, tmp_path)
    p.write_bytes(p.read_bytes().replace(b"\n3,252\n", b"\n3,253\n"))
    with pytest.raises(DataCorruptionError, match="checksum"):
        read_cache(p)
    # a rewrite repairs it
    cache_coeffs("hecke", 50, tmp_path)
    assert read_cache(p)[3][2] == 252


def test_tampered_values_with_valid_checksum_rejected(tmp_path):
    import hashlib
    body = "# kind=hecke weight=12 limit=3\n1,1\n2,-24\n3,999999999\n".encode()
    p = tmp_path / "bad.csv"
    p.write_bytes(body + f"# sha256={hashlib.sha256(body).hexdigest()}\n".encode())
    with pytest.raises(DataCorruptionError, match="Deligne"):
        read_cache(p)


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_cli_moment_plancherel(capsys):
    code, out = run_cli(capsys, "moment", "--kind", "divisor", "--X", "4096", "--s", "2")
    assert code == 0
    rep = json.loads(out)
    assert set(rep) == {"params", "results", "error_estimates", "runtime_ms", "fixture_version"}
    exact = float(np.sum(build_tables(4096).divisor[1:].astype(float) ** 2))
    assert rep["results"]["raw"] == pytest.approx(exact, rel=1e-8)


def test_cli_voronoi_and_jutila(capsys):
    code, out = run_cli(capsys, "voronoi-check", "--star", "d", "--q", "7", "--a", "3", "--X", "50")
    assert code == 0 and json.loads(out)["results"]["residual"] < 1e-6
    code, out = run_cli(capsys, "jutila", "--Q", "128", "--H", "8", "--format", "csv")
    header, row = out.strip().splitlines()
    assert header == "Q,H,L,defect,bound,ratio"
    Q, H, L, defect, bound, ratio = row.split(",")
    assert float(defect) <= 10 * float(bound)


def test_cli_deterministic(capsys):
    argv = ["mls-check", "--N", "32", "--R", "4", "--seed", "9"]
    a = json.loads(run_cli(capsys, *argv)[1])
    b = json.loads(run_cli(capsys, *argv)[1])
    a.pop("runtime_ms"), b.pop("runtime_ms")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


@pytest.mark.parametrize("argv", [
    ["coeffs", "--kind", "hecke", "--limit", "10"],
    ["sum", "--kind", "d", "--X", "10", "--alpha", "1/3"],
    ["moment", "--kind", "f", "--X", "100", "--s", "1"],
    ["ladder", "--star", "f", "--s", "2", "--X-start", "64", "--X-end", "512"],
    ["dist", "--X", "512"],
    ["voronoi-check", "--star", "f", "--q", "11", "--a", "4", "--X", "100"],
    ["calibrate", "--star", "d"],
    ["jutila", "--Q", "16", "--H", "2"],
    ["coprime-avg", "--Y", "4", "--q", "101"],
    ["nq-check", "--qmax", "20"],
    ["mls-check"],
    ["afe", "--star", "d", "--s", "1", "--X", "2048"],
    ["major-arc", "--s", "0.5", "--X", "4096"],
])
def test_cli_dry_run(capsys, argv):
    code, out = run_cli(capsys, *argv, "--dry-run")
    rep = json.loads(out)
    assert code == 0 and rep["plan"]["command"] == argv[0] and rep["plan"]["dry_run"]


def test_cli_sum_exact_rational(capsys):
    code, out = run_cli(capsys, "sum", "--kind", "divisor", "--X", "4", "--alpha", "1/2")
    res = json.loads(out)["results"]
    assert res["alpha"] == "1/2" and res["value"][0] == pytest.approx(2.0)


def test_cli_exit_codes(capsys, monkeypatch, tmp_path):
    code, out = run_cli(capsys, "moment", "--kind", "divisor", "--X", "0", "--s", "2")
    assert code == 2 and json.loads(out)["error"] == "InvalidArgument"
    code, out = run_cli(capsys, "coprime-avg", "--Y", "16", "--q", "1000000007")
    assert code == 4 and json.loads(out)["error"] == "ResourceLimitError"

    def boom(p, cfg):
        raise NumericError("did not converge", best=1.5, achieved=0.1)

    monkeypatch.setitem(cli.COMMANDS, "moment", boom)
    out_file = tmp_path / "err.json"
    code = cli.main(["moment", "--kind", "d", "--X", "10", "--s", "1", "--out", str(out_file)])
    rep = json.loads(out_file.read_text())
    assert code == 3 and rep["best_estimate"] == 1.5
    with pytest.raises(SystemExit) as ei:
        cli.main(["moment", "--kind", "nonsense"])
    assert ei.value.code == 2


def test_cli_cache_env(capsys, monkeypatch, tmp_path):
    monkeypatch.setenv("TWISTLAB_CACHE", str(tmp_path))
    code, out = run_cli(capsys, "moment", "--kind", "hecke", "--X", "64", "--s", "2")
    assert code == 0
    assert (tmp_path / "hecke_k12_64.csv").exists()
