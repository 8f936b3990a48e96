"""Pilot run: compute the empirical quantities behind the frozen test thresholds.

Writes tests/fixtures/pilot.json. Thresholds are fixed in that file once and
the test suite regresses against them; rerun only when the numerics change on
purpose (and bump ``version``).
"""
from __future__ import annotations

import argparse
import json
import math
import time
from pathlib import Path

import numpy as np

from twistlab.arith import hecke_coeffs, divisor_coeffs, next_prime
from twistlab.circle import coprime_average_vs_integral, maximal_large_sieve_check
from twistlab.expsum import sup_norm
from twistlab.moments import afe_check, distribution, ks_distance
from twistlab.voronoi import major_arc_profile

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "pilot.json"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=OUT)
    ap.add_argument("--skip-afe", action="store_true")
    args = ap.parse_args(argv)
    t0 = time.perf_counter()
    obs = {}

    ma = major_arc_profile(0.5, 4096, 0.125)
    obs["major_arc_ratio"] = ma.ratio
    print(f"major arc ratio       {ma.ratio:.6f}")

    f = hecke_coeffs(1 << 14)
    sups = {}
    for e in range(10, 15):
        X = 1 << e
        sups[str(X)] = sup_norm(f, X).value / math.sqrt(X)
        print(f"sup/sqrt(X) X={X:<6d} {sups[str(X)]:.6f}")
    obs["sup_over_sqrtX"] = sups

    a = distribution(8192, coeffs=f).samples
    b = distribution(16384, coeffs=f).samples
    obs["ks_8192_16384"] = ks_distance(a, b)
    print(f"KS(8192, 16384)       {obs['ks_8192_16384']:.6f}")

    rng = np.random.default_rng(20240601)
    ratios = []
    for _ in range(20):
        coef = rng.choice([-1.0, 1.0], 64)
        freqs = np.sort(rng.uniform(0, 1, 8))
        eta = float(np.min(np.diff(np.concatenate([freqs, [freqs[0] + 1]]))))
        ratios.append(maximal_large_sieve_check(coef, freqs, eta))
    obs["mls_ratio_max"] = max(ratios)
    print(f"max large-sieve ratio {obs['mls_ratio_max']:.6f}")

    d = divisor_coeffs(4)
    q = 1048583
    diffs = []
    for p in (q, next_prime(2 * q), next_prime(4 * q)):
        diffs.append(coprime_average_vs_integral(d, 4, p, 1.0).diff)
    obs["coprime_diffs"] = diffs
    print(f"coprime diffs         {diffs}")

    if not args.skip_afe:
        r = afe_check("d", 1.0, 2048, X1=16, diagnostics=False)
        obs["afe_rel_diff_2048"] = r.rel_diff
        print(f"afe rel diff X=2048   {r.rel_diff:.6f}")

    fixture = {
        "version": "pilot-1",
        "observed": obs,
        "thresholds": {
            # half the observed ratio, rounded down to two significant digits
            "major_arc_ratio_min": float(f"{ma.ratio / 2:.2g}"),
            "sup_ceiling": 5.0,
            "ks_max": 0.05,
            "mls_ratio_max": 10.0,
            "coprime_diff_max": 0.02,
            "afe_rel_max": 0.1,
        },
    }
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(fixture, indent=2, sort_keys=True) + "\n")
    print(f"wrote {args.out} in {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
