#!/usr/bin/env python3
"""Re-evaluates the constants ledger in 50-digit arithmetic and compares it
with the JSON written by `soapbubble constants --out`.

usage: ledger_oracle.py CLI_PATH WORK_DIR
"""
import json
import subprocess
import sys
from pathlib import Path

from mpmath import mp, mpf, pi, gamma, sin, sqrt, log, log10, floor

mp.dps = 50

CASES = [
    (2, "1", "4*pi"),
    (2, "0.5", "pi"),
    (2, "2", "16*pi"),
    (1, "1", "2*pi"),
    (2, "0.9090909090909091", "13.412053870157534"),
]


def ledger(n, rho, area):
    omega = pi ** (mpf(n) / 2) / gamma(mpf(n) / 2 + 1)
    delta = min(rho / 64, rho / (8 * sqrt(n)))
    L = area * 2**n / (omega * delta**n)
    s = sin(delta / (2 * rho))
    r0 = rho * s
    eps0 = min(mpf(1) / 2, rho / (16 * L) * s)
    N0 = 1 + floor(log(2) / -log(1 - eps0))
    lg_c1 = (N0 + 1) * log10((1 + r0 * sqrt(5)) + 1)
    return {
        "omega_n": omega,
        "delta": delta,
        "L": L,
        "r0": r0,
        "eps0": eps0,
        "N0": N0,
        "eps1": mpf(1) / (1 + mpf(5) / 4),
        "C1.log10": lg_c1,
        "eps2.log10": -log10(64) - lg_c1,
        "eps3.log10": log10(delta / rho) - lg_c1,
        "C.log10": log10(mpf(5) / 4) + lg_c1,
        "diam_bound": area * 2 ** (2 * n) / (omega * rho**n),
    }


def lookup(doc, key):
    if "." in key:
        a, b = key.split(".")
        return doc[a][b]
    v = doc[key]
    return v["value"] if isinstance(v, dict) else v


def main():
    cli, work = sys.argv[1], Path(sys.argv[2])
    work.mkdir(parents=True, exist_ok=True)
    worst = 0.0
    failed = False
    for n, rho_s, area_s in CASES:
        rho = mpf(rho_s)
        area = mp.mpmathify(eval(area_s, {"pi": pi}))
        out = work / "ledger.json"
        subprocess.run([cli, "constants", "--n", str(n), "--rho", repr(float(rho)), "--area", repr(float(area)),
                        "--out", str(out)], check=True, stdout=subprocess.DEVNULL)
        doc = json.loads(out.read_text())
        # feed the oracle the same double inputs the program saw
        ref = ledger(n, mpf(float(rho)), mpf(float(area)))
        for key, want in ref.items():
            got = mpf(lookup(doc, key))
            rel = abs(got - want) / abs(want)
            worst = max(worst, float(rel))
            # log10 C1 is ~3e7: an absolute ulp there is ~4e-9, i.e. ~1e-16 relative
            if rel > mpf("1e-12"):
                failed = True
                print(f"n={n} rho={rho_s} area={area_s}: {key} = {got} but oracle gives {mp.nstr(want, 20)}")
    print(f"worst relative deviation {worst:.3e} over {len(CASES)} ledgers")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
