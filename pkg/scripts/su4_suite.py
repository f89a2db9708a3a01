"""Single-pair KHK on random SU(4) inputs: certificates and orders used.

    python3 scripts/su4_suite.py --scale 0.5 --count 20
"""
import argparse
import time
from collections import Counter

import numpy as np

from kgsolve import pauli
from kgsolve.cli import random_su
from kgsolve.kgbasis import off_norm, primary_pair
from kgsolve.khk import DecompositionError, khk_decompose
from kgsolve.linalg import dagger, max_norm, su_log


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--scale", type=float, default=0.5)
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--seed0", type=int, default=1000)
    a = ap.parse_args()
    pr = primary_pair(2)
    orders, worst, fails = Counter(), np.zeros(4), 0
    t0 = time.perf_counter()
    for s in range(a.seed0, a.seed0 + a.count):
        G = random_su(2, a.scale, s)
        try:
            r = khk_decompose(G, pr)
        except DecompositionError as e:
            fails += 1
            print(f"seed {s}: {e} {e.diagnostics}")
            continue
        k0 = pauli.from_matrix(su_log(r.K0), 2, tol=1e-6)
        vals = (max_norm(G - r.K0 @ r.K1 @ r.H @ dagger(r.K1)), off_norm(k0, pr.k), r.off_h, r.gradient)
        worst = np.maximum(worst, vals)
        reached = [pq for pq in r.report.history if pq[2] <= 1e-10]
        orders[reached[0][:2] if reached else "exhausted"] += 1
    print(f"{a.count - fails}/{a.count} certified in {time.perf_counter() - t0:.1f}s")
    print("worst reassembly {:.1e}  off-k {:.1e}  off-h {:.1e}  gradient {:.1e}".format(*worst))
    print("truncation order reaching root_tol:", dict(orders))


if __name__ == "__main__":
    main()
