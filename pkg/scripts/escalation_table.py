"""Median truncated and exact residuals of the m-solve per truncation order.

    python3 scripts/escalation_table.py --scale 0.1 --count 20
"""
import argparse

import numpy as np

from kgsolve import pauli
from kgsolve.cli import random_su
from kgsolve.kgbasis import off_norm, primary_pair
from kgsolve.khk import solve_truncated
from kgsolve.linalg import matrix_exp, su_log


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--scale", type=float, default=0.1)
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--max-order", type=int, default=7)
    a = ap.parse_args()
    pr = primary_pair(2)
    inputs = [random_su(2, a.scale, s) for s in range(a.count)]
    print(f"{'order':>5} {'truncated':>12} {'exact off-k':>12}")
    for p in range(1, a.max_order + 1):
        tr, ex = [], []
        for G in inputs:
            g = pauli.from_matrix(su_log(G), 2, tol=1e-6)
            m, res = solve_truncated(g, pr, p, p)
            k = pauli.from_matrix(su_log(G @ matrix_exp(-m.matrix())), 2, tol=1e-6)
            tr.append(res)
            ex.append(off_norm(k, pr.k))
        print(f"{p:>5} {np.median(tr):12.2e} {np.median(ex):12.2e}")


if __name__ == "__main__":
    main()
