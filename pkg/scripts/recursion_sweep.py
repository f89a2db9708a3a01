"""Full recursive decomposition over seeded random SU(2^N) inputs.

    python3 scripts/recursion_sweep.py --n 3 --scale 0.1 --count 10
"""
import argparse
import time
from dataclasses import dataclass

import numpy as np

from kgsolve.cli import random_su
from kgsolve.khk import DecompositionError, SolverConfig
from kgsolve.linalg import max_norm
from kgsolve.recursion import count_kinds, full_decompose, leaf_membership, reassemble


@dataclass
class SweepConfig:
    n: int = 3
    scale: float = 0.1
    count: int = 10
    seed0: int = 0


def run(sc: SweepConfig, cfg: SolverConfig):
    rows = []
    for s in range(sc.seed0, sc.seed0 + sc.count):
        G = random_su(sc.n, sc.scale, s)
        t0 = time.perf_counter()
        try:
            tree = full_decompose(G, cfg)
        except DecompositionError as e:
            rows.append((s, time.perf_counter() - t0, None, e.stage, e.diagnostics))
            continue
        dt = time.perf_counter() - t0
        memb = max(leaf_membership(l) for l in tree.root.leaves())
        rows.append((s, dt, max_norm(reassemble(tree) - G), memb, count_kinds(tree.root)))
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--scale", type=float, default=0.1)
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--seed0", type=int, default=0)
    a = ap.parse_args()
    rows = run(SweepConfig(a.n, a.scale, a.count, a.seed0), SolverConfig())
    fails = 0
    for s, dt, res, memb, extra in rows:
        if res is None:
            fails += 1
            print(f"seed {s:4d}  {dt:6.1f}s  FAILED at {memb}: {extra}")
        else:
            print(f"seed {s:4d}  {dt:6.1f}s  residual {res:.2e}  membership {memb:.2e}  {extra}")
    times = [r[1] for r in rows]
    print(f"{len(rows) - fails}/{len(rows)} succeeded, median {np.median(times):.1f}s")


if __name__ == "__main__":
    main()
