"""kgsolve command line.

Exit codes::

    0  ok
    2  parse / usage error
    3  input not unitary
    4  solver failure (non-convergence, branch ambiguity, failed split)
    5  verification failure
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import files
from .kgbasis import BasisError, PairLabel, pair
from .khk import DecompositionError, SolverConfig
from .linalg import LinalgError, check_unitary, matrix_exp, matrix_log, max_norm
from .pauli import LieElement
from .recursion import NodeKind, count_kinds, full_decompose, leaf_membership, reassemble

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NOT_UNITARY = 3
EXIT_SOLVER = 4
EXIT_VERIFY = 5


def _err(msg):
    print(f"kgsolve: {msg}", file=sys.stderr)


def _leaf_rows(tree):
    for path, leaf in _walk(tree.root, ""):
        if leaf.generator is not None:
            gnorm = leaf.generator.norm()
        else:
            try:
                gnorm = max_norm(matrix_log(leaf.matrix))
            except LinalgError:
                gnorm = float("nan")
        yield path, leaf, gnorm, leaf_membership(leaf)


def _walk(node, prefix):
    path = f"{prefix}/{node.label}" if node.label else prefix
    if node.kind is NodeKind.COMPOSITE:
        for c in node.children:
            yield from _walk(c, path)
    else:
        yield path, node


def _print_table(tree, out=sys.stdout):
    print(f"{'kind':<6} {'lvl':>3} {'qubit':>5} {'gen norm':>10} {'membership':>11}  path", file=out)
    for path, leaf, gnorm, memb in _leaf_rows(tree):
        q = "" if leaf.qubit is None else str(leaf.qubit)
        print(f"{leaf.kind.value:<6} {leaf.level:>3} {q:>5} {gnorm:10.3e} {memb:11.3e}  {path}", file=out)


def cmd_decompose(args) -> int:
    try:
        G = files.read_matrix(args.input)
    except files.FileFormatError as e:
        _err(str(e))
        return EXIT_PARSE
    try:
        G = check_unitary(G)
    except LinalgError as e:
        _err(str(e))
        return EXIT_NOT_UNITARY
    if G.shape[0] < 4:
        _err("need at least two qubits")
        return EXIT_PARSE
    try:
        cfg = SolverConfig(p=args.p, q=args.q, max_order=args.max_order, reassembly_tol=args.tol, seed=args.seed)
    except ValueError as e:
        _err(str(e))
        return EXIT_PARSE
    try:
        tree = full_decompose(G, cfg)
    except DecompositionError as e:
        _err(f"decomposition failed at stage {e.stage}: {e}")
        for k, v in sorted(e.diagnostics.items()):
            _err(f"  {k} = {v}")
        return EXIT_SOLVER
    except LinalgError as e:
        _err(f"decomposition failed: {e}")
        return EXIT_SOLVER
    memb = max(leaf_membership(l) for l in tree.root.leaves())
    residuals = {"reassembly": tree.residual, "max_leaf_membership": memb}
    out = args.out or str(Path(args.input).with_suffix("")) + ".tree.json"
    files.write_tree(out, tree, residuals)
    _print_table(tree)
    counts = ", ".join(f"{k}={v}" for k, v in sorted(count_kinds(tree.root).items()))
    print(f"leaves: {counts}")
    print(f"reassembly residual: {tree.residual:.3e} (tolerance {tree.tolerance:.1e})")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        tree = files.read_tree(args.tree)
        G = files.read_matrix(args.original)
    except files.FileFormatError as e:
        _err(str(e))
        return EXIT_PARSE
    if G.shape[0] != 2**tree.root.level:
        _err(f"dimension mismatch: tree is {tree.root.level} qubits, matrix is {G.shape[0]}x{G.shape[0]}")
        return EXIT_PARSE
    residual = max_norm(reassemble(tree) - G)
    rows = list(_leaf_rows(tree))
    worst = max((r[3] for r in rows), default=0.0)
    _print_table(tree)
    print(f"reassembly residual: {residual:.3e}")
    print(f"max leaf membership: {worst:.3e}")
    ok = residual <= tree.tolerance and worst <= tree.tolerance
    print(f"{'PASS' if ok else 'FAIL'} (tolerance {tree.tolerance:.1e})")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_basis(args) -> int:
    n = args.n
    try:
        p = pair(n, args.pair)
    except BasisError as e:
        _err(str(e))
        return EXIT_PARSE
    if p.label is PairLabel.PRIMARY_PAIR:
        names = ("m", "k", "h")
        cols = (p.m, p.k, p.h)
    else:
        names = ("k_n1", "k_n0", "f")
        cols = (p.m, p.k, p.h)
    print(f"n={n} pair={p.label.value}")
    print(f"{'string':<{max(n, 6)}} " + " ".join(f"{c:>4}" for c in names))
    for s in p.ambient:
        marks = " ".join(f"{'x' if s in c else '.':>4}" for c in cols)
        print(f"{s:<{max(n, 6)}} {marks}")
    for name, c in zip(names, cols):
        print(f"{name} ({len(c)}): {' '.join(c)}")
    return EXIT_OK


def random_su(n: int, scale: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    a = LieElement(n, rng.uniform(-scale, scale, size=4**n - 1))
    return matrix_exp(a.matrix())


def cmd_random(args) -> int:
    G = random_su(args.n, args.scale, args.seed)
    if args.out:
        files.write_matrix(args.out, G)
    else:
        sys.stdout.write(files.dumps({"n": args.n, "rows": files.matrix_to_json(G)}))
    return EXIT_OK


def _n_arg(lo):
    def parse(s):
        v = int(s)
        if v < lo:
            raise argparse.ArgumentTypeError(f"n must be >= {lo}")
        return v
    return parse


def _scale(s):
    v = float(s)
    if v < 0:
        raise argparse.ArgumentTypeError("scale must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kgsolve", description="Recursive Cartan (KHK) factorization of SU(2^N)")
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decompose", help="factor a MatrixFile into a TreeFile")
    d.add_argument("input")
    d.add_argument("--p", type=int, default=3)
    d.add_argument("--q", type=int, default=3)
    d.add_argument("--max-order", type=int, default=7)
    d.add_argument("--tol", type=float, default=1e-8, help="per-level reassembly tolerance")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out")
    d.set_defaults(func=cmd_decompose)

    v = sub.add_parser("verify", help="re-check a TreeFile against the original matrix")
    v.add_argument("tree")
    v.add_argument("original")
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("basis", help="print the partition tables at level n")
    b.add_argument("n", type=_n_arg(2))
    b.add_argument("--pair", choices=[l.value for l in PairLabel], default="primary")
    b.set_defaults(func=cmd_basis)

    r = sub.add_parser("random", help="emit exp(a) for a seeded random a")
    r.add_argument("n", type=_n_arg(2))
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--scale", type=_scale, default=0.1)
    r.add_argument("--out")
    r.set_defaults(func=cmd_random)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
