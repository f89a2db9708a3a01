"""Acceptance criteria, each run at its stated tolerance.

Every criterion records one ``[PASS]``/``[FAIL]`` line; pytest echoes them in
the terminal summary and ``python3 tests/test_acceptance.py`` prints them
directly.
"""
import contextlib
import io
import itertools
import sys
import time
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest
import scipy.linalg as sla

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_LINES, generator_of, random_element, random_su  # noqa: E402

from kgsolve import bch, cli, pauli  # noqa: E402
from kgsolve.kgbasis import cartan_generators, kg_partition, off_norm, primary_pair, secondary_pair  # noqa: E402
from kgsolve.khk import DecompositionError, SolverConfig, khk_decompose, solve_truncated  # noqa: E402
from kgsolve.linalg import dagger, matrix_exp, max_norm  # noqa: E402
from kgsolve.recursion import NodeKind, full_decompose, leaf_membership  # noqa: E402


def record(tag, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


# ---------------------------------------------------------------- criterion 1


def _closed(p):
    def lands(s, t, target):
        sign, r = pauli.string_bracket(s, t)
        return sign == 0 or r in target

    k, m = set(p.k), set(p.m)
    return (
        all(lands(a, b, k) for a, b in itertools.product(p.k, p.k))
        and all(lands(a, b, m) for a, b in itertools.product(p.m, p.k))
        and all(lands(a, b, k) for a, b in itertools.product(p.m, p.m))
    )


def _abelian(sub):
    return all(pauli.string_bracket(a, b)[0] == 0 for a, b in itertools.combinations(sub, 2))


def test_c1_basis_correctness():
    t0 = time.perf_counter()
    checks = {}
    for n in (2, 3, 4):
        checks[f"primary n={n}"] = _closed(primary_pair(n))
        if n >= 3:
            checks[f"secondary n={n}"] = _closed(secondary_pair(n))
        h, f = cartan_generators(n)
        checks[f"h,f abelian n={n}"] = _abelian(h) and _abelian(f)
    h3, f3 = cartan_generators(3)
    checks["h_3"] = set(h3) == {"IIX", "XXX", "YYX", "ZZX"}
    checks["f_3"] = set(f3) == {"XXZ", "YYZ", "ZZZ"}
    part2 = kg_partition(2)
    checks["su(4) table"] = set(part2.k_n) == {"XI", "YI", "ZI", "IX", "IY", "IZ"} and len(part2.m_n) == 9
    dt = time.perf_counter() - t0
    bad = [k for k, v in checks.items() if not v]
    ok = not bad and dt < 10
    record("C1 basis correctness", ok, f"{len(checks) - len(bad)}/{len(checks)} exact checks, {dt:.2f}s (limit 10s)")
    assert ok, bad


# ---------------------------------------------------------------- criterion 2

# coefficients as displayed: (i, j) -> (associative form of the bracket, value)
DISPLAYED = {
    (1, 1): ("ab", Fraction(1, 2)),
    (2, 1): ("aab", Fraction(1, 12)),
    (1, 2): ("bba", Fraction(1, 12)),
    (2, 2): ("abab", Fraction(1, 24)),
}


def _displayed_match(i, j):
    word, c = DISPLAYED[(i, j)]
    return bch.expand_associative(bch.dynkin_words(i, j)) == bch.expand_associative({word: c})


def _magnitude_match(i, j):
    word, c = DISPLAYED[(i, j)]
    got = bch.expand_associative(bch.dynkin_words(i, j))
    return got == bch.expand_associative({word: c}) or got == bch.expand_associative({word: -c})


@lru_cache(maxsize=None)
def _bch_oracle_run():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        # ||a||, ||b|| <= 0.1 in the realized max-entry norm
        a, b = (random_element(2, 1.0, rng) for _ in range(2))
        a, b = a * (0.1 / a.norm()) * rng.uniform(0.1, 1), b * (0.1 / b.norm()) * rng.uniform(0.1, 1)
        ref = sla.logm(matrix_exp(a.matrix()) @ matrix_exp(b.matrix()))
        worst = max(worst, max_norm(bch.bch_log(a, b, 6).matrix() - ref))
    return worst, time.perf_counter() - t0


def test_c2_bch_dense_oracle():
    worst, dt = _bch_oracle_run()
    mags = all(_magnitude_match(i, j) for i, j in DISPLAYED)
    ok = worst < 1e-8 and dt < 30 and mags
    record(
        "C2b BCH cap-6 vs logm",
        ok,
        f"max error {worst:.2e} on 100 su(4) pairs (limit 1e-8), |T| magnitudes {'match' if mags else 'differ'}, {dt:.2f}s",
    )
    assert ok


@pytest.mark.xfail(strict=True, reason="displayed +1/24 for T22 disagrees with the free-algebra and dense-log oracles (-1/24)")
def test_c2_bch_displayed_coefficients():
    res = {ij: _displayed_match(*ij) for ij in DISPLAYED}
    ok = all(res.values())
    got22 = bch.dynkin_words(2, 2)
    record(
        "C2a BCH displayed coefficients",
        ok,
        "T11 {} T21 {} T12 {} T22 {} (computed T22 = {} = -1/24 [a,[b,[a,b]]])".format(
            *("ok" if res[ij] else "MISMATCH" for ij in [(1, 1), (2, 1), (1, 2), (2, 2)]),
            {w: str(c) for w, c in got22.items()},
        ),
    )
    assert ok


# ------------------------------------------------------------ criteria 3, 5, 6


@lru_cache(maxsize=None)
def _su4_suite(scale=0.5, count=20):
    out = []
    t0 = time.perf_counter()
    pr = primary_pair(2)
    for seed in range(count):
        G = random_su(2, scale, 1000 + seed)
        try:
            out.append((G, khk_decompose(G, pr)))
        except DecompositionError as e:
            out.append((G, e))
    return out, time.perf_counter() - t0


def test_c3_single_pair_su4():
    suite, dt = _su4_suite()
    pr = primary_pair(2)
    good, errors, wrong = 0, 0, 0
    worst = [0.0, 0.0, 0.0]
    for G, r in suite:
        if isinstance(r, DecompositionError):
            errors += 1
            continue
        reas = max_norm(G - r.K0 @ r.K1 @ r.H @ dagger(r.K1))
        offk = off_norm(generator_of(r.K0, 2), pr.k)
        offh = off_norm(pauli.from_matrix(dagger(r.K1) @ r.m.matrix() @ r.K1, 2), pr.h)
        worst = [max(w, x) for w, x in zip(worst, (reas, offk, offh))]
        if reas < 1e-8 and offk < 1e-8 and offh < 1e-7:
            good += 1
        else:
            wrong += 1
    ok = good >= 19 and wrong == 0 and dt < 120
    record(
        "C3 single-pair KHK SU(4)",
        ok,
        f"{good}/20 certified, {errors} raised, {wrong} wrong; worst reassembly {worst[0]:.1e}, "
        f"off-k {worst[1]:.1e}, off-h {worst[2]:.1e}; {dt:.1f}s",
    )
    assert ok


def test_c5_escalation():
    pr = primary_pair(2)
    suite, _ = _su4_suite()
    r11, r33 = [], []
    for G, _ in suite:
        g = generator_of(G, 2)
        r11.append(solve_truncated(g, pr, 1, 1)[1])
        r33.append(solve_truncated(g, pr, 3, 3)[1])
    med11, med33 = float(np.median(r11)), float(np.median(r33))
    cfg = SolverConfig()
    reached, orders = 0, []
    for seed in range(20):
        G = random_su(2, 0.1, 2000 + seed)
        r = khk_decompose(G, pr, cfg)
        hit = [pq for pq in r.report.history if pq[2] <= cfg.root_tol]
        if hit and max(hit[0][:2]) <= 7:
            reached += 1
            orders.append(max(hit[0][:2]))
    ok = med33 < med11 and reached >= 18
    record(
        "C5 truncation escalation",
        ok,
        f"median residual (1,1) {med11:.2e} > (3,3) {med33:.2e}; root_tol reached on {reached}/20 "
        f"scale-0.1 inputs (orders {sorted(set(orders))})",
    )
    assert ok


def test_c6_first_order_condition():
    suite, _ = _su4_suite()
    worst_g, worst_k = 0.0, 0.0
    for _, r in suite:
        if isinstance(r, DecompositionError):
            continue
        worst_g = max(worst_g, r.gradient)
        worst_k = max(worst_k, abs(pauli.killing_form(r.h, r.h) - pauli.killing_form(r.m, r.m)))
    ok = worst_g < 1e-7 and worst_k < 1e-8
    record("C6 stationarity", ok, f"max k-gradient {worst_g:.1e} (limit 1e-7), Killing norm gap {worst_k:.1e} (limit 1e-8)")
    assert ok


# ---------------------------------------------------------------- criterion 4


def _nodes(node):
    yield node
    for c in node.children:
        yield from _nodes(c)


def test_c4_full_recursion_su8():
    t0 = time.perf_counter()
    worst_kron, worst_e2e, worst_memb, bad = 0.0, 0.0, 0.0, []
    for seed in range(10):
        G = random_su(3, 0.1, 3000 + seed)
        try:
            tree = full_decompose(G)
        except DecompositionError as e:
            bad.append((seed, e.stage))
            continue
        top = [c.label for c in tree.root.children]
        if top != ["K1", "F1", "K2", "H", "K3", "F2", "K4"]:
            bad.append((seed, "shape"))
        kron = max(n.diagnostics.get("kronecker_residual", 0.0) for n in _nodes(tree.root))
        out = np.eye(8, dtype=complex)
        for leaf in tree.root.leaves():
            if leaf.kind is NodeKind.LOCAL:
                q = leaf.qubit
                M = np.kron(np.kron(np.eye(2**q), leaf.matrix), np.eye(2 ** (2 - q)))
            else:
                M = np.kron(leaf.matrix, np.eye(2 ** (3 - leaf.level)))
            out = out @ M
        e2e = max_norm(out * np.exp(1j * tree.global_phase / 8) - G)
        memb = max(leaf_membership(l) for l in tree.root.leaves())
        worst_kron, worst_e2e, worst_memb = max(worst_kron, kron), max(worst_e2e, e2e), max(worst_memb, memb)
        if kron >= 1e-8 or e2e >= 1e-6 or memb >= 1e-8:
            bad.append((seed, "tolerance"))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 600
    record(
        "C4 full recursion SU(8)",
        ok,
        f"{10 - len(bad)}/10 ok; Kronecker residual {worst_kron:.1e} (limit 1e-8), end-to-end {worst_e2e:.1e} "
        f"(limit 1e-6), leaf membership {worst_memb:.1e}; {dt:.1f}s",
    )
    assert ok, bad


# ---------------------------------------------------------------- criterion 7


def test_c7_determinism(tmp_path):
    g = tmp_path / "g.json"
    cli.main(["random", "3", "--seed", "17", "--out", str(g)])
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    with contextlib.redirect_stdout(io.StringIO()):
        ra = cli.main(["decompose", str(g), "--seed", "4", "--out", str(a)])
        rb = cli.main(["decompose", str(g), "--seed", "4", "--out", str(b)])
    ok = ra == rb == 0 and a.read_bytes() == b.read_bytes()
    record("C7 determinism", ok, f"two SU(8) TreeFiles, {a.stat().st_size} bytes, identical={a.read_bytes() == b.read_bytes()}")
    assert ok


# ---------------------------------------------------------------- criterion 8


def test_c8_structural_count():
    tree = full_decompose(random_su(3, 0.1, 4000))
    top = tree.root.children
    nH = sum(c.kind is NodeKind.H_FACTOR for c in top)
    nF = sum(c.kind is NodeKind.F_FACTOR for c in top)
    nK = sum(c.kind is NodeKind.COMPOSITE for c in top)
    t2 = full_decompose(random_su(2, 0.1, 4001))
    kinds2 = [c.kind for c in t2.root.children]
    lvl2 = kinds2 == [NodeKind.COMPOSITE, NodeKind.H_FACTOR, NodeKind.COMPOSITE] and all(
        g.kind is NodeKind.LOCAL for c in t2.root.children if c.kind is NodeKind.COMPOSITE for g in c.children
    )
    ok = (nH, nF, nK) == (1, 2, 4) and lvl2
    record("C8 structural count", ok, f"n=3: H={nH} F={nF} K={nK}; n=2: H + 2 local layers {'ok' if lvl2 else 'wrong'}")
    assert ok


if __name__ == "__main__":
    import tempfile

    tests = [
        test_c1_basis_correctness,
        test_c2_bch_displayed_coefficients,
        test_c2_bch_dense_oracle,
        test_c3_single_pair_su4,
        test_c4_full_recursion_su8,
        test_c5_escalation,
        test_c6_first_order_condition,
        lambda: test_c7_determinism(Path(tempfile.mkdtemp())),
        test_c8_structural_count,
    ]
    for t in tests:
        try:
            t()
        except AssertionError:
            pass
