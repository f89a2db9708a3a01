"""Recursive factorization of SU(2^N) into a factor tree.

Each level ``n >= 3`` performs two Cartan passes and yields seven factors

    G = K(1) F(1) K(2) H K(3) F(2) K(4)

where ``K(1) = P_A K0' K1'``, ``K(2) = K1'^dagger``, ``K(3) = P_B K0'' K1''``,
``K(4) = K1''^dagger`` and ``P_A``, ``P_B`` are the central phases removed by
hat-stripping ``K0 K1`` and ``K1^dagger``.  Every ``K`` factor splits as
``A (x) B`` with ``A`` in SU(2^(n-1)) recursed upon and ``B`` a single-qubit
local on qubit ``n - 1``.  Level 2 is the plain ``K H K`` split with local
``K`` factors.

A node of level ``n`` acts on qubits ``0 .. n-1`` (the leftmost tensor slots);
LOCAL leaves act on their own ``qubit``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import pauli
from .kgbasis import cartan_generators, kg_partition, off_norm, primary_pair, secondary_pair
from .khk import DecompositionError, SolverConfig, khk_decompose
from .linalg import check_unitary, dagger, matrix_exp, max_norm, nearest_kronecker, su_log, su_normalize
from .pauli import LieElement


class NodeKind(enum.Enum):
    H_FACTOR = "H"
    F_FACTOR = "F"
    LOCAL = "LOCAL"
    PHASE = "PHASE"
    COMPOSITE = "COMPOSITE"


LEAF_KINDS = (NodeKind.H_FACTOR, NodeKind.F_FACTOR, NodeKind.LOCAL, NodeKind.PHASE)


@dataclass
class FactorNode:
    kind: NodeKind
    level: int
    matrix: np.ndarray
    generator: LieElement | None = None
    children: list[FactorNode] = field(default_factory=list)
    qubit: int | None = None
    label: str = ""
    diagnostics: dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_generator(cls, kind, gen: LieElement, label=""):
        return cls(kind, gen.n, matrix_exp(gen.matrix()), generator=gen, label=label)

    @classmethod
    def composite(cls, level, children, label=""):
        M = np.eye(2**level, dtype=complex)
        for c in children:
            M = M @ embed(c, level)
        return cls(NodeKind.COMPOSITE, level, M, children=list(children), label=label)

    def leaves(self):
        if self.kind is NodeKind.COMPOSITE:
            for c in self.children:
                yield from c.leaves()
        else:
            yield self


@dataclass
class FactorTree:
    root: FactorNode
    config: SolverConfig
    global_phase: float
    tolerance: float
    residual: float = float("nan")


def tree_tolerance(cfg: SolverConfig, N: int) -> float:
    """Reassembly budget for an ``N``-qubit tree: one decade per level below N."""
    return cfg.reassembly_tol * 10 ** max(N - 2, 0)


def embed(node: FactorNode, N: int) -> np.ndarray:
    """Lift a node's matrix to ``N`` qubits."""
    if node.kind is NodeKind.LOCAL:
        q = node.qubit
        return np.kron(np.kron(np.eye(2**q), node.matrix), np.eye(2 ** (N - q - 1)))
    if node.level == N:
        return node.matrix
    return np.kron(node.matrix, np.eye(2 ** (N - node.level)))


def center_string(n: int) -> str:
    return "I" * (n - 1) + "Z"


def hat_strip(K: np.ndarray, n: int, tol: float = 1e-8) -> tuple[np.ndarray, FactorNode]:
    """Split ``K = exp(theta I..IZ) K_hat`` with ``log K_hat`` free of the center."""
    k = pauli.from_matrix(su_log(K), n, tol=1e-6)
    part = kg_partition(n)
    off = off_norm(k, part.k_n)
    if off > tol:
        raise DecompositionError("hat_strip", "log(K) lies outside k_n", off_k=off)
    c = center_string(n)
    theta = k.coeffs.get(c, 0.0)
    phase = LieElement.from_dict(n, {c: theta}) if theta else LieElement.zero(n)
    K_hat = matrix_exp((k - phase).matrix())
    return K_hat, FactorNode.from_generator(NodeKind.PHASE, phase, label="phase")


def split_tensor(K: np.ndarray, n: int, tol: float = 1e-8):
    """``K = A (x) B`` with ``A`` on the first ``n - 1`` qubits; returns ``(A, B, residual)``."""
    try:
        return nearest_kronecker(K, 2 ** (n - 1), 2, tol=tol)
    except ValueError as e:
        raise DecompositionError("split_tensor", str(e), residual=getattr(e, "residual", np.inf)) from e


def _local(level, qubit, U, label="", residual=None):
    node = FactorNode(NodeKind.LOCAL, level, U, qubit=qubit, label=label)
    if residual is not None:
        node.diagnostics["kronecker_residual"] = residual
    return node


def _split_locals_2(K, label, tol):
    A, B, res = split_tensor(K, 2, tol)
    return FactorNode.composite(2, [_local(2, 0, A, f"{label}.q0", res), _local(2, 1, B, f"{label}.q1", res)], label)


def _decompose_level2(G, cfg) -> FactorNode:
    pr = primary_pair(2)
    r = khk_decompose(G, pr, cfg)
    left = _split_locals_2(r.K0 @ r.K1, "K1", cfg.reassembly_tol)
    H = FactorNode.from_generator(NodeKind.H_FACTOR, r.h, "H")
    H.diagnostics.update(off_h=r.off_h, off_k=r.off_k, gradient=r.gradient)
    right = _split_locals_2(dagger(r.K1), "K2", cfg.reassembly_tol)
    return FactorNode.composite(2, [left, H, right], label="level2")


def _k_factor(W, n, label, cfg, expand, phase=None) -> FactorNode:
    A, B, res = split_tensor(W, n, cfg.reassembly_tol)
    # unexpanded blocks stay as opaque composites holding the A matrix
    sub = expand(A, n - 1) if expand else FactorNode(NodeKind.COMPOSITE, n - 1, A)
    sub.label = f"{label}.A"
    children = ([phase] if phase is not None else []) + [sub, _local(n, n - 1, B, f"{label}.B", res)]
    node = FactorNode.composite(n, children, label)
    node.diagnostics["kronecker_residual"] = res
    return node


def level_decompose(G: np.ndarray, n: int, cfg: SolverConfig = SolverConfig(), expand=None) -> list[FactorNode]:
    """Seven factor nodes ``[K(1), F(1), K(2), H, K(3), F(2), K(4)]`` for ``n >= 3``.

    ``expand(A, n - 1)`` turns the SU(2^(n-1)) part of each ``K`` factor into a
    subtree; without it those parts are left as childless composites that
    still carry their matrix.
    """
    if n < 3:
        raise ValueError("level_decompose needs n >= 3; level 2 is a single KHK pass")
    tol = cfg.reassembly_tol
    r = khk_decompose(G, primary_pair(n), cfg)
    A_hat, PA = hat_strip(r.K0 @ r.K1, n, tol)
    B_hat, PB = hat_strip(dagger(r.K1), n, tol)
    sec = secondary_pair(n)
    nodes = []
    try:
        s1 = khk_decompose(A_hat, sec, cfg)
        s2 = khk_decompose(B_hat, sec, cfg)
    except DecompositionError as e:
        e.diagnostics.setdefault("level", n)
        raise
    H = FactorNode.from_generator(NodeKind.H_FACTOR, r.h, "H")
    H.diagnostics.update(off_h=r.off_h, off_k=r.off_k, gradient=r.gradient)
    F1 = FactorNode.from_generator(NodeKind.F_FACTOR, s1.h, "F1")
    F1.diagnostics.update(off_h=s1.off_h, off_k=s1.off_k, gradient=s1.gradient)
    F2 = FactorNode.from_generator(NodeKind.F_FACTOR, s2.h, "F2")
    F2.diagnostics.update(off_h=s2.off_h, off_k=s2.off_k, gradient=s2.gradient)
    plan = [
        ("K1", s1.K0 @ s1.K1, PA),
        ("F1", F1, None),
        ("K2", dagger(s1.K1), None),
        ("H", H, None),
        ("K3", s2.K0 @ s2.K1, PB),
        ("F2", F2, None),
        ("K4", dagger(s2.K1), None),
    ]
    for j, (label, item, phase) in enumerate(plan):
        if isinstance(item, FactorNode):
            nodes.append(item)
            continue
        try:
            nodes.append(_k_factor(item, n, label, cfg, expand, phase))
        except DecompositionError as e:
            e.diagnostics.setdefault("factor_index", j)
            e.diagnostics.setdefault("level", n)
            e.partial = nodes
            raise
    return nodes


def _decompose_block(U: np.ndarray, n: int, cfg: SolverConfig) -> FactorNode:
    if n == 2:
        return _decompose_level2(U, cfg)
    nodes = level_decompose(U, n, cfg, expand=lambda A, m: _decompose_block(A, m, cfg))
    return FactorNode.composite(n, nodes, label=f"level{n}")


def full_decompose(G: np.ndarray, cfg: SolverConfig = SolverConfig()) -> FactorTree:
    G = check_unitary(G)
    d = G.shape[0]
    N = int(round(np.log2(d)))
    if 2**N != d or N < 2:
        raise ValueError(f"dimension {d} is not 2^N with N >= 2")
    Gs, theta = su_normalize(G)
    root = _decompose_block(Gs, N, cfg)
    tree = FactorTree(root, cfg, theta, tree_tolerance(cfg, N))
    tree.residual = max_norm(reassemble(tree) - G)
    if tree.residual > tree.tolerance:
        raise DecompositionError("reassembly", "tree product does not reproduce the input", residual=tree.residual)
    return tree


def reassemble(tree: FactorTree) -> np.ndarray:
    """Ordered product of the leaves, times the stored global phase."""
    N = tree.root.level
    out = np.eye(2**N, dtype=complex)
    for leaf in tree.root.leaves():
        out = out @ embed(leaf, N)
    return out * np.exp(1j * tree.global_phase / 2**N)


def leaf_membership(leaf: FactorNode) -> float:
    """Distance of a leaf from its declared factor class."""
    n = leaf.level
    if leaf.kind is NodeKind.LOCAL:
        return max_norm(dagger(leaf.matrix) @ leaf.matrix - np.eye(2))
    if leaf.kind is NodeKind.H_FACTOR:
        sub = primary_pair(n).h
    elif leaf.kind is NodeKind.F_FACTOR:
        sub = cartan_generators(n)[1]
    else:
        sub = kg_partition(n).center
    return max(off_norm(leaf.generator, sub), max_norm(matrix_exp(leaf.generator.matrix()) - leaf.matrix))


def count_kinds(node: FactorNode) -> dict[str, int]:
    counts: dict[str, int] = {}
    for leaf in node.leaves():
        counts[leaf.kind.value] = counts.get(leaf.kind.value, 0) + 1
    return counts
