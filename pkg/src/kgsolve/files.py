"""JSON layouts for matrices and factor trees.

MatrixFile::

    {"n": 2, "rows": [[[re, im], ...], ...]}

TreeFile::

    {"format": "kgsolve-tree/1", "n": N, "global_phase": theta,
     "tolerance": tol, "config": {...}, "residuals": {...}, "root": node}

where a node is ``{"kind", "level", "label", ...}`` plus ``"generator"``
(Pauli label -> coefficient) for H/F/PHASE leaves, ``"qubit"`` and a 2x2
``"matrix"`` for LOCAL leaves, and ``"children"`` for composites.  Only the
root composite stores its full matrix.  Floats are written with ``repr``, which
round-trips doubles exactly.
"""
from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from .khk import SolverConfig
from .pauli import LieElement
from .linalg import matrix_exp
from .recursion import FactorNode, FactorTree, NodeKind

TREE_FORMAT = "kgsolve-tree/1"


class FileFormatError(ValueError):
    pass


def matrix_to_json(M: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M, dtype=complex)]


def matrix_from_json(rows) -> np.ndarray:
    try:
        M = np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)
    except (TypeError, ValueError) as e:
        raise FileFormatError(f"bad matrix entries: {e}") from e
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise FileFormatError(f"matrix is not square: shape {M.shape}")
    return M


def dumps(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def write_matrix(path, M: np.ndarray):
    M = np.asarray(M, dtype=complex)
    n = int(round(np.log2(M.shape[0])))
    Path(path).write_text(dumps({"n": n, "rows": matrix_to_json(M)}))


def read_matrix(path) -> np.ndarray:
    try:
        data = json.loads(Path(path).read_text())
        n, rows = data["n"], data["rows"]
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as e:
        raise FileFormatError(f"cannot read matrix file {path}: {e}") from e
    M = matrix_from_json(rows)
    if M.shape[0] != 2**n:
        raise FileFormatError(f"declared n={n} but matrix has dimension {M.shape[0]}")
    return M


def _node_to_json(node: FactorNode, root=False) -> dict:
    out = {"kind": node.kind.value, "level": node.level, "label": node.label}
    if node.diagnostics:
        out["diagnostics"] = {k: float(v) for k, v in node.diagnostics.items()}
    if node.kind is NodeKind.COMPOSITE:
        if root:
            out["matrix"] = matrix_to_json(node.matrix)
        out["children"] = [_node_to_json(c) for c in node.children]
    elif node.kind is NodeKind.LOCAL:
        out["qubit"] = node.qubit
        out["matrix"] = matrix_to_json(node.matrix)
    else:
        out["generator"] = node.generator.coeffs
    return out


def _node_from_json(d: dict) -> FactorNode:
    try:
        kind = NodeKind(d["kind"])
        level = int(d["level"])
        label = d.get("label", "")
        if kind is NodeKind.COMPOSITE:
            node = FactorNode.composite(level, [_node_from_json(c) for c in d["children"]], label)
        elif kind is NodeKind.LOCAL:
            M = matrix_from_json(d["matrix"])
            if M.shape != (2, 2):
                raise FileFormatError("LOCAL leaves must be 2x2")
            node = FactorNode(kind, level, M, qubit=int(d["qubit"]), label=label)
        else:
            gen = LieElement.from_dict(level, d["generator"])
            node = FactorNode(kind, level, matrix_exp(gen.matrix()), generator=gen, label=label)
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, FileFormatError):
            raise
        raise FileFormatError(f"malformed node: {e}") from e
    node.diagnostics = dict(d.get("diagnostics", {}))
    return node


def tree_to_json(tree: FactorTree, residuals: dict | None = None) -> dict:
    return {
        "format": TREE_FORMAT,
        "n": tree.root.level,
        "global_phase": tree.global_phase,
        "tolerance": tree.tolerance,
        "config": dataclasses.asdict(tree.config),
        "residuals": residuals or {"reassembly": tree.residual},
        "root": _node_to_json(tree.root, root=True),
    }


def tree_from_json(data: dict) -> FactorTree:
    try:
        if data.get("format") != TREE_FORMAT:
            raise FileFormatError(f"unknown tree format {data.get('format')!r}")
        root = _node_from_json(data["root"])
        cfg = SolverConfig(**data["config"])
        tree = FactorTree(root, cfg, float(data["global_phase"]), float(data["tolerance"]))
        tree.residual = float(data.get("residuals", {}).get("reassembly", float("nan")))
    except (KeyError, TypeError, AttributeError) as e:
        raise FileFormatError(f"malformed tree file: {e}") from e
    if root.level != int(data["n"]):
        raise FileFormatError("root level does not match declared n")
    return tree


def write_tree(path, tree: FactorTree, residuals: dict | None = None):
    Path(path).write_text(dumps(tree_to_json(tree, residuals)))


def read_tree(path) -> FactorTree:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise FileFormatError(f"cannot read tree file {path}: {e}") from e
    return tree_from_json(data)
