"""Recursive partition of su(2^n), its Cartan subalgebras and the two
symmetric pairs used at every recursion level."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import pauli
from .pauli import LieElement


class BasisError(ValueError):
    pass


@dataclass(frozen=True)
class Subspace:
    """Ordered set of basis strings spanning a coordinate subspace."""

    n: int
    members: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.members)) != len(self.members):
            raise BasisError("duplicate members")
        for s in self.members:
            pauli.check_string(s, self.n)
            if pauli.is_identity(s):
                raise BasisError("the identity string cannot be a member")

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, s):
        return s in self.members

    @property
    def indices(self) -> np.ndarray:
        return _indices(self.n, self.members)

    def union(self, *others: Subspace) -> Subspace:
        members = list(self.members)
        for o in others:
            members.extend(s for s in o.members if s not in members)
        return Subspace(self.n, tuple(sorted(members, key=pauli.index)))

    def complement(self) -> Subspace:
        return Subspace(self.n, tuple(s for s in pauli.basis(self.n) if s not in self.members))


@lru_cache(maxsize=None)
def _indices(n, members):
    idx = np.array([pauli.index(s) for s in members], dtype=int)
    idx.setflags(write=False)
    return idx


def _sub(n, members) -> Subspace:
    return Subspace(n, tuple(sorted(set(members), key=pauli.index)))


class PairLabel(enum.Enum):
    PRIMARY_PAIR = "primary"
    SECONDARY_PAIR = "secondary"


@dataclass(frozen=True)
class SymmetricPair:
    n: int
    ambient: Subspace
    k: Subspace
    m: Subspace
    h: Subspace
    label: PairLabel


@dataclass(frozen=True)
class KGPartition:
    m_n: Subspace
    k_n: Subspace
    k_n1: Subspace
    k_n0: Subspace
    center: Subspace


def _check_level(n, lowest=2):
    if n < lowest:
        raise BasisError(f"level n={n} is below the minimum {lowest}")


def _tensor(strings, letter):
    return [s + letter for s in strings]


@lru_cache(maxsize=None)
def kg_partition(n: int) -> KGPartition:
    _check_level(n)
    if n == 2:
        # base case is the local split su(2) + su(2); the diagram rows only
        # apply from n = 3 on (it would put ZZ, a Cartan generator, into k)
        k_2 = _sub(2, ["XI", "YI", "ZI", "IX", "IY", "IZ"])
        return KGPartition(k_2.complement(), k_2, _sub(2, []), _sub(2, ["XI", "YI", "ZI"]), _sub(2, ["IZ"]))
    lower = pauli.basis(n - 1)
    ident = "I" * (n - 1)
    m_n = _sub(n, _tensor(lower, "X") + _tensor(lower, "Y") + [ident + "X", ident + "Y"])
    k_n1 = _sub(n, _tensor(lower, "Z"))
    k_n0 = _sub(n, _tensor(lower, "I"))
    center = _sub(n, [ident + "Z"])
    k_n = k_n1.union(k_n0, center)
    return KGPartition(m_n, k_n, k_n1, k_n0, center)


@lru_cache(maxsize=None)
def _recurrence(n: int) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """``(a(n), b(n))`` as string lists in recurrence order."""
    if n == 2:
        return ("XX", "YY", "ZZ"), ()
    s_prev = []
    for j in range(2, n):
        s_prev.extend(u + "I" * (n - 1 - j) for u in _recurrence(j)[0])
    a = tuple(_tensor(["I" * (n - 1)] + s_prev, "X"))
    b = tuple(_tensor(s_prev, "Z"))
    return a, b


def cartan_generators(n: int) -> tuple[Subspace, Subspace]:
    """``(h_n, f_n)`` with members in the fixed lexicographic basis order."""
    _check_level(n)
    a, b = _recurrence(n)
    return _sub(n, a), _sub(n, b)


@lru_cache(maxsize=None)
def primary_pair(n: int) -> SymmetricPair:
    part = kg_partition(n)
    h, _ = cartan_generators(n)
    ambient = Subspace(n, pauli.basis(n))
    return SymmetricPair(n, ambient, part.k_n, part.m_n, h, PairLabel.PRIMARY_PAIR)


@lru_cache(maxsize=None)
def secondary_pair(n: int) -> SymmetricPair:
    if n < 3:
        raise BasisError("secondary pass not defined at this level (f_2 is trivial)")
    part = kg_partition(n)
    _, f = cartan_generators(n)
    ambient = part.k_n1.union(part.k_n0)
    return SymmetricPair(n, ambient, part.k_n0, part.k_n1, f, PairLabel.SECONDARY_PAIR)


def pair(n: int, label: PairLabel | str) -> SymmetricPair:
    label = PairLabel(label) if isinstance(label, str) else label
    return primary_pair(n) if label is PairLabel.PRIMARY_PAIR else secondary_pair(n)


def project(g: LieElement, s: Subspace) -> LieElement:
    if g.n != s.n:
        raise BasisError(f"dimension mismatch: n={g.n} vs n={s.n}")
    v = np.zeros_like(g.vec)
    idx = s.indices
    v[idx] = g.vec[idx]
    return LieElement(g.n, v)


def off_norm(g: LieElement, s: Subspace) -> float:
    """Max-entry norm of the realized component of ``g`` outside ``s``."""
    v = g.vec.copy()
    v[s.indices] = 0.0
    if not np.any(v):
        return 0.0
    return LieElement(g.n, v).norm()


def dense_direction(p: SymmetricPair) -> LieElement:
    """``v = sum_j pi^(j-1) u_j`` over the Cartan generators in basis order."""
    if not len(p.h):
        raise BasisError("empty Cartan subalgebra")
    return LieElement.from_dict(p.n, {u: np.pi**j for j, u in enumerate(p.h)})


def centralizer_in(v: LieElement, s: Subspace) -> Subspace:
    """Members of ``s`` whose bracket with ``v`` vanishes exactly."""
    out = []
    for e in s:
        x = pauli.commutator(LieElement.from_dict(v.n, {e: 1.0}), v)
        if not np.any(x.vec):
            out.append(e)
    return Subspace(v.n, tuple(out))
