"""Dynkin form of the Baker-Campbell-Hausdorff series and its truncations.

A nested bracket ``[a^{i1} b^{j1} ... a^{ik} b^{jk}]`` is stored as its letter
word, e.g. ``"aab"`` for ``[a, [a, b]]``.  All words of a homogeneous term are
collected with exact :class:`fractions.Fraction` coefficients and only turned
into floats when a term is evaluated.

Truncation orders count nested brackets: a word of length ``d`` carries
``d - 1`` commutators.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np

from .pauli import LieElement, _same_n, from_matrix


@dataclass(frozen=True)
class BracketWord:
    """One summand of ``T_{i,j}``: exponent tuple and its Dynkin weight."""

    exponents: tuple[tuple[int, int], ...]
    coefficient: Fraction

    @property
    def word(self) -> str:
        return "".join("a" * i + "b" * j for i, j in self.exponents)


@dataclass(frozen=True)
class TruncationReport:
    order_p: int
    order_q: int
    last_increment_norm: float
    estimated_remainder: float
    residual_norm: float = float("nan")


def _compositions(i: int, j: int):
    """All sequences of pairs (i_c, j_c), i_c + j_c > 0, summing to (i, j)."""
    if i == 0 and j == 0:
        yield ()
        return
    for i1 in range(i + 1):
        for j1 in range(j + 1):
            if i1 + j1 == 0:
                continue
            for rest in _compositions(i - i1, j - j1):
                yield ((i1, j1),) + rest


@lru_cache(maxsize=None)
def dynkin_terms(i: int, j: int) -> tuple[BracketWord, ...]:
    if i < 0 or j < 0 or i + j < 1:
        raise ValueError(f"invalid degrees ({i}, {j})")
    out = []
    for comp in _compositions(i, j):
        k = len(comp)
        denom = 1
        for ic, jc in comp:
            denom *= factorial(ic) * factorial(jc)
        c = Fraction((-1) ** (k - 1), k * denom) / (i + j)
        out.append(BracketWord(comp, c))
    return tuple(out)


def _canonical(word: str) -> tuple[str, int]:
    """Fold the innermost antisymmetry: ``...ba -> -...ab``, ``...aa -> 0``."""
    if len(word) < 2:
        return word, 1
    if word[-1] == word[-2]:
        return word, 0
    if word.endswith("ba"):
        return word[:-2] + "ab", -1
    return word, 1


@lru_cache(maxsize=None)
def dynkin_words(i: int, j: int) -> dict[str, Fraction]:
    """``T_{i,j}`` as right-nested words with exact merged coefficients."""
    acc: dict[str, Fraction] = {}
    for bw in dynkin_terms(i, j):
        w, s = _canonical(bw.word)
        if s:
            acc[w] = acc.get(w, Fraction(0)) + s * bw.coefficient
    return {w: c for w, c in acc.items() if c != 0}


def expand_associative(words: dict[str, Fraction]) -> dict[str, Fraction]:
    """Expand right-nested brackets into noncommutative monomials."""

    def expand(w: str) -> dict[str, int]:
        if len(w) == 1:
            return {w: 1}
        inner = expand(w[1:])
        out: dict[str, int] = {}
        for m, c in inner.items():
            out[w[0] + m] = out.get(w[0] + m, 0) + c
            out[m + w[0]] = out.get(m + w[0], 0) - c
        return out

    acc: dict[str, Fraction] = {}
    for w, c in words.items():
        for m, k in expand(w).items():
            acc[m] = acc.get(m, Fraction(0)) + c * k
    return {m: c for m, c in acc.items() if c != 0}


def _evaluate(words: dict[str, float], a: np.ndarray, b: np.ndarray) -> np.ndarray:
    memo = {"a": a, "b": b}

    def nested(w: str) -> np.ndarray:
        if w not in memo:
            x, y = memo[w[0]], nested(w[1:])
            memo[w] = x @ y - y @ x
        return memo[w]

    out = np.zeros_like(a)
    for w, c in words.items():
        out = out + c * nested(w)
    return out


@lru_cache(maxsize=None)
def _series_words(kind: str, order: int) -> dict[str, float]:
    """Combined float word table for one truncated series.

    ``kind`` is ``"bch"`` (all terms up to total degree ``order``), ``"gm"``
    (terms odd in ``b``, at most ``order`` brackets) or ``"km"`` (all terms with
    at most ``order`` brackets).
    """
    if kind == "bch":
        cap = order
    else:
        cap = order + 1
    acc: dict[str, Fraction] = {}
    for d in range(1, cap + 1):
        for i in range(d + 1):
            j = d - i
            if kind == "gm" and j % 2 == 0:
                continue
            for w, c in dynkin_words(i, j).items():
                acc[w] = acc.get(w, Fraction(0)) + c
    return {w: float(c) for w, c in acc.items() if c != 0}


# dense-matrix kernels, shared with the solver


def bch_matrix(a: np.ndarray, b: np.ndarray, cap: int) -> np.ndarray:
    return _evaluate(_series_words("bch", cap), a, b)


def gm_matrix(m: np.ndarray, k: np.ndarray, p: int) -> np.ndarray:
    # words are in (a, b) = (k, m)
    return _evaluate(_series_words("gm", p), k, m)


def km_matrix(g: np.ndarray, m: np.ndarray, q: int) -> np.ndarray:
    return _evaluate(_series_words("km", q), g, -m)


def residual_matrix(gm: np.ndarray, g: np.ndarray, m: np.ndarray, p: int, q: int) -> np.ndarray:
    return gm_matrix(m, km_matrix(g, m, q), p) - gm


def _lift(n: int, M: np.ndarray) -> LieElement:
    # brackets of anti-Hermitian traceless matrices stay in su(2^n)
    return from_matrix(M, n, tol=1e-6)


def dynkin_term(i: int, j: int, a: LieElement, b: LieElement) -> LieElement:
    _same_n(a, b)
    words = {w: float(c) for w, c in dynkin_words(i, j).items()}
    return _lift(a.n, _evaluate(words, a.matrix(), b.matrix()))


def bch_log(a: LieElement, b: LieElement, total_degree_cap: int) -> LieElement:
    """Sum of ``T_{i,j}(a, b)`` over ``i + j <= total_degree_cap``."""
    _same_n(a, b)
    if total_degree_cap < 1:
        raise ValueError("degree cap must be >= 1")
    return _lift(a.n, bch_matrix(a.matrix(), b.matrix(), total_degree_cap))


def gm_series(m: LieElement, k: LieElement, p: int) -> LieElement:
    """The ``m``-odd part of ``log(e^k e^m)`` with at most ``p`` brackets."""
    _same_n(m, k)
    return _lift(m.n, gm_matrix(m.matrix(), k.matrix(), p))


def k_of_m_series(g: LieElement, m: LieElement, q: int) -> LieElement:
    """``log(e^g e^{-m})`` truncated at ``q`` brackets."""
    _same_n(g, m)
    return _lift(g.n, km_matrix(g.matrix(), m.matrix(), q))


def residual_polynomial(g_m: LieElement, g: LieElement, m: LieElement, p: int, q: int) -> LieElement:
    _same_n(g, m)
    return _lift(g.n, residual_matrix(g_m.matrix(), g.matrix(), m.matrix(), p, q))


def remainder_estimate(g_m: LieElement, g: LieElement, m: LieElement, p: int, q: int) -> TruncationReport:
    """Increment from ``(p, q)`` to ``(p+1, q+1)`` as a computable remainder proxy."""
    gm, G, M = g_m.matrix(), g.matrix(), m.matrix()
    lo = residual_matrix(gm, G, M, p, q)
    hi = residual_matrix(gm, G, M, p + 1, q + 1)
    res = float(np.max(np.abs(lo)))
    inc = float(np.max(np.abs(hi - lo)))
    return TruncationReport(p, q, res, inc, res)
