"""su(2^n) in the normalized Pauli-string basis.

Every string ``s = s_1 s_2 ... s_n`` over ``{I, X, Y, Z}`` realizes as
``(i/2) * sigma_{s_1} (x) ... (x) sigma_{s_n}``.  Single letters are therefore
the ``(i/2)``-scaled Pauli matrices and brackets of basis strings are either
zero or ``+/-`` another basis string.

The basis order is lexicographic with ``I < X < Y < Z`` and the all-``I``
string dropped, so index ``j`` corresponds to the base-4 digits of ``j + 1``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

LETTERS = "IXYZ"

SIGMA = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# sigma_a sigma_b = phase * sigma_c, indexed by letter position in LETTERS
_PROD_LETTER = np.array([[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]])
_PROD_PHASE = np.array(
    [
        [1, 1, 1, 1],
        [1, 1, 1j, -1j],
        [1, -1j, 1, 1j],
        [1, 1j, -1j, 1],
    ]
)

ANTI_HERMITIAN_TOL = 1e-9


class PauliError(ValueError):
    pass


def check_string(s: str, n: int | None = None) -> str:
    if not s or any(c not in LETTERS for c in s):
        raise PauliError(f"not a Pauli string: {s!r}")
    if n is not None and len(s) != n:
        raise PauliError(f"expected a length-{n} string, got {s!r}")
    return s


def is_identity(s: str) -> bool:
    return set(s) == {"I"}


def dim(n: int) -> int:
    """Number of basis elements of su(2^n)."""
    return 4**n - 1


@lru_cache(maxsize=None)
def basis(n: int) -> tuple[str, ...]:
    if n < 1:
        raise PauliError("n must be positive")
    return tuple("".join(t) for t in itertools.product(LETTERS, repeat=n))[1:]


def index(s: str) -> int:
    """Position of ``s`` in ``basis(len(s))``."""
    j = 0
    for c in s:
        j = 4 * j + LETTERS.index(c)
    if j == 0:
        raise PauliError("the identity string is not a basis element")
    return j - 1


def realize(s: str) -> np.ndarray:
    check_string(s)
    out = np.array([[0.5j]])
    for c in s:
        out = np.kron(out, SIGMA[c])
    return out


@lru_cache(maxsize=None)
def _basis_stack(n: int) -> np.ndarray:
    mats = np.array([realize(s) for s in basis(n)])
    mats.setflags(write=False)
    return mats


@dataclass(frozen=True, eq=False)
class LieElement:
    """Real coefficient vector over ``basis(n)``."""

    n: int
    vec: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vec, dtype=float).copy()
        if v.shape != (dim(self.n),):
            raise PauliError(f"coefficient vector must have length {dim(self.n)}")
        v.setflags(write=False)
        object.__setattr__(self, "vec", v)

    @classmethod
    def zero(cls, n: int) -> LieElement:
        return cls(n, np.zeros(dim(n)))

    @classmethod
    def from_dict(cls, n: int, coeffs: dict[str, float]) -> LieElement:
        v = np.zeros(dim(n))
        for s, c in coeffs.items():
            v[index(check_string(s, n))] += c
        return cls(n, v)

    @property
    def coeffs(self) -> dict[str, float]:
        names = basis(self.n)
        return {names[j]: float(self.vec[j]) for j in np.flatnonzero(self.vec)}

    def __add__(self, other: LieElement) -> LieElement:
        _same_n(self, other)
        return LieElement(self.n, self.vec + other.vec)

    def __sub__(self, other: LieElement) -> LieElement:
        _same_n(self, other)
        return LieElement(self.n, self.vec - other.vec)

    def __neg__(self) -> LieElement:
        return LieElement(self.n, -self.vec)

    def __mul__(self, c: float) -> LieElement:
        return LieElement(self.n, float(c) * self.vec)

    __rmul__ = __mul__

    def __repr__(self):
        terms = " + ".join(f"{c:.6g}*{s}" for s, c in self.coeffs.items())
        return f"LieElement(n={self.n}, {terms or '0'})"

    def matrix(self) -> np.ndarray:
        return realize_element(self)

    def norm(self) -> float:
        """Max-entry norm of the realized matrix."""
        return float(np.max(np.abs(self.matrix())))


def _same_n(a: LieElement, b: LieElement):
    if a.n != b.n:
        raise PauliError(f"dimension mismatch: n={a.n} vs n={b.n}")


def realize_element(a: LieElement) -> np.ndarray:
    return np.tensordot(a.vec, _basis_stack(a.n), axes=1)


def from_matrix(M: np.ndarray, n: int, tol: float = ANTI_HERMITIAN_TOL) -> LieElement:
    """Coefficients of an anti-Hermitian traceless matrix in ``basis(n)``."""
    M = np.asarray(M, dtype=complex)
    d = 2**n
    if M.shape != (d, d):
        raise PauliError(f"expected a {d}x{d} matrix, got shape {M.shape}")
    if np.max(np.abs(M + M.conj().T), initial=0.0) > tol:
        raise PauliError("matrix is not anti-Hermitian within tolerance")
    if abs(np.trace(M)) > tol * d:
        raise PauliError("matrix is not traceless within tolerance")
    # tr(e_a e_b) = -(d/4) delta_ab
    coeffs = np.einsum("aji,ij->a", _basis_stack(n), M) / (-d / 4)
    return LieElement(n, coeffs.real)


@lru_cache(maxsize=None)
def _bracket_table(n: int):
    """Nonzero brackets as flat arrays ``(a, b, c, sign)`` with [e_a, e_b] = sign e_c."""
    digits = np.array([[LETTERS.index(ch) for ch in s] for s in basis(n)])
    N = len(digits)
    a_idx, b_idx = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    da, db = digits[a_idx], digits[b_idx]
    letters = _PROD_LETTER[da, db]
    phase = np.prod(_PROD_PHASE[da, db], axis=-1)
    # strings commute iff the product phase is real
    anti = np.abs(phase.imag) > 0.5
    c_full = np.zeros((N, N), dtype=int)
    for k in range(n):
        c_full = 4 * c_full + letters[..., k]
    # [(i/2)P, (i/2)Q] = i * phase * e_R  when PQ = phase R with phase = +/- i
    sign = np.where(anti, (1j * phase).real, 0.0).round().astype(int)
    a, b = a_idx[anti], b_idx[anti]
    c = c_full[anti] - 1
    s = sign[anti].astype(float)
    for arr in (a, b, c, s):
        arr.setflags(write=False)
    return a, b, c, s


def bracket_vec(x: np.ndarray, y: np.ndarray, n: int) -> np.ndarray:
    a, b, c, s = _bracket_table(n)
    return np.bincount(c, weights=s * x[a] * y[b], minlength=dim(n))


def commutator(a: LieElement, b: LieElement) -> LieElement:
    _same_n(a, b)
    return LieElement(a.n, bracket_vec(a.vec, b.vec, a.n))


def string_bracket(s: str, t: str) -> tuple[int, str | None]:
    """``[s, t] = sign * r``; returns ``(0, None)`` when the strings commute."""
    check_string(s)
    check_string(t, len(s))
    phase = 1 + 0j
    out = []
    for x, y in zip(s, t):
        i, j = LETTERS.index(x), LETTERS.index(y)
        phase *= _PROD_PHASE[i, j]
        out.append(LETTERS[_PROD_LETTER[i, j]])
    if abs(phase.imag) < 0.5:
        return 0, None
    return int(round((1j * phase).real)), "".join(out)


@dataclass(frozen=True)
class StructureTensor:
    """Sparse ``C^c_{ab}`` with ``[e_a, e_b] = sum_c C^c_{ab} e_c``."""

    n: int
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    values: np.ndarray

    def dense(self) -> np.ndarray:
        N = dim(self.n)
        C = np.zeros((N, N, N))
        C[self.a, self.b, self.c] = self.values
        return C

    def ad(self, x: LieElement) -> np.ndarray:
        """Matrix of ``ad_x`` acting on coefficient vectors: ``(ad_x)[c, b]``."""
        N = dim(self.n)
        M = np.zeros((N, N))
        np.add.at(M, (self.c, self.b), self.values * x.vec[self.a])
        return M


@lru_cache(maxsize=None)
def structure_constants(n: int) -> StructureTensor:
    a, b, c, s = _bracket_table(n)
    return StructureTensor(n, a, b, c, s)


def killing_form_ad(a: LieElement, b: LieElement) -> float:
    """``tr(ad_a ad_b)`` from the structure tensor; the slow reference path."""
    _same_n(a, b)
    C = structure_constants(a.n)
    return float(np.trace(C.ad(a) @ C.ad(b)))


@lru_cache(maxsize=None)
def killing_constant(n: int) -> float:
    """Ratio of the Killing form to the trace form ``tr(A B)``, measured from ad."""
    e = LieElement(n, np.eye(dim(n))[0])
    return killing_form_ad(e, e) / float(np.trace(e.matrix() @ e.matrix()).real)


def killing_form(a: LieElement, b: LieElement) -> float:
    _same_n(a, b)
    d = 2**a.n
    return killing_constant(a.n) * (-d / 4) * float(a.vec @ b.vec)
