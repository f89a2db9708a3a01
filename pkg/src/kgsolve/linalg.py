"""Dense unitary helpers: exp/log on the principal branch, SU normalization,
nearest Kronecker factors."""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla

BRANCH_GUARD = 1e-6
UNITARY_TOL = 1e-9


class LinalgError(ValueError):
    pass


class BranchError(LinalgError):
    """An eigenphase sits on the branch cut of the principal logarithm."""


class NotTensorProduct(LinalgError):
    def __init__(self, residual: float):
        super().__init__(f"factor is not a tensor product (residual {residual:.3e})")
        self.residual = residual


def max_norm(A: np.ndarray) -> float:
    return float(np.max(np.abs(A), initial=0.0))


def dagger(A: np.ndarray) -> np.ndarray:
    return A.conj().T


def unitarity_defect(U: np.ndarray) -> float:
    return max_norm(dagger(U) @ U - np.eye(U.shape[0]))


def check_unitary(U: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise LinalgError(f"expected a square matrix, got shape {U.shape}")
    d = unitarity_defect(U)
    if d > tol:
        raise LinalgError(f"matrix is not unitary (defect {d:.3e})")
    return U


def _eigenphases(U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # complex Schur form of a normal matrix is diagonal with a unitary basis,
    # which stays orthonormal even for clustered eigenvalues
    T, Q = sla.schur(U, output="complex")
    return np.angle(np.diag(T)), Q


def matrix_log(U: np.ndarray, guard: float = BRANCH_GUARD) -> np.ndarray:
    """Principal logarithm of a unitary matrix, eigenphases in (-pi, pi]."""
    U = check_unitary(U)
    phi, Q = _eigenphases(U)
    if np.any(np.pi - np.abs(phi) < guard):
        raise BranchError("branch-ambiguous input; perturb or re-phase")
    return (Q * (1j * phi)) @ dagger(Q)


def su_log(U: np.ndarray, guard: float = BRANCH_GUARD) -> np.ndarray:
    """Traceless logarithm of ``U`` in SU(d).

    Equal to :func:`matrix_log` whenever that is already traceless; otherwise
    the ``k`` largest eigenphases are shifted by ``-2 pi`` (``k`` the winding of
    the phase sum) so the result lies in su(d).
    """
    U = check_unitary(U)
    phi, Q = _eigenphases(U)
    if np.any(np.pi - np.abs(phi) < guard):
        raise BranchError("branch-ambiguous input; perturb or re-phase")
    wind = int(round(phi.sum() / (2 * np.pi)))
    if wind:
        order = np.argsort(phi)
        idx = order[::-1][:wind] if wind > 0 else order[: -wind]
        phi = phi.copy()
        phi[idx] -= np.sign(wind) * 2 * np.pi
    if abs(phi.sum()) > 1e-8:
        raise LinalgError("matrix is not in SU(d); normalize the phase first")
    return (Q * (1j * phi)) @ dagger(Q)


def matrix_exp(A: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if max_norm(A + dagger(A)) > tol:
        raise LinalgError("generator is not anti-Hermitian")
    # A = iH with H Hermitian
    H = -0.5j * (A - dagger(A))
    w, V = np.linalg.eigh(H)
    return (V * np.exp(1j * w)) @ dagger(V)


def su_normalize(U: np.ndarray) -> tuple[np.ndarray, float]:
    """Return ``(e^{-i theta/d} U, theta)`` with unit determinant."""
    U = np.asarray(U, dtype=complex)
    d = U.shape[0]
    theta = float(np.angle(np.linalg.det(U)))
    if abs(theta) < 1e-15:
        return U, 0.0
    return U * np.exp(-1j * theta / d), theta


def polar_unitary(A: np.ndarray) -> np.ndarray:
    """Closest unitary to ``A`` in Frobenius norm."""
    W, _, Vh = np.linalg.svd(A)
    return W @ Vh


def _rearrange(K: np.ndarray, da: int, db: int) -> np.ndarray:
    # R[(i,k), (j,l)] = K[(i,j), (k,l)]  so that A (x) B  ->  vec(A) vec(B)^T
    return K.reshape(da, db, da, db).transpose(0, 2, 1, 3).reshape(da * da, db * db)


def nearest_kronecker(K: np.ndarray, da: int, db: int, tol: float | None = None):
    """Split ``K ~ A (x) B`` by a rank-one fit of the rearranged matrix.

    ``A`` is polar-projected to a unitary, its first nonzero entry rotated to
    the positive real axis, then SU-normalized; ``B`` is the best unitary for
    that ``A`` and carries whatever global phase is left.  Returns
    ``(A, B, residual)`` with ``residual = max|K - A (x) B|``.
    """
    K = np.asarray(K, dtype=complex)
    if da * db != K.shape[0]:
        raise LinalgError(f"{da} x {db} does not match dimension {K.shape[0]}")
    R = _rearrange(K, da, db)
    u, s, vh = np.linalg.svd(R)
    A = polar_unitary(np.sqrt(s[0]) * u[:, 0].reshape(da, da))
    lead = A.flat[np.flatnonzero(np.abs(A) > 1e-12)[0]]
    A, _ = su_normalize(A * (abs(lead) / lead))
    # best B for fixed unitary A: B = tr_A[(A^dagger (x) I) K] / da
    B = np.einsum("ij,ikjl->kl", A.conj(), K.reshape(da, db, da, db)) / da
    B = polar_unitary(B)
    residual = max_norm(K - np.kron(A, B))
    if tol is not None and residual > tol:
        raise NotTensorProduct(residual)
    return A, B, residual
