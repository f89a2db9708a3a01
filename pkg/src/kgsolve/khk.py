"""Single-pair Cartan factorization ``G = K0 K1 H K1^dagger``.

The ``m`` generator is found in two stages.  A damped Gauss-Newton solve of
the truncated BCH residual (orders escalated until the residual drops below
``root_tol``) supplies the starting point, and a Newton polish on the exact
condition ``log(G e^{-m}) in k`` then removes the truncation error.  ``K1`` is
a stationary point of ``f(K) = <v, K^dagger m K>`` over ``exp(k)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import bch, pauli
from .kgbasis import SymmetricPair, dense_direction, off_norm
from .linalg import dagger, matrix_exp, max_norm, su_log
from .pauli import LieElement

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    p: int = 3
    q: int = 3
    max_order: int = 7
    root_tol: float = 1e-10
    reassembly_tol: float = 1e-8
    max_newton_iters: int = 40
    max_polish_iters: int = 100
    max_minimizer_iters: int = 400
    grad_tol: float = 1e-11
    max_restarts: int = 3
    restart_scale: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError("truncation orders must be >= 1")
        if self.max_order < max(self.p, self.q):
            raise ValueError("max_order below the starting order")
        if min(self.root_tol, self.reassembly_tol, self.grad_tol) <= 0:
            raise ValueError("tolerances must be positive")


class DecompositionError(RuntimeError):
    """A stage failed its certificate; ``diagnostics`` holds the measured norms."""

    def __init__(self, stage: str, message: str, **diagnostics):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.diagnostics = diagnostics


@dataclass
class SolveReport:
    orders_used: tuple[int, int]
    truncation: bch.TruncationReport
    history: list[tuple[int, int, float]] = field(default_factory=list)
    exact_residual: float = float("nan")
    restarts: int = 0


@dataclass
class KHKResult:
    K0: np.ndarray
    K1: np.ndarray
    H: np.ndarray
    m: LieElement
    h: LieElement
    residual_root: float
    residual_reassembly: float
    orders_used: tuple[int, int]
    off_k: float = 0.0
    off_h: float = 0.0
    gradient: float = 0.0
    report: SolveReport | None = None


class _Coords:
    """Coefficient <-> matrix maps for a coordinate subspace of su(2^n)."""

    def __init__(self, n: int, idx: np.ndarray):
        self.n, self.idx = n, np.asarray(idx)
        stack = pauli._basis_stack(n)[self.idx]
        self.mats = stack
        self.d = 2**n
        # coefficient of e_a in A is tr(e_a A) / (-d/4)
        self.dual = stack.transpose(0, 2, 1).reshape(len(self.idx), -1) / (-self.d / 4)

    def matrix(self, x: np.ndarray) -> np.ndarray:
        return np.tensordot(x, self.mats, axes=1)

    def coeffs(self, A: np.ndarray) -> np.ndarray:
        """Coefficients of one matrix, or of a stack of shape ``(B, d, d)``."""
        flat = A.reshape(A.shape[:-2] + (-1,))
        return (flat @ self.dual.T).real


def _full(n):
    return _Coords(n, np.arange(pauli.dim(n)))


def _fd_jacobian(fun, x, r0, h=1e-7, batched=False):
    """Forward differences; ``batched`` funs map a ``(B, k)`` stack to ``(B, r)``."""
    if batched:
        X = x[None, :] + h * np.eye(x.size)
        return ((fun(X) - r0[None, :]) / h).T
    J = np.empty((r0.size, x.size))
    for i in range(x.size):
        xi = x.copy()
        xi[i] += h
        J[:, i] = (fun(xi) - r0) / h
    return J


def _gauss_newton(fun, x0, iters, tol, batched=False):
    """Damped Gauss-Newton on ``||fun(x)||``; returns ``(x, r, last_step)``."""
    x = x0.copy()
    r = fun(x)
    step_norm = np.inf
    for _ in range(iters):
        if np.max(np.abs(r)) <= tol:
            break
        J = _fd_jacobian(fun, x, r, batched=batched)
        dx = np.linalg.lstsq(J, -r, rcond=None)[0]
        t, accepted = 1.0, False
        for _ in range(30):
            xn = x + t * dx
            rn = fun(xn)
            if rn @ rn < r @ r:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        step_norm = float(np.max(np.abs(t * dx)))
        x, r = xn, rn
        if step_norm < 1e-15:
            break
    return x, r, step_norm


def _truncated_solve(g, gm, coords_m, coords_amb, x0, p, q, cfg):
    def fun(x):
        return coords_amb.coeffs(bch.residual_matrix(gm, g, coords_m.matrix(x), p, q))

    # residual tolerance is on the realized max-entry norm; coefficients are
    # at most twice as large entrywise, so iterate a little past it
    x, r, step = _gauss_newton(fun, x0, cfg.max_newton_iters, cfg.root_tol / 4, batched=True)
    res = max_norm(bch.residual_matrix(gm, g, coords_m.matrix(x), p, q))
    return x, res, step


def _exact_polish(G, coords_m, x0, iters):
    """Newton on the ``m``-coordinates of ``log(G e^{-m})``."""

    def fun(x):
        return coords_m.coeffs(su_log(G @ matrix_exp(-coords_m.matrix(x))))

    x = x0.copy()
    r = fun(x)
    for _ in range(iters):
        if np.max(np.abs(r)) < 1e-14:
            break
        J = _fd_jacobian(fun, x, r, h=1e-7)
        dx = np.linalg.lstsq(J, -r, rcond=None)[0]
        t, accepted = 1.0, False
        for _ in range(20):
            rn = fun(x + t * dx)
            if rn @ rn < r @ r:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        x, r = x + t * dx, rn
    return x, float(np.max(np.abs(r)))


def solve_truncated(g: LieElement, p: SymmetricPair, order_p: int, order_q: int, cfg: SolverConfig = SolverConfig()):
    """Zero of the truncated residual at fixed orders, started from ``g_m``.

    No escalation and no exact polish; returns ``(m, residual)`` with the
    residual measured on the truncated polynomial.
    """
    cm = _Coords(p.n, p.m.indices)
    ca = _Coords(p.n, p.ambient.indices)
    x0 = g.vec[p.m.indices].copy()
    x, res, _ = _truncated_solve(g.matrix(), cm.matrix(x0), cm, ca, x0, order_p, order_q, cfg)
    vec = np.zeros(pauli.dim(p.n))
    vec[p.m.indices] = x
    return LieElement(p.n, vec), res


def solve_m(g: LieElement, G: np.ndarray, p: SymmetricPair, cfg: SolverConfig = SolverConfig()):
    """Find ``m`` in ``p.m`` with ``G e^{-m}`` in ``exp(p.k)``.

    Returns ``(m, report)``.  Raises :class:`DecompositionError` (stage
    ``solve_m``) when neither the escalated truncations nor the restarts lead to
    a certified zero.
    """
    n = p.n
    cm = _Coords(n, p.m.indices)
    ca = _Coords(n, p.ambient.indices)
    gmat = g.matrix()
    gm = cm.matrix(g.vec[p.m.indices])
    rng = np.random.default_rng(cfg.seed)
    x_start = g.vec[p.m.indices].copy()
    best = (np.inf, None, None)

    for attempt in range(cfg.max_restarts + 1):
        history = []
        x = x_start.copy()
        pp, qq = cfg.p, cfg.q
        chosen = None
        while True:
            x, res, step = _truncated_solve(gmat, gm, cm, ca, x, pp, qq, cfg)
            history.append((pp, qq, res))
            if res <= cfg.root_tol:
                chosen = (pp, qq, res, step)
                break
            if max(pp, qq) >= cfg.max_order:
                break
            pp, qq = pp + 1, qq + 1
        if chosen is None:
            # escalation exhausted: keep the lowest truncation residual as seed
            pp, qq, res = min(history, key=lambda t: t[2])
            x, res, step = _truncated_solve(gmat, gm, cm, ca, x, pp, qq, cfg)
            chosen = (pp, qq, res, step)
        pp, qq, res, step = chosen
        mtrunc = cm.matrix(x)
        xr, exact = _exact_polish(G, cm, x, cfg.max_polish_iters)
        if exact > cfg.root_tol:
            # a diverged truncation is a poor seed; the unrotated g_m may do better
            alt = _exact_polish(G, cm, x_start, cfg.max_polish_iters)
            if alt[1] < exact:
                xr, exact = alt
        vec = np.zeros(pauli.dim(n))
        vec[p.m.indices] = xr
        m = LieElement(n, vec)
        K0 = G @ matrix_exp(-m.matrix())
        k = pauli.from_matrix(su_log(K0), n, tol=1e-6)
        off_k = off_norm(k, p.k)
        rem = bch.remainder_estimate(
            _restrict(g, p.m.indices),
            g,
            pauli.from_matrix(mtrunc, n, tol=1e-6),
            pp,
            qq,
        )
        trunc = bch.TruncationReport(pp, qq, step, rem.estimated_remainder, res)
        report = SolveReport((pp, qq), trunc, history, exact, attempt)
        if off_k <= cfg.reassembly_tol:
            return m, report
        log.debug("solve_m attempt %d: off-k %.3e", attempt, off_k)
        if off_k < best[0]:
            best = (off_k, m, report)
        x_start = g.vec[p.m.indices] + rng.uniform(-cfg.restart_scale, cfg.restart_scale, len(p.m))
    raise DecompositionError(
        "solve_m",
        "truncation escalation exhausted; input likely outside BCH-reliable region",
        best_off_k=best[0],
        best_residual=best[2].truncation.residual_norm if best[2] else np.inf,
    )


def compute_k0(G: np.ndarray, m: LieElement, p: SymmetricPair, tol: float = 1e-8) -> np.ndarray:
    K0 = G @ matrix_exp(-m.matrix())
    k = pauli.from_matrix(su_log(K0), p.n, tol=1e-6)
    off = off_norm(k, p.k)
    if off > tol:
        raise DecompositionError("compute_k0", "log(K0) leaves the k-subspace", off_k=off)
    return K0


def adjoint_action(K: np.ndarray, m: LieElement) -> LieElement:
    """``K^dagger m K`` in basis coordinates."""
    return pauli.from_matrix(dagger(K) @ m.matrix() @ K, m.n, tol=1e-8)


def objective_f(v: LieElement, m: LieElement, K: np.ndarray) -> float:
    return pauli.killing_form(v, adjoint_action(K, m))


def objective_f_structure(v: LieElement, m: LieElement, K: np.ndarray) -> float:
    """Same value as :func:`objective_f` via the double structure-constant sum."""
    w = adjoint_action(K, m)
    C = pauli.structure_constants(v.n).dense()
    return float(np.einsum("adc,bcd,a,b->", C, C, v.vec, w.vec))


class _Objective:
    """``f``, its gradient and Hessian in right-translated ``k`` coordinates.

    With ``h = K^dagger m K`` and ``K -> K exp(t e_i)``, ``dh/dt = [h, e_i]`` so
    ``df = <v, [h, e_i]> = <[v, h], e_i>``.
    """

    def __init__(self, v: LieElement, p: SymmetricPair):
        self.n = v.n
        self.v = v.vec
        self.kidx = p.k.indices
        self.scale = pauli.killing_constant(self.n) * (-(2**self.n) / 4)
        self.full = _full(self.n)
        self.kc = _Coords(self.n, self.kidx)

    def h(self, K, M):
        return self.full.coeffs(dagger(K) @ M @ K)

    def value(self, hvec):
        return self.scale * float(self.v @ hvec)

    def grad(self, hvec):
        return self.scale * pauli.bracket_vec(self.v, hvec, self.n)[self.kidx]

    def hessian(self, hvec):
        N = pauli.dim(self.n)
        H = np.empty((len(self.kidx), len(self.kidx)))
        for j, kj in enumerate(self.kidx):
            e = np.zeros(N)
            e[kj] = 1.0
            inner = pauli.bracket_vec(hvec, e, self.n)
            H[:, j] = self.scale * pauli.bracket_vec(self.v, inner, self.n)[self.kidx]
        return 0.5 * (H + H.T)

    def step(self, K, dx):
        return K @ matrix_exp(self.kc.matrix(dx))


def _descend(obj: _Objective, M, K, cfg):
    """Steepest descent with backtracking, then Newton polish on the gradient."""
    hv = obj.h(K, M)
    f, g = obj.value(hv), obj.grad(hv)
    g0 = max(np.max(np.abs(g)), 1e-300)
    for it in range(cfg.max_minimizer_iters):
        gmax = np.max(np.abs(g))
        if gmax <= cfg.grad_tol:
            break
        Hs = obj.hessian(hv)
        moved = False
        if gmax < 1e-2 * g0 or it > 50:
            dx = -np.linalg.lstsq(Hs, g, rcond=1e-12)[0]
            Kn = obj.step(K, dx)
            hn = obj.h(Kn, M)
            gn = obj.grad(hn)
            if np.max(np.abs(gn)) < gmax:
                K, hv, f, g, moved = Kn, hn, obj.value(hn), gn, True
        if not moved:
            curv = g @ Hs @ g
            alpha = (g @ g) / curv if curv > 0 else 1.0 / max(np.max(np.abs(Hs)), 1.0)
            for _ in range(40):
                Kn = obj.step(K, -alpha * g)
                hn = obj.h(Kn, M)
                fn = obj.value(hn)
                if fn <= f - 1e-4 * alpha * (g @ g):
                    K, hv, f, g, moved = Kn, hn, fn, obj.grad(hn), True
                    break
                alpha *= 0.5
        if not moved:
            break
    return K, hv, float(np.max(np.abs(g)))


def minimize_adjoint(v: LieElement, m: LieElement, p: SymmetricPair, cfg: SolverConfig = SolverConfig()):
    """Rotate ``m`` into the Cartan subalgebra: returns ``(K1, h)``.

    ``h = K1^dagger m K1`` with ``K1`` a stationary point of ``<v, Ad_K m>``.
    Restarts from seeded random points of ``exp(k)`` until ``h`` passes the
    membership and ``[h, v] = 0`` certificates.
    """
    n = p.n
    obj = _Objective(v, p)
    M = m.matrix()
    d = 2**n
    rng = np.random.default_rng(cfg.seed)
    K = np.eye(d, dtype=complex)
    best = (np.inf, None)
    for attempt in range(cfg.max_restarts + 1):
        K1, hv, gnorm = _descend(obj, M, K, cfg)
        h = LieElement(n, hv)
        off_h = off_norm(h, p.h)
        comm = max_norm(pauli.commutator(_restrict(h, p.h.indices), v).matrix())
        if off_h <= cfg.reassembly_tol and comm <= cfg.reassembly_tol:
            return K1, h
        log.debug("minimize_adjoint attempt %d: off-h %.3e [h,v] %.3e", attempt, off_h, comm)
        if off_h < best[0]:
            best = (off_h, gnorm)
        K = obj.step(np.eye(d, dtype=complex), rng.uniform(-np.pi, np.pi, len(p.k)))
    raise DecompositionError(
        "minimize_adjoint",
        "minimization did not reach the Cartan orbit floor",
        off_h=best[0],
        gradient=best[1],
    )


def _restrict(x: LieElement, idx) -> LieElement:
    v = np.zeros_like(x.vec)
    v[idx] = x.vec[idx]
    return LieElement(x.n, v)


def gradient_at(v: LieElement, m: LieElement, K: np.ndarray, p: SymmetricPair) -> np.ndarray:
    """``d/dt f(K exp(t e_i))`` at ``t = 0`` for each ``e_i`` in ``p.k``."""
    obj = _Objective(v, p)
    return obj.grad(obj.h(K, m.matrix()))


def khk_decompose(G: np.ndarray, p: SymmetricPair, cfg: SolverConfig = SolverConfig()) -> KHKResult:
    G = np.asarray(G, dtype=complex)
    if G.shape != (2**p.n, 2**p.n):
        raise DecompositionError("input", f"expected dimension {2**p.n}, got {G.shape}")
    g = pauli.from_matrix(su_log(G), p.n, tol=1e-6)
    leak = off_norm(g, p.ambient)
    if leak > cfg.reassembly_tol:
        raise DecompositionError("input", "generator leaves the pair's ambient algebra", off_ambient=leak)
    m, report = solve_m(g, G, p, cfg)
    K0 = compute_k0(G, m, p, cfg.reassembly_tol)
    v = dense_direction(p)
    K1, h = minimize_adjoint(v, m, p, cfg)
    h = _restrict(h, p.h.indices)
    H = matrix_exp(h.matrix())
    resid = max_norm(G - K0 @ K1 @ H @ dagger(K1))
    if resid > cfg.reassembly_tol:
        raise DecompositionError("reassembly", "G != K0 K1 H K1^dagger", residual=resid)
    k0 = pauli.from_matrix(su_log(K0), p.n, tol=1e-6)
    return KHKResult(
        K0=K0,
        K1=K1,
        H=H,
        m=m,
        h=h,
        residual_root=report.truncation.residual_norm,
        residual_reassembly=resid,
        orders_used=report.orders_used,
        off_k=off_norm(k0, p.k),
        off_h=off_norm(adjoint_action(K1, m), p.h),
        gradient=float(np.max(np.abs(gradient_at(v, m, K1, p)), initial=0.0)),
        report=report,
    )
