"""Small dense convex solvers.

Every program in the package is written in one constraint language::

    minimize    1/2 w'Hw + g'w + const
    subject to  A w = b
                each variable block is free, nonnegative, or in the unit simplex

:func:`solve_qp` runs the Clarabel interior-point method and then polishes
the answer: it guesses the active bounds from the interior-point primal and
dual, solves the resulting equality-constrained KKT system directly, and
keeps the polished point only if it passes primal and dual feasibility.
Polishing brings residuals down to round-off, which the certificate checks
downstream depend on.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import clarabel
import numpy as np
import scipy.optimize
from scipy import sparse

from .errors import SolverError

QP_TOL = 1e-9
PHASE1_TOL = 1e-8
LP_REGULARIZATION = 1e-10


class Block(enum.Enum):
    FREE = "free"
    NONNEG = "nonnegative"
    SIMPLEX = "simplex"


class Status(enum.Enum):
    CONVERGED = "Converged"
    ITERATION_LIMIT = "IterationLimit"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class QuadraticProgram:
    H: np.ndarray
    g: np.ndarray
    A: np.ndarray
    b: np.ndarray
    blocks: tuple[tuple[Block, int], ...]
    const: float = 0.0

    def __post_init__(self):
        n = sum(size for _, size in self.blocks)
        H = np.asarray(self.H, dtype=float).reshape(n, n)
        H = 0.5 * (H + H.T)
        if n and np.linalg.eigvalsh(H).min() < -1e-10 * max(1.0, np.abs(H).max()):
            raise ValueError("quadratic term is not positive semidefinite")
        A = np.asarray(self.A, dtype=float).reshape(-1, n)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "g", np.asarray(self.g, dtype=float).reshape(n))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).reshape(A.shape[0]))
        object.__setattr__(self, "blocks", tuple((Block(k), int(s)) for k, s in self.blocks))

    @property
    def n(self) -> int:
        return self.g.shape[0]

    def objective(self, w) -> float:
        return float(0.5 * w @ self.H @ w + self.g @ w + self.const)

    def bounded_mask(self) -> np.ndarray:
        return np.concatenate(
            [np.full(s, k is not Block.FREE) for k, s in self.blocks] or [np.zeros(0, bool)]
        )

    def simplex_rows(self) -> tuple[np.ndarray, np.ndarray]:
        rows = []
        start = 0
        for kind, size in self.blocks:
            if kind is Block.SIMPLEX:
                r = np.zeros(self.n)
                r[start:start + size] = 1.0
                rows.append(r)
            start += size
        if not rows:
            return np.zeros((0, self.n)), np.zeros(0)
        return np.array(rows), np.ones(len(rows))

    def all_equalities(self) -> tuple[np.ndarray, np.ndarray]:
        S, s = self.simplex_rows()
        return np.vstack([self.A, S]), np.concatenate([self.b, s])


@dataclass(frozen=True)
class SolverReport:
    solution: np.ndarray
    objective: float
    primal_residual: float
    kkt_residual: float
    iterations: int
    status: Status
    multipliers: np.ndarray = field(default=None, repr=False)
    polished: bool = False

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto ``{l >= 0, sum(l) = 1}`` by sort-and-threshold."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    tau = css[rho] / (rho + 1)
    return np.maximum(v - tau, 0.0)


def nnls(A, b) -> tuple[np.ndarray, float]:
    """``min |A mu - b|`` over ``mu >= 0``; returns ``(mu, residual)``."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    if A.ndim == 1:
        A = A.reshape(-1, 1) if b.size == A.size else A.reshape(1, -1)
    if A.shape[1] == 0:
        return np.zeros(0), float(np.linalg.norm(b))
    mu, _ = scipy.optimize.nnls(A, b)
    return mu, float(np.linalg.norm(A @ mu - b))


def kkt_residuals(qp: QuadraticProgram, w, nu=None) -> tuple[float, float, np.ndarray]:
    """Primal residual, KKT residual, and equality multipliers at ``w``.

    Multipliers are fitted by least squares on the coordinates that are
    not at a bound, so the check does not depend on the solver's own duals.
    """
    Aall, ball = qp.all_equalities()
    bounded = qp.bounded_mask()
    primal = 0.0
    if Aall.shape[0]:
        primal = float(np.abs(Aall @ w - ball).max())
    if bounded.any():
        primal = max(primal, float(np.maximum(-w[bounded], 0.0).max()))
    grad = qp.H @ w + qp.g
    if nu is None:
        inner = ~bounded | (w > 1e-9 * _scale(qp))
        if Aall.shape[0] and inner.any():
            nu = np.linalg.lstsq(Aall[:, inner].T, -grad[inner], rcond=None)[0]
        else:
            nu = np.zeros(Aall.shape[0])
    z = grad + Aall.T @ nu
    dual = np.abs(z[~bounded]).max() if (~bounded).any() else 0.0
    if bounded.any():
        zb, wb = z[bounded], np.maximum(w[bounded], 0.0)
        dual = max(dual, float(np.maximum(-zb, 0.0).max()), float(np.abs(zb * wb).max()))
    return primal, float(dual), nu


def _scale(qp: QuadraticProgram) -> float:
    return max(1.0, np.abs(qp.g).max(initial=0.0), np.abs(qp.b).max(initial=0.0))


def _clarabel(qp: QuadraticProgram, tol: float, max_iter: int, equilibrate: bool = True):
    Aall, ball = qp.all_equalities()
    bounded = np.nonzero(qp.bounded_mask())[0]
    nb = bounded.size
    Abound = np.zeros((nb, qp.n))
    Abound[np.arange(nb), bounded] = -1.0
    A = sparse.csc_matrix(np.vstack([Aall, Abound]))
    rhs = np.concatenate([ball, np.zeros(nb)])
    cones = []
    if Aall.shape[0]:
        cones.append(clarabel.ZeroConeT(Aall.shape[0]))
    if nb:
        cones.append(clarabel.NonnegativeConeT(nb))
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = int(min(max_iter, 500))
    settings.tol_gap_abs = settings.tol_gap_rel = min(tol, 1e-10)
    settings.tol_feas = min(tol, 1e-10)
    settings.tol_ktratio = 1e-8
    settings.equilibrate_enable = equilibrate
    P = sparse.csc_matrix(np.triu(qp.H))
    sol = clarabel.DefaultSolver(P, qp.g, A, rhs, cones, settings).solve()
    z = np.asarray(sol.z)
    nu = z[: Aall.shape[0]]
    zb = np.zeros(qp.n)
    zb[bounded] = z[Aall.shape[0]:]
    return str(sol.status), np.asarray(sol.x), nu, zb, int(sol.iterations)


def _polish(qp: QuadraticProgram, w, nu, zb, tol):
    """Solve the KKT system for the active set suggested by ``(w, zb)``.

    The system is solved for the minimum-norm correction to the
    interior-point iterate, so on degenerate problems the polished point
    stays on the same (interior) part of the optimal face.
    """
    Aall, ball = qp.all_equalities()
    bounded = qp.bounded_mask()
    scale = _scale(qp)
    p = Aall.shape[0]
    for active in (bounded & (w < zb), bounded & (w <= 1e-9 * scale)):
        active = active.copy()
        for _ in range(4):
            free = ~active
            nf = int(free.sum())
            K = np.zeros((nf + p, nf + p))
            K[:nf, :nf] = qp.H[np.ix_(free, free)]
            K[:nf, nf:] = Aall[:, free].T
            K[nf:, :nf] = Aall[:, free]
            rhs = np.concatenate([-qp.g[free], ball])
            base = np.concatenate([w[free], nu])
            sol = base + np.linalg.lstsq(K, rhs - K @ base, rcond=None)[0]
            cand = np.zeros(qp.n)
            cand[free] = sol[:nf]
            negative = bounded & free & (cand < -tol * scale)
            if not negative.any():
                break
            active |= negative
        if np.abs(K @ sol - rhs).max(initial=0.0) > tol * scale or negative.any():
            continue
        cand[bounded] = np.maximum(cand[bounded], 0.0)
        primal, dual, nu_c = kkt_residuals(qp, cand, sol[nf:])
        if primal <= tol * scale and dual <= tol * scale:
            return cand, nu_c, primal, dual
    return None


def solve_qp(qp: QuadraticProgram, tol: float = QP_TOL, max_iter: int = 200000) -> SolverReport:
    """Solve ``qp``; see the module docstring for the method.

    Residuals are absolute and judged against ``tol`` times
    ``max(1, |g|_inf, |b|_inf)``. A problem reported infeasible by the
    interior-point method is re-examined with a feasibility LP; it is
    declared :attr:`Status.INFEASIBLE` only if the smallest reachable
    equality residual exceeds ``1e-8`` relative to ``b``. Otherwise the right-hand side is
    replaced by the nearest reachable one and the solve is repeated.
    """
    status, w, nu, zb, iters = _clarabel(qp, tol, max_iter)
    if status in ("MaxIterations", "InsufficientProgress", "NumericalError"):
        # equilibration occasionally stalls on badly scaled simplex blocks
        retry = _clarabel(qp, tol, max_iter, equilibrate=False)
        if "Solved" in retry[0]:
            status, w, nu, zb = retry[:4]
        iters += retry[4]
    if "Infeasible" in status:
        residual, w1 = _phase1(qp)
        if residual > PHASE1_TOL * max(1.0, np.abs(qp.b).max(initial=0.0)):
            return SolverReport(w1, np.inf, residual, np.inf, iters, Status.INFEASIBLE)
        qp = QuadraticProgram(qp.H, qp.g, qp.A, qp.A @ w1, qp.blocks, qp.const)
        status, w, nu, zb, more = _clarabel(qp, tol, max_iter)
        iters += more
        if "Infeasible" in status:
            raise SolverError(f"interior-point method reported {status} after phase 1")
    if "DualInfeasible" in status:
        raise SolverError("program is unbounded below")
    if "Solved" not in status and status != "MaxIterations":
        w = np.nan_to_num(w)
    polished = _polish(qp, w, nu, zb, tol) if np.all(np.isfinite(w)) else None
    if polished is not None:
        w, nu, primal, dual = polished
    else:
        primal, dual, nu = kkt_residuals(qp, w, nu)
    scale = _scale(qp)
    ok = primal <= tol * scale and dual <= tol * scale
    return SolverReport(
        solution=w,
        objective=qp.objective(w),
        primal_residual=primal,
        kkt_residual=dual,
        iterations=iters,
        status=Status.CONVERGED if ok else Status.ITERATION_LIMIT,
        multipliers=nu,
        polished=polished is not None,
    )


def _phase1(qp: QuadraticProgram) -> tuple[float, np.ndarray]:
    """Smallest equality residual ``|A w - b|`` reachable within the blocks.

    Solved as an l1 feasibility LP with the HiGHS simplex, which lands on
    vertices exactly; an interior method stalls just short of the boundary
    when the only feasible points sit there.
    """
    A, b = qp.A, qp.b
    m, n = A.shape
    bounds = []
    eq_rows = [np.hstack([A, np.eye(m), -np.eye(m)])]
    eq_rhs = [b]
    start = 0
    for kind, size in qp.blocks:
        bounds += [(None, None) if kind is Block.FREE else (0, None)] * size
        if kind is Block.SIMPLEX:
            row = np.zeros(n + 2 * m)
            row[start:start + size] = 1.0
            eq_rows.append(row[None, :])
            eq_rhs.append([1.0])
        start += size
    bounds += [(0, None)] * (2 * m)
    cost = np.concatenate([np.zeros(n), np.ones(2 * m)])
    res = scipy.optimize.linprog(cost, A_eq=np.vstack(eq_rows), b_eq=np.concatenate(eq_rhs),
                                 bounds=bounds, method="highs-ds")
    if res.status != 0:
        raise SolverError(f"feasibility program failed: {res.message}")
    w = res.x[:n]
    return float(np.linalg.norm(A @ w - b)), w


def solve_lp(c, A, b, blocks, tol: float = QP_TOL, max_iter: int = 200000,
             regularization: float = LP_REGULARIZATION) -> SolverReport:
    """Minimize ``c'w`` under the same constraint language as :func:`solve_qp`.

    A phase 1 feasibility LP decides feasibility (residual above ``1e-8``
    relative to ``b`` means infeasible), then the LP is solved with a
    ``regularization * |w|^2`` term that picks the minimum-norm optimum.
    The reported objective is the unregularized ``c'w``.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    A = np.asarray(A, dtype=float).reshape(-1, n)
    b = np.asarray(b, dtype=float).reshape(A.shape[0])
    base = QuadraticProgram(np.zeros((n, n)), c, A, b, blocks)
    if A.shape[0]:
        residual, w1 = _phase1(base)
        if residual > PHASE1_TOL * max(1.0, np.abs(b).max()):
            return SolverReport(w1, np.inf, residual, np.inf, 0, Status.INFEASIBLE)
        b = A @ w1 if residual > 0 else b
    qp = QuadraticProgram(regularization * np.eye(n), c, A, b, blocks)
    rep = solve_qp(qp, tol, max_iter)
    w = rep.solution
    if np.abs(w).max(initial=0.0) > 1e6 * max(1.0, np.abs(b).max(initial=0.0)):
        raise SolverError("linear program is unbounded below", rep)
    return SolverReport(
        solution=w,
        objective=float(c @ w),
        primal_residual=rep.primal_residual,
        kkt_residual=rep.kkt_residual,
        iterations=rep.iterations,
        status=rep.status,
        multipliers=rep.multipliers,
        polished=rep.polished,
    )
