"""Proximal average of a Fitzpatrick function and its transposed conjugate.

``psi(x, x*)`` is the minimum over decompositions ``(x, x*) = ((y+z)/2, (y*+z*)/2)`` of::

    phi(y, y*)/2 + phi*(z*, z)/2 + (|y - z|^2 + |y* - z*|^2)/8

and the extension of the data graph is exactly the set where
``psi(x, x*) = <x, x*>``. Everywhere else ``psi`` is strictly larger.

Both ``phi`` (max-affine) and ``phi*`` (a linear program) are polyhedral, so
the whole minimization is one QP. ``z`` and ``z*`` are written through the
conjugate's simplex weights ``l`` and cone terms ``m``; ``y`` and ``y*`` are
then eliminated by the decomposition constraint, and ``phi(y, y*)`` enters
through an epigraph variable ``t`` with one slack per affine piece.

Variable layout (blocks in order)::

    l  simplex(m)   conjugate weights
    m  nonneg(k)    normal-cone coefficients (constrained variant only)
    s  nonneg(m)    slacks of t >= piece_j(y, y*)
    t  free(1)
    mu simplex(m)   hull weights forcing y into D (constrained variant only)
    u  free(n)      resolvent unknown (resolvent programs only)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import solvers
from .errors import SolverError
from .fitzpatrick import ConjugateProgram, PolyhedralFunction, conjugate_eval, evaluate
from .solvers import Block, QuadraticProgram
from .types import INF, ExtReal, ValidationReport

MEMBER_TOL = 1e-7
CERT_TOL = 1e-6


@dataclass(frozen=True)
class Certificate:
    """Decomposition ``(x, x*) = ((x1+x2)/2, (x1s+x2s)/2)`` with its residuals.

    ``fenchel_gap`` is ``phi(x1, x1s) + phi*(x2s, x2) - <x1, x2s> - <x2, x1s>``
    and ``linear_gap`` is ``|(x1 - x2) - (x1s - x2s)|``. When both vanish,
    ``(x2s, x2)`` is a subgradient of ``phi`` at ``(x1, x1s)`` and the
    midpoint lies on the extension's graph.
    """

    x1: np.ndarray
    x1s: np.ndarray
    x2: np.ndarray
    x2s: np.ndarray
    fenchel_gap: float
    linear_gap: float

    @property
    def point(self) -> tuple[np.ndarray, np.ndarray]:
        return 0.5 * (self.x1 + self.x2), 0.5 * (self.x1s + self.x2s)

    @property
    def valid(self) -> bool:
        return self.fenchel_gap <= CERT_TOL and self.linear_gap <= CERT_TOL


@dataclass(frozen=True)
class PsiResult:
    value: ExtReal
    pairing: float
    certificate: Certificate | None
    report: solvers.SolverReport

    @property
    def gap(self) -> float:
        return float(self.value) - self.pairing


@dataclass(frozen=True)
class _Layout:
    m: int
    n: int
    k: int
    constrained: bool
    resolvent: bool

    def __post_init__(self):
        sizes = [("l", self.m), ("m", self.k), ("s", self.m), ("t", 1)]
        if self.constrained:
            sizes.append(("mu", self.m))
        if self.resolvent:
            sizes.append(("u", self.n))
        offsets, start = {}, 0
        for name, size in sizes:
            offsets[name] = slice(start, start + size)
            start += size
        object.__setattr__(self, "slices", offsets)
        object.__setattr__(self, "size", start)

    @property
    def blocks(self):
        kinds = {"l": Block.SIMPLEX, "m": Block.NONNEG, "s": Block.NONNEG,
                 "t": Block.FREE, "mu": Block.SIMPLEX, "u": Block.FREE}
        return tuple((kinds[name], sl.stop - sl.start) for name, sl in self.slices.items()
                     if sl.stop > sl.start)


@dataclass(frozen=True)
class PsiProgram:
    """Data needed to assemble the proximal-average QP for one graph."""

    phi: PolyhedralFunction
    conj: ConjugateProgram

    @property
    def dim(self) -> int:
        return self.phi.dim

    @property
    def constrained(self) -> bool:
        return self.phi.domain is not None

    def _layout(self, resolvent: bool) -> _Layout:
        G, _ = self.conj.cone_columns()
        return _Layout(len(self.phi.points), self.dim, G.shape[1], self.constrained, resolvent)

    def _assemble(self, L: _Layout, Ex, ex, Es, es, subtract_pairing: bool) -> QuadraticProgram:
        """QP in the variable vector ``v`` with ``x = Ex v + ex`` and ``x* = Es v + es``."""
        P, V = self.conj.points, self.conj.values
        G, gcost = self.conj.cone_columns()
        c = self.conj.costs
        n, N, sl = L.n, L.size, L.slices
        Z = np.zeros((n, N))
        Z[:, sl["l"]] = P.T
        Zs = np.zeros((n, N))
        Zs[:, sl["l"]] = V.T
        Zs[:, sl["m"]] = G
        # y = Ey v + 2 ex,  y* = Eys v + 2 es
        Ey, Eys = 2 * Ex - Z, 2 * Es - Zs
        rows = V @ Ey + P @ Eys
        rows[:, sl["s"]] += np.eye(L.m)
        rows[:, sl["t"]] -= 1.0
        rhs = c - 2 * V @ ex - 2 * P @ es
        A, b = [rows], [rhs]
        if L.constrained:
            dom = np.zeros((n, N))
            dom[:, sl["mu"]] = P.T
            A.append(dom - Ey)
            b.append(2 * ex)
        R1, R2 = Ex - Z, Es - Zs
        H = R1.T @ R1 + R2.T @ R2
        g = R1.T @ ex + R2.T @ es
        g[sl["t"]] += 0.5
        g[sl["l"]] += 0.5 * c
        g[sl["m"]] += 0.5 * gcost
        const = 0.5 * (ex @ ex + es @ es)
        if subtract_pairing:
            H = H - (Ex.T @ Es + Es.T @ Ex)
            g = g - (Es.T @ ex + Ex.T @ es)
            const -= ex @ es
        return QuadraticProgram(H, g, np.vstack(A), np.concatenate(b), L.blocks, const)

    def assemble(self, x, xs) -> QuadraticProgram:
        L = self._layout(False)
        zero = np.zeros((self.dim, L.size))
        return self._assemble(L, zero, np.asarray(x, float), zero, np.asarray(xs, float), False)

    def assemble_resolvent(self, w, scale: float = 1.0) -> QuadraticProgram:
        """QP whose minimum over ``u`` is ``psi(u, x*) - <u, x*>`` with ``x* = (w - u)/scale``.

        The minimum is zero exactly at ``u = J_{scale * A~}(w)``.
        """
        L = self._layout(True)
        S = np.zeros((self.dim, L.size))
        S[:, L.slices["u"]] = np.eye(self.dim)
        w = np.asarray(w, dtype=float)
        return self._assemble(L, S, np.zeros(self.dim), -S / scale, w / scale, True)

    def decompose(self, solution, x, xs, L: _Layout | None = None):
        """Recover ``(y, y*, z, z*)`` and the conjugate-side cost from a QP solution."""
        L = L or self._layout(False)
        sl = L.slices
        G, gcost = self.conj.cone_columns()
        lam, mcoef = solution[sl["l"]], solution[sl["m"]]
        z = self.conj.points.T @ lam
        zs = self.conj.values.T @ lam + G @ mcoef
        return 2 * x - z, 2 * xs - zs, z, zs, float(self.conj.costs @ lam + gcost @ mcoef)


def build_psi_program(phi: PolyhedralFunction, conj: ConjugateProgram) -> PsiProgram:
    return PsiProgram(phi, conj)


def _certificate(prog: PsiProgram, y, ys, z, zs, conj_cost: float) -> Certificate:
    phi_val = float(prog.phi.pieces(y, ys).max())
    fenchel = phi_val + conj_cost - float(y @ zs) - float(z @ ys)
    linear = float(np.linalg.norm((y - z) - (ys - zs)))
    return Certificate(y, ys, z, zs, fenchel, linear)


def psi_solve(prog: PsiProgram, x, xs) -> PsiResult:
    x = np.asarray(x, dtype=float)
    xs = np.asarray(xs, dtype=float)
    qp = prog.assemble(x, xs)
    rep = solvers.solve_qp(qp)
    pairing = float(x @ xs)
    if rep.status is solvers.Status.INFEASIBLE:
        return PsiResult(INF, pairing, None, rep)
    if not rep.converged:
        raise SolverError("proximal-average program did not converge", rep)
    y, ys, z, zs, cost = prog.decompose(rep.solution, x, xs)
    cert = _certificate(prog, y, ys, z, zs, cost)
    return PsiResult(ExtReal.finite(rep.objective), pairing, cert, rep)


def psi_eval(prog: PsiProgram, x, xs) -> tuple[ExtReal, Certificate | None]:
    """Value of the proximal average at ``(x, xs)`` and the optimal decomposition.

    ``(INF, None)`` when no decomposition is feasible (constrained variant
    with ``x`` outside the domain hull).
    """
    res = psi_solve(prog, x, xs)
    return res.value, res.certificate


def membership_gap(prog: PsiProgram, x, xs) -> float:
    """``psi(x, xs) - <x, xs>``: zero on the extension's graph, positive off it."""
    return psi_solve(prog, x, xs).gap


def graph_member(prog: PsiProgram, x, xs, tol: float = MEMBER_TOL) -> bool:
    return membership_gap(prog, x, xs) <= tol


def verify_certificate(prog: PsiProgram, cert: Certificate) -> ValidationReport:
    """Recompute both residuals of ``cert`` from scratch.

    The conjugate is evaluated by its own linear program, not taken from
    the QP that produced the certificate.
    """
    phi_val = evaluate(prog.phi, cert.x1, cert.x1s)
    conj_val = conjugate_eval(prog.conj, cert.x2s, cert.x2)
    total = phi_val + conj_val
    if total.is_finite:
        fenchel = float(total) - float(cert.x1 @ cert.x2s) - float(cert.x2 @ cert.x1s)
    else:
        fenchel = np.inf
    linear = float(np.linalg.norm((cert.x1 - cert.x2) - (cert.x1s - cert.x2s)))
    ok = fenchel <= CERT_TOL and linear <= CERT_TOL
    return ValidationReport(ok, worst=max(fenchel, linear),
                            details={"fenchel_gap": fenchel, "linear_gap": linear})
