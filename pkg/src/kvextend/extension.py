"""Maximal monotone extensions of finite graphs and the maps built from them.

Three extensions of a monotone graph ``A`` are available:

``PLAIN``
    the proximal-average extension ``A~``; full domain.
``CONSTRAINED``
    the proximal-average extension of ``A + N_D`` with ``D = conv dom A``;
    its domain closure is ``D``.
``PROJECTED``
    ``Q* B Q + N_D`` where ``B`` is the plain extension of the graph
    projected onto ``Y = span(dom A - centroid)``; its domain closure is
    also ``D``.

Every extension is used through its resolvent ``J = (Id + E)^{-1}``, which
is firmly nonexpansive and defined everywhere. Nonexpansive and firmly
nonexpansive data are extended by converting to the monotone picture,
extending, and converting back (``T~ = 2J - Id``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import solvers
from .errors import ConsistencyError, ConvergenceError, GraphStructureError, SolverError
from .fitzpatrick import build_conjugate, build_constrained as build_constrained_pair, build_fitzpatrick
from .graph import Kind, OperatorGraph, firmly_to_monotone, nonexpansive_to_monotone, require_valid
from .polyhedral import Polytope, affine_hull
from .proximal import PsiProgram

GAP_TOL = 1e-7
GAP_FAIL = 1e-6
DR_TOL = 1e-8
DR_MAX_ITER = 100000


class Variant(enum.Enum):
    PLAIN = "plain"
    CONSTRAINED = "constrained"
    PROJECTED = "projected"


@dataclass(frozen=True)
class ResolventResult:
    """Resolvent value with its evidence.

    For programs solved directly, ``gap`` is the optimal value of the
    membership-gap program (an upper bound on ``psi(u, x-u) - <u, x-u>``).
    For the projected variant it is the final fixed-point residual of the
    splitting iteration.
    """

    point: np.ndarray
    gap: float
    iterations: int


@dataclass(frozen=True)
class _Subspace:
    center: np.ndarray
    basis: np.ndarray
    inner: ExtensionOperator | None


@dataclass(frozen=True)
class ExtensionOperator:
    source: OperatorGraph
    variant: Variant
    prog: PsiProgram | None = None
    domain: Polytope | None = None
    subspace: _Subspace | None = None

    @property
    def dim(self) -> int:
        return self.source.dim

    def resolvent(self, x, scale: float = 1.0) -> np.ndarray:
        return self.resolve(x, scale).point

    def resolve(self, x, scale: float = 1.0) -> ResolventResult:
        if self.variant is Variant.PROJECTED:
            return resolvent_projected_result(self, x, scale)
        return _resolvent_direct(self, x, scale)

    __call__ = resolvent


def _resolvent_direct(e: ExtensionOperator, x, scale: float) -> ResolventResult:
    x = np.asarray(x, dtype=float)
    qp = e.prog.assemble_resolvent(x, scale)
    rep = solvers.solve_qp(qp)
    if not rep.converged:
        raise SolverError("resolvent program did not converge", rep)
    u = rep.solution[-e.dim:].copy()
    gap = max(rep.objective, 0.0)
    if rep.objective > GAP_FAIL:
        raise ConsistencyError(
            f"resolvent gap {rep.objective:.3g} should be zero; solver failure at x={x}"
        )
    return ResolventResult(u, gap, rep.iterations)


def resolvent(e: ExtensionOperator, x) -> np.ndarray:
    """``J(x)``: the unique ``u`` with ``x - u`` in ``E(u)``."""
    return e.resolvent(x)


def resolvent_projected_result(e: ExtensionOperator, x, scale: float = 1.0,
                               tol: float = DR_TOL, max_iter: int = DR_MAX_ITER) -> ResolventResult:
    """Resolvent of ``scale * (Q* B Q + N_D)`` by Douglas-Rachford splitting.

    Working in coordinates centered at the domain centroid, the equation
    ``0 in (u - x) + scale*Q*BQ(u) + N_D(u)`` is split into
    ``C1 = scale*Q*BQ + (Id - x)/2`` and ``C2 = N_D + (Id - x)/2``; both are
    strongly monotone, so the iteration converges linearly. Their resolvents
    are ``J_C1(w) = J_{(2/3)scale*Q*BQ}((2w + x)/3)`` and
    ``J_C2(w) = P_D((2w + x)/3)``, and
    ``J_{c*Q*BQ}(v) = J_{c*B}(P v) + (v - P v)``.
    """
    sub = e.subspace
    x = np.asarray(x, dtype=float)
    if sub.inner is None:
        return ResolventResult(sub.center.copy(), 0.0, 0)
    c, V = sub.center, sub.basis
    xt = x - c
    inner_scale = 2.0 * scale / 3.0

    def j_c1(w):
        v = (2.0 * w + xt) / 3.0
        coords = V.T @ v
        return V @ sub.inner.resolvent(coords, inner_scale) + (v - V @ coords)

    def j_c2(w):
        return e.domain.project((2.0 * w + xt) / 3.0 + c) - c

    w = xt.copy()
    residual = np.inf
    for it in range(1, max_iter + 1):
        p = j_c2(w)
        q = j_c1(2.0 * p - w)
        w = w + q - p
        residual = float(np.linalg.norm(q - p))
        if residual <= tol:
            return ResolventResult(p + c, residual, it)
    raise ConvergenceError(
        f"Douglas-Rachford did not reach {tol:g} in {max_iter} iterations", residual
    )


def resolvent_projected(e: ExtensionOperator, x) -> np.ndarray:
    return resolvent_projected_result(e, x).point


def build_plain(g: OperatorGraph) -> ExtensionOperator:
    require_valid(g, Kind.MONOTONE)
    prog = PsiProgram(build_fitzpatrick(g), build_conjugate(g))
    return ExtensionOperator(g, Variant.PLAIN, prog)


def build_constrained(g: OperatorGraph) -> ExtensionOperator:
    require_valid(g, Kind.MONOTONE)
    D = Polytope(g.x)
    phi, conj = build_constrained_pair(g, D)
    return ExtensionOperator(g, Variant.CONSTRAINED, PsiProgram(phi, conj), D)


def build_projected(g: OperatorGraph) -> ExtensionOperator:
    """Subspace-projected extension.

    The domain is translated so its centroid (a relative-interior point of
    the hull) is the origin; ``Y`` is the span of the translated domain, and
    the inner extension is the plain extension of the graph
    ``{(V'(a_i - c), V' a_i*)}`` written in an orthonormal basis ``V`` of
    ``Y``.
    """
    require_valid(g, Kind.MONOTONE)
    D = Polytope(g.x)
    aff = affine_hull(g.x)
    c, V = aff.center, aff.basis
    inner = None
    if V.shape[1] > 0:
        inner_graph = OperatorGraph.from_arrays(Kind.MONOTONE, (g.x - c) @ V, g.y @ V)
        inner = build_plain(inner_graph)
    return ExtensionOperator(g, Variant.PROJECTED, domain=D, subspace=_Subspace(c, V, inner))


def build(g: OperatorGraph, variant) -> ExtensionOperator:
    variant = Variant(variant)
    return {
        Variant.PLAIN: build_plain,
        Variant.CONSTRAINED: build_constrained,
        Variant.PROJECTED: build_projected,
    }[variant](g)


def to_monotone(g: OperatorGraph) -> OperatorGraph:
    """Monotone representation of any graph kind."""
    if g.kind is Kind.MONOTONE:
        return g
    if g.kind is Kind.FIRMLY:
        return firmly_to_monotone(require_valid(g))
    return nonexpansive_to_monotone(require_valid(g))


class NonexpansiveExtension:
    """Nonexpansive extension ``T~ = 2J - Id`` of nonexpansive data."""

    def __init__(self, t: OperatorGraph, variant=Variant.PLAIN):
        require_valid(t, Kind.NONEXPANSIVE)
        self.source = t
        self.variant = Variant(variant)
        self.operator = build(nonexpansive_to_monotone(t), self.variant)

    def firmly(self, x) -> np.ndarray:
        """The firmly nonexpansive extension ``F~ = J`` at ``x``."""
        return self.operator.resolvent(x)

    def evaluate(self, x) -> tuple[np.ndarray, ResolventResult]:
        x = np.asarray(x, dtype=float)
        res = self.operator.resolve(x)
        return 2.0 * res.point - x, res

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x)[0]


class KVExtension:
    """Nonexpansive extension with range inside ``conv ran T``: ``P_D o T~``."""

    def __init__(self, t: OperatorGraph):
        self.base = NonexpansiveExtension(t, Variant.PLAIN)
        self.source = t
        self.range_hull = Polytope(t.y)

    def evaluate(self, x) -> tuple[np.ndarray, ResolventResult]:
        tx, res = self.base.evaluate(x)
        return self.range_hull.project(tx), res

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x)[0]


def extend_nonexpansive(t: OperatorGraph, variant=Variant.PLAIN) -> NonexpansiveExtension:
    return NonexpansiveExtension(t, variant)


def extend_kv(t: OperatorGraph) -> KVExtension:
    if t.kind is not Kind.NONEXPANSIVE:
        raise GraphStructureError("extend_kv expects a nonexpansive graph")
    return KVExtension(t)
