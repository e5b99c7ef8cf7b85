"""Fitzpatrick functions of finite monotone graphs and their conjugates.

For a graph ``{(a_i, a_i*)}`` the Fitzpatrick function is the max-affine
function::

    phi(x, x*) = max_i  <x, a_i*> + <a_i, x*> - <a_i, a_i*>

Its Fenchel conjugate (written with arguments ``(z*, z)``) is the linear
program::

    phi*(z*, z) = min  sum_i l_i c_i + sum_i <a_i, m_i>
                  s.t. sum_i l_i a_i* + sum_i m_i = z*,  sum_i l_i a_i = z,
                       l in the unit simplex,  m_i in N_D(a_i)

where ``c_i = <a_i, a_i*>``. The cone terms ``m_i`` appear only for the
constrained variant built from ``A + N_D`` with ``D`` the convex hull of
the domain points; without them the program is the plain convex-envelope
form of the conjugate of a max-affine function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import solvers
from .errors import SolverError
from .graph import Kind, OperatorGraph, require_valid
from .polyhedral import Cone, Polytope, normal_cone, tangent_cone
from .types import INF, ExtReal


@dataclass(frozen=True)
class ConicConstraint:
    """``x - point`` must lie in ``cone`` (a tangent cone of the domain)."""

    point: np.ndarray
    cone: Cone

    def holds(self, x) -> bool:
        return self.cone.contains(np.asarray(x, dtype=float) - self.point)


@dataclass(frozen=True)
class PolyhedralFunction:
    """``max_i <grad_i, (x, x*)> + const_i`` plus optional conic domain constraints.

    ``points`` and ``values`` keep the generating graph so that programs
    built on top (the proximal average) can be assembled without
    re-deriving it from the affine pieces.
    """

    dim: int
    points: np.ndarray
    values: np.ndarray
    domain_constraints: tuple[ConicConstraint, ...] = ()
    domain: Polytope | None = None

    @property
    def gradients(self) -> np.ndarray:
        return np.hstack([self.values, self.points])

    @property
    def constants(self) -> np.ndarray:
        return -np.einsum("ij,ij->i", self.points, self.values)

    def pieces(self, x, xs) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        xs = np.asarray(xs, dtype=float)
        return self.values @ x + self.points @ xs + self.constants

    def __call__(self, x, xs) -> ExtReal:
        return evaluate(self, x, xs)


def evaluate(f: PolyhedralFunction, x, xs) -> ExtReal:
    x = np.asarray(x, dtype=float)
    if any(not c.holds(x) for c in f.domain_constraints):
        return INF
    return ExtReal.finite(f.pieces(x, xs).max())


@dataclass(frozen=True)
class ConjugateProgram:
    points: np.ndarray
    values: np.ndarray
    normal_generators: tuple[np.ndarray, ...] = ()

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def costs(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.points, self.values)

    def cone_columns(self) -> tuple[np.ndarray, np.ndarray]:
        """All normal-cone generators as columns, and the cost ``<a_i, g>`` of each."""
        if not self.normal_generators:
            return np.zeros((self.dim, 0)), np.zeros(0)
        cols, cost = [], []
        for a, gens in zip(self.points, self.normal_generators):
            for g in gens:
                cols.append(g)
                cost.append(float(a @ g))
        if not cols:
            return np.zeros((self.dim, 0)), np.zeros(0)
        return np.array(cols).T, np.array(cost)

    def solve(self, zs, z) -> solvers.SolverReport:
        m, n = self.points.shape
        G, gcost = self.cone_columns()
        k = G.shape[1]
        A = np.block([
            [self.values.T, G],
            [self.points.T, np.zeros((n, k))],
        ])
        b = np.concatenate([np.asarray(zs, dtype=float), np.asarray(z, dtype=float)])
        c = np.concatenate([self.costs, gcost])
        blocks = [(solvers.Block.SIMPLEX, m)]
        if k:
            blocks.append((solvers.Block.NONNEG, k))
        return solvers.solve_lp(c, A, b, blocks)

    def __call__(self, zs, z) -> ExtReal:
        return conjugate_eval(self, zs, z)


def conjugate_eval(c: ConjugateProgram, zs, z) -> ExtReal:
    rep = c.solve(zs, z)
    if rep.status is solvers.Status.INFEASIBLE:
        return INF
    if not rep.converged:
        raise SolverError("conjugate program did not converge", rep)
    return ExtReal.finite(rep.objective)


def build_fitzpatrick(g: OperatorGraph) -> PolyhedralFunction:
    require_valid(g, Kind.MONOTONE)
    return PolyhedralFunction(g.dim, g.x, g.y)


def build_conjugate(g: OperatorGraph) -> ConjugateProgram:
    require_valid(g, Kind.MONOTONE)
    return ConjugateProgram(g.x, g.y)


def build_constrained(g: OperatorGraph, p: Polytope | None = None):
    """Fitzpatrick pair of ``A + N_D`` with ``D`` the hull of the domain.

    Returns ``(phi, conjugate)``. ``phi`` has the same affine pieces as the
    unconstrained function and one tangent-cone constraint per data point;
    ``conjugate`` carries normal-cone generators at every data point.
    """
    require_valid(g, Kind.MONOTONE)
    if p is None:
        p = Polytope(g.x)
    constraints = tuple(ConicConstraint(a, tangent_cone(p, a)) for a in g.x)
    gens = tuple(normal_cone(p, a).generators for a in g.x)
    phi = PolyhedralFunction(g.dim, g.x, g.y, constraints, p)
    return phi, ConjugateProgram(g.x, g.y, gens)
