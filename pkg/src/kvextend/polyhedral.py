"""Polytopes given as convex hulls of finitely many points.

A :class:`Polytope` keeps its generating points (V-representation) and
computes facets (H-representation) on demand, always relative to the
affine hull of the points: a segment in the plane has two facets, and the
orthogonal complement of its affine hull is folded into every normal cone.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import solvers
from .errors import FacetLimitError, OutsidePolytopeError, SolverError

MAX_FACET_DIM = 4
MAX_FACET_POINTS = 12
RANK_TOL = 1e-10
MEMBER_TOL = 1e-9
ACTIVE_TOL = 1e-8
CONE_TOL = 1e-8


@dataclass(frozen=True)
class Halfspace:
    """``<normal, x> <= offset`` with a unit ``normal``."""

    normal: np.ndarray
    offset: float

    def value(self, x) -> float:
        return float(self.normal @ np.asarray(x, dtype=float) - self.offset)


@dataclass(frozen=True)
class AffineHull:
    center: np.ndarray
    basis: np.ndarray        # (dim, k), orthonormal columns spanning the directions
    complement: np.ndarray   # (dim, dim - k), orthonormal columns

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def coords(self, points) -> np.ndarray:
        return (np.atleast_2d(points) - self.center) @ self.basis


def affine_hull(points: np.ndarray) -> AffineHull:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    center = points.mean(axis=0)
    dim = points.shape[1]
    _, s, vt = np.linalg.svd(points - center, full_matrices=True)
    k = int(np.sum(s > RANK_TOL * s[0])) if s.size and s[0] > 0 else 0
    return AffineHull(center, vt[:k].T.copy(), vt[k:dim].T.copy())


@dataclass(frozen=True)
class Cone:
    """Finitely generated cone ``{sum mu_j g_j : mu >= 0}``."""

    dim: int
    generators: np.ndarray   # (count, dim)

    def contains(self, v, tol: float = CONE_TOL) -> bool:
        v = np.asarray(v, dtype=float)
        if self.generators.shape[0] == 0:
            return bool(np.linalg.norm(v) <= tol * max(1.0, np.linalg.norm(v)))
        _, res = solvers.nnls(self.generators.T, v)
        return res <= tol * max(1.0, np.linalg.norm(v))


class Polytope:
    """Convex hull of finitely many points in R^dim.

    Facets are computed lazily the first time they are needed. Concurrent
    first calls may both compute them; the result is identical so the
    duplicated work is harmless.
    """

    def __init__(self, points, dim: int | None = None):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if dim is not None and pts.shape[1] != dim:
            raise ValueError(f"points have length {pts.shape[1]}, expected {dim}")
        if pts.shape[0] == 0:
            raise ValueError("polytope needs at least one point")
        _, idx = np.unique(pts, axis=0, return_index=True)
        self.vertices = pts[np.sort(idx)]
        self.vertices.setflags(write=False)
        self.dim = pts.shape[1]
        self.hull = affine_hull(self.vertices)
        self._facets: tuple[Halfspace, ...] | None = None

    def __repr__(self):
        return f"Polytope(dim={self.dim}, points={len(self.vertices)}, rank={self.hull.rank})"

    @property
    def diameter(self) -> float:
        v = self.vertices
        return float(np.max(np.linalg.norm(v[:, None] - v[None], axis=-1)))

    @property
    def facets(self) -> tuple[Halfspace, ...]:
        if self._facets is None:
            self._facets = _enumerate_facets(self)
        return self._facets

    def project(self, x) -> np.ndarray:
        return project(self, x)

    def distance(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(project(self, x) - x))

    def contains(self, x, tol: float = MEMBER_TOL) -> bool:
        return self.distance(x) <= tol * max(1.0, self.diameter)


def hull(points, dim: int | None = None) -> Polytope:
    return Polytope(points, dim)


def _enumerate_facets(p: Polytope) -> tuple[Halfspace, ...]:
    if p.dim > MAX_FACET_DIM or len(p.vertices) > MAX_FACET_POINTS:
        raise FacetLimitError(
            f"facet enumeration limit: dim {p.dim} (max {MAX_FACET_DIM}), "
            f"{len(p.vertices)} points (max {MAX_FACET_POINTS})"
        )
    k = p.hull.rank
    if k == 0:
        return ()
    q = p.hull.coords(p.vertices)
    # relative to the diameter, so thin polytopes keep both sides apart
    tol = MEMBER_TOL * p.diameter
    found: list[tuple[np.ndarray, float]] = []
    for subset in itertools.combinations(range(len(q)), k):
        base = q[subset[0]]
        M = q[list(subset[1:])] - base
        _, s, vt = np.linalg.svd(M.reshape(k - 1, k), full_matrices=True)
        if k > 1 and (s.size < k - 1 or s[-1] <= RANK_TOL * max(1.0, s[0])):
            continue
        normal = vt[-1]
        offset = float(normal @ base)
        side = q @ normal - offset
        if np.all(side <= tol):
            pass
        elif np.all(side >= -tol):
            normal, offset = -normal, -offset
        else:
            continue
        if any(np.allclose(normal, n2, atol=1e-9) and abs(offset - o2) <= tol for n2, o2 in found):
            continue
        found.append((normal, offset))
    out = []
    for normal, offset in found:
        amb = p.hull.basis @ normal
        out.append(Halfspace(amb, float(offset + amb @ p.hull.center)))
    return tuple(out)


def facets(p: Polytope) -> tuple[Halfspace, ...]:
    return p.facets


def normal_cone(p: Polytope, a) -> Cone:
    """Generators of ``N_D(a)``: active facet normals plus both signs of a
    basis of the orthogonal complement of the affine hull."""
    a = np.asarray(a, dtype=float)
    if not p.contains(a):
        raise OutsidePolytopeError(f"{a} is not in the polytope")
    tol = ACTIVE_TOL * p.diameter
    gens = [h.normal for h in p.facets if abs(h.value(a)) <= tol]
    comp = p.hull.complement.T
    gens.extend(comp)
    gens.extend(-comp)
    return Cone(p.dim, np.array(gens).reshape(-1, p.dim))


def tangent_cone(p: Polytope, a) -> Cone:
    """``T_D(a) = cone(D - a)``, generated by the vertices minus ``a``."""
    a = np.asarray(a, dtype=float)
    gens = p.vertices - a
    keep = np.linalg.norm(gens, axis=1) > 0
    return Cone(p.dim, gens[keep])


def tangent_cone_member(p: Polytope, a, x) -> bool:
    a = np.asarray(a, dtype=float)
    return tangent_cone(p, a).contains(np.asarray(x, dtype=float) - a)


def project(p: Polytope, x) -> np.ndarray:
    """Nearest point of ``p`` to ``x``, via the simplex-weighted QP."""
    x = np.asarray(x, dtype=float)
    V = p.vertices
    if len(V) == 1:
        return V[0].copy()
    qp = solvers.QuadraticProgram(
        V @ V.T, -V @ x, np.zeros((0, len(V))), np.zeros(0),
        ((solvers.Block.SIMPLEX, len(V)),), 0.5 * float(x @ x),
    )
    rep = solvers.solve_qp(qp)
    if not rep.converged:
        raise SolverError("projection onto polytope did not converge", rep)
    return rep.solution @ V
