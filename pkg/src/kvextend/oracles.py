"""Brute-force verifiers that share no code path with the QP machinery.

The proximal-average objective is minimized by enumeration. Since
``phi*(z*, z)`` is finite exactly on the hull of the swapped graph points
``w_i = (a_i*, a_i)``, the search runs over a regular grid laid in that
hull's affine span. On the grid ``phi*`` is evaluated exactly: the conjugate
of a max-affine function is the lower convex envelope of the values
``c_i = <a_i, a_i*>`` over the points ``w_i``, and its minimum at ``w`` is
attained by some affinely independent subset containing ``w`` in its hull,
so enumerating subsets and taking the smallest barycentric interpolant
gives the value with no optimization at all.

These routines are meant for one- and two-dimensional data; cost grows
like ``resolution ** rank``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .graph import Kind, OperatorGraph, require_valid
from .types import ValidationReport

MAX_DIM = 2
MAX_RESOLUTION = 200
RANK_TOL = 1e-10
BARY_TOL = 1e-12
CHUNK = 1 << 16
ZOOM = 25


@dataclass(frozen=True)
class OracleResult:
    """Grid minimum with its location and an a priori error bound.

    ``error`` bounds ``|value - exact minimum|`` for value oracles and
    ``|point - exact minimizer|`` for argmin oracles.
    """

    value: float
    point: np.ndarray
    spacing: float
    error: float

    def __float__(self) -> float:
        return float(self.value)


class _HullGrid:
    """Regular grid on the affine span of ``points`` with the exact envelope of ``values``."""

    def __init__(self, points: np.ndarray, values: np.ndarray, resolution: int, bounds=None):
        self.center = points.mean(axis=0)
        _, s, vt = np.linalg.svd(points - self.center)
        k = int(np.sum(s > RANK_TOL * s[0])) if s.size and s[0] > 0 else 0
        self.basis = vt[:k].T
        q = (points - self.center) @ self.basis
        self.rank = k
        if k == 0:
            self.coords = np.zeros((1, 0))
            self.spacing = 0.0
        else:
            if bounds is None:
                lo, hi = q.min(axis=0), q.max(axis=0)
            else:
                lo, hi = (np.broadcast_to(np.asarray(b, float), (k,)) for b in bounds)
            axes = [np.linspace(l, h, resolution) for l, h in zip(lo, hi)]
            self.spacing = float(max((h - l) / (resolution - 1) for l, h in zip(lo, hi)))
            self.coords = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, k)
        self.envelope, self.slope = _envelope(q, values, self.coords)
        keep = np.isfinite(self.envelope)
        self.coords = self.coords[keep]
        self.envelope = self.envelope[keep]
        self.points = self.center + self.coords @ self.basis.T


def _envelope(q: np.ndarray, c: np.ndarray, t: np.ndarray):
    """Lower convex envelope of ``(q_i, c_i)`` at ``t``; ``inf`` outside the hull.

    Also returns the largest gradient norm over all simplex interpolants,
    a Lipschitz bound for the envelope.
    """
    m, k = q.shape
    out = np.full(len(t), np.inf)
    slope = 0.0
    if k == 0:
        out[:] = c.min()
        return out, slope
    ones = np.ones((len(t), 1))
    rhs = np.hstack([t, ones])
    for subset in itertools.combinations(range(m), k + 1):
        idx = list(subset)
        M = np.vstack([q[idx].T, np.ones(k + 1)])
        if abs(np.linalg.det(M)) <= RANK_TOL * max(1.0, np.abs(M).max()) ** (k + 1):
            continue
        Minv = np.linalg.inv(M)
        lam = rhs @ Minv.T
        inside = np.all(lam >= -BARY_TOL, axis=1)
        val = lam @ c[idx]
        out = np.where(inside & (val < out), val, out)
        # gradient of the affine interpolant: c_idx @ Minv[:, :k]
        slope = max(slope, float(np.linalg.norm(c[idx] @ Minv[:, :k])))
    return out, slope


def _check(g: OperatorGraph, resolution: int):
    require_valid(g, Kind.MONOTONE)
    if g.dim > MAX_DIM:
        raise ValueError(f"oracles support dim <= {MAX_DIM}, got {g.dim}")
    if not 2 <= resolution <= MAX_RESOLUTION:
        raise ValueError(f"resolution must be in [2, {MAX_RESOLUTION}]")


def _swapped(g: OperatorGraph):
    """Points ``(a*, a)`` and costs ``<a, a*>`` of the conjugate."""
    return np.hstack([g.y, g.x]), np.einsum("ij,ij->i", g.x, g.y)


def _phi(g: OperatorGraph, y: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Fitzpatrick function by direct max, vectorized over rows of ``y``, ``ys``."""
    c = np.einsum("ij,ij->i", g.x, g.y)
    return (y @ g.y.T + ys @ g.x.T - c).max(axis=1)


def _objective(g: OperatorGraph, grid: _HullGrid, x: np.ndarray, xs: np.ndarray) -> np.ndarray:
    n = g.dim
    zs, z = grid.points[:, :n], grid.points[:, n:]
    y, ys = 2 * x - z, 2 * xs - zs
    quad = np.sum((y - z) ** 2, axis=1) + np.sum((ys - zs) ** 2, axis=1)
    return 0.5 * _phi(g, y, ys) + 0.5 * grid.envelope + 0.125 * quad


def _lipschitz(g: OperatorGraph, grid: _HullGrid, x: np.ndarray, xs: np.ndarray) -> float:
    """Lipschitz bound of the objective along the hull, as a function of ``(z*, z)``."""
    grad_phi = float(np.max(np.linalg.norm(np.hstack([g.y, g.x]), axis=1)))
    n = g.dim
    pts = grid.points
    far = float(np.max(np.linalg.norm(np.hstack([xs - pts[:, :n], x - pts[:, n:]]), axis=1)))
    return grad_phi + 0.5 * grid.slope + far


def _psi_on(g: OperatorGraph, grid: _HullGrid, x, xs) -> OracleResult:
    x = np.asarray(x, dtype=float)
    xs = np.asarray(xs, dtype=float)
    vals = _objective(g, grid, x, xs)
    i = int(np.argmin(vals))
    err = _lipschitz(g, grid, x, xs) * grid.spacing * np.sqrt(max(grid.rank, 1))
    return OracleResult(float(vals[i]), grid.points[i].copy(), grid.spacing, float(err))


def grid_psi(g: OperatorGraph, x, xs, bounds=None, resolution: int = 199,
             refine: int = 0) -> OracleResult:
    """Proximal average at ``(x, xs)`` by exhaustive search over decompositions.

    ``bounds`` optionally replaces the default search box, which is the
    bounding box of the swapped graph points in the coordinates of their
    affine span. The returned ``error`` is ``L * h * sqrt(rank)`` with ``L``
    a Lipschitz bound of the objective on the hull and ``h`` the spacing.

    With ``refine > 0`` the search is repeated that many times on a box of
    ``ZOOM`` grid steps around the current best point. The objective is convex
    in the decomposition, so zooming does not get trapped, but the error
    bound then only describes the last level.
    """
    _check(g, resolution)
    pts, cost = _swapped(g)
    grid = _HullGrid(pts, cost, resolution, bounds)
    best = _psi_on(g, grid, x, xs)
    for _ in range(refine):
        if grid.rank == 0:
            break
        c = (best.point - grid.center) @ grid.basis
        half = ZOOM * grid.spacing
        grid = _HullGrid(pts, cost, resolution, (c - half, c + half))
        res = _psi_on(g, grid, x, xs)
        best = res if res.value <= best.value else OracleResult(
            best.value, best.point, res.spacing, res.error)
    return best


def grid_conjugate(g: OperatorGraph, zs, z, bounds, resolution: int = 199) -> OracleResult:
    """``sup <x, z*> + <z, x*> - phi(x, x*)`` over a box grid in ``(x, x*)``.

    ``bounds = (lo, hi)`` applies to every coordinate. The sup is a lower
    bound for the conjugate; it is exact when a maximizer lies on the grid.
    """
    _check(g, resolution)
    n = g.dim
    lo, hi = bounds
    axis = np.linspace(lo, hi, resolution)
    zs = np.asarray(zs, dtype=float)
    z = np.asarray(z, dtype=float)
    best, arg = -np.inf, None
    cube = itertools.product(axis, repeat=2 * n)
    while True:
        block = np.array(list(itertools.islice(cube, CHUNK)))
        if block.size == 0:
            break
        x, xs = block[:, :n], block[:, n:]
        vals = x @ zs + xs @ z - _phi(g, x, xs)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, arg = float(vals[i]), block[i].copy()
    return OracleResult(best, arg, float(axis[1] - axis[0]), 0.0)


def _gap_lipschitz(g: OperatorGraph, grid: _HullGrid, x, us) -> float:
    """Lipschitz bound of ``u -> psi(u, x-u) - <u, x-u>`` over the rows of ``us``.

    By the envelope theorem the gradient of ``psi`` is the gradient of the
    objective in ``(x, x*)`` at the optimum: a piece gradient of ``phi``
    plus ``(x, x*) - (z, z*)``.
    """
    n = g.dim
    grad_phi = float(np.max(np.linalg.norm(np.hstack([g.y, g.x]), axis=1)))
    far = 0.0
    for corner in (us.min(axis=0), us.max(axis=0)):
        pair = np.concatenate([x - corner, corner])
        far = max(far, float(np.max(np.linalg.norm(grid.points - pair, axis=1))))
    far += float(np.linalg.norm(us.max(axis=0) - us.min(axis=0))) * np.sqrt(2)
    lin = float(np.max(np.linalg.norm(x - 2 * us, axis=1)))
    return np.sqrt(2) * (grad_phi + far) + lin


def _bracket(u: np.ndarray, upper: np.ndarray, err: np.ndarray, i: int) -> float:
    """Distance from ``u[i]`` to the ends of an interval containing the minimizer.

    The gap is convex, so it is nonincreasing up to its minimizer and
    nondecreasing after it. A grid point whose certified lower bound
    ``upper - err`` exceeds the best upper bound ``upper[i]`` therefore has
    the minimizer strictly on the same side as ``u[i]``.
    """
    lower = upper - err
    above = lower > upper[i]
    left = np.flatnonzero(above[:i])
    right = np.flatnonzero(above[i + 1:])
    lo = u[left[-1]] if left.size else u[0]
    hi = u[i + 1 + right[0]] if right.size else u[-1]
    return float(max(u[i] - lo, hi - u[i]))


def resolvent_box(g: OperatorGraph, x) -> tuple[np.ndarray, np.ndarray]:
    """Box guaranteed to contain ``J(x)`` for any maximal monotone extension.

    ``J`` is nonexpansive and ``J(a + a*) = a``, so ``|J(x) - a| <= |x - a - a*|``.
    """
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x - g.x - g.y, axis=1)
    i = int(np.argmin(r))
    return g.x[i] - r[i], g.x[i] + r[i]


def grid_resolvent(g: OperatorGraph, x, bounds=None, resolution: int = 199,
                   psi_resolution: int = 199) -> OracleResult:
    """Argmin over a grid of ``u`` of ``psi(u, x-u) - <u, x-u>``.

    ``psi`` is itself evaluated by :func:`grid_psi` on a shared hull grid.
    The gap is convex with minimum zero at the true resolvent. In one
    dimension ``error`` comes from the bracket that convexity gives (see
    :func:`_bracket`); otherwise it is the radius of the set of grid points
    whose gap could still be the smallest, plus one grid step.
    """
    _check(g, resolution)
    _check(g, psi_resolution)
    x = np.asarray(x, dtype=float)
    n = g.dim
    lo, hi = resolvent_box(g, x) if bounds is None else (
        np.broadcast_to(np.asarray(b, float), (n,)) for b in bounds)
    axes = [np.linspace(l, h, resolution) for l, h in zip(lo, hi)]
    h_u = float(max((h - l) / (resolution - 1) for l, h in zip(lo, hi)))
    us = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    pts, cost = _swapped(g)
    grid = _HullGrid(pts, cost, psi_resolution)
    gaps = np.empty(len(us))
    errs = np.empty(len(us))
    for j, u in enumerate(us):
        r = _psi_on(g, grid, u, x - u)
        gaps[j] = r.value - float(u @ (x - u))
        errs[j] = r.error
    i = int(np.argmin(gaps))
    if n == 1:
        radius = _bracket(us[:, 0], gaps, errs, i)
    else:
        # the grid point nearest the true resolvent has gap at most
        # lip * h_u * sqrt(n) + err, so it survives this threshold
        slack = errs.max() + _gap_lipschitz(g, grid, x, us) * h_u * np.sqrt(n)
        near = us[gaps <= gaps[i] + slack]
        radius = float(np.max(np.linalg.norm(near - us[i], axis=1))) + h_u
    return OracleResult(float(gaps[i]), us[i].copy(), h_u, radius)


_SLACKS = {
    "nonexpansive": lambda dx, dy: np.linalg.norm(dx) - np.linalg.norm(dy),
    "firmly": lambda dx, dy: float(dy @ dx) - float(dy @ dy),
    "monotone": lambda dx, dy: float(dx @ dy),
}


def check_pairwise(handle, prop: str, samples, tol: float = 1e-7) -> ValidationReport:
    """Evaluate ``handle`` at every sample and test ``prop`` on every pair.

    Slacks are ``|x-y| - |Tx-Ty|``, ``<Fx-Fy, x-y> - |Fx-Fy|^2`` or
    ``<x-y, Ax-Ay>``; a pair violates when its slack is below ``-tol``.
    ``worst`` is the smallest slack and ``details["worst_violation"]`` the
    largest shortfall below zero.
    """
    if prop not in _SLACKS:
        raise ValueError(f"unknown property {prop!r}")
    slack_of = _SLACKS[prop]
    xs = [np.asarray(s, dtype=float) for s in samples]
    vals = [np.asarray(handle(s), dtype=float) for s in xs]
    violations = []
    worst = np.inf
    for i, j in itertools.combinations(range(len(xs)), 2):
        s = float(slack_of(xs[i] - xs[j], vals[i] - vals[j]))
        worst = min(worst, s)
        if s < -tol:
            violations.append((i, j, s))
    return ValidationReport(
        not violations, tuple(violations), worst,
        {"pairs": len(xs) * (len(xs) - 1) // 2, "worst_violation": max(0.0, -worst)},
    )


def range_midpoint_gap(handle, x, y, max_iter: int = 200, tol: float = 1e-10) -> float:
    """How closely ``J`` reaches the midpoint of ``J(x)`` and ``J(y)``.

    Searches ``z`` with the fixed-point step ``z <- z + (m - J(z))``; returns
    the smallest ``|J(z) - m|`` seen. Small values are consistent with a
    convex range closure; large ones are only a hint, since reaching a
    boundary midpoint may require unbounded ``z``.
    """
    m = 0.5 * (np.asarray(handle(x), float) + np.asarray(handle(y), float))
    z = m.copy()
    best = np.inf
    for _ in range(max_iter):
        r = m - np.asarray(handle(z), float)
        best = min(best, float(np.linalg.norm(r)))
        if best <= tol:
            break
        z = z + r
    return best
