"""Finite operator graphs and the linear bijections between their kinds.

A graph is a finite list of pairs ``(x, y)`` in R^n tagged with the kind of
map it is supposed to describe:

* ``NONEXPANSIVE``  ``|y_i - y_j| <= |x_i - x_j|``
* ``FIRMLY``        ``|y_i - y_j|^2 <= <y_i - y_j, x_i - x_j>``
* ``MONOTONE``      ``<x_i - x_j, y_i - y_j> >= 0``

The three kinds are related by exact linear maps on pairs::

    nonexpansive --(x, (x+y)/2)--> firmly --(y, x-y)--> monotone

Coordinates are stored as :class:`fractions.Fraction` so that these maps
and their inverses are exact and round-trips reproduce the input bit for
bit. Float views (``g.x``, ``g.y``) are computed once on construction.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import GraphStructureError, GraphValidationError
from .types import ValidationReport

VALIDATION_SLACK = 1e-12

_HALF = Fraction(1, 2)


class Kind(enum.Enum):
    MONOTONE = "monotone"
    FIRMLY = "firmly"
    NONEXPANSIVE = "nonexpansive"


Vector = tuple[Fraction, ...]


def _exact(v) -> Vector:
    out = []
    for c in np.asarray(v, dtype=object).ravel():
        if isinstance(c, Fraction):
            out.append(c)
        elif isinstance(c, (int, np.integer)):
            out.append(Fraction(int(c)))
        else:
            f = float(c)
            if not math.isfinite(f):
                raise GraphStructureError(f"non-finite coordinate {c!r}")
            out.append(Fraction(f))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class OperatorGraph:
    """Immutable single-valued graph ``{(x_i, y_i)}`` in R^dim."""

    dim: int
    kind: Kind
    pairs: tuple[tuple[Vector, Vector], ...]
    x: np.ndarray = field(init=False, repr=False)
    y: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise GraphStructureError("dim must be >= 1")
        if not self.pairs:
            raise GraphStructureError("graph has no pairs")
        for i, (a, b) in enumerate(self.pairs):
            if len(a) != self.dim or len(b) != self.dim:
                raise GraphStructureError(
                    f"pair {i} has lengths ({len(a)}, {len(b)}), expected {self.dim}"
                )
        xs = np.array([[float(c) for c in a] for a, _ in self.pairs], dtype=float)
        ys = np.array([[float(c) for c in b] for _, b in self.pairs], dtype=float)
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "x", xs)
        object.__setattr__(self, "y", ys)

    @classmethod
    def from_pairs(cls, kind, pairs: Iterable, dim: int | None = None) -> OperatorGraph:
        """Build a graph from ``(x, y)`` pairs of array-likes.

        Repeated pairs are dropped; a repeated ``x`` with a different ``y``
        is rejected since the graph must stay single-valued.
        """
        kind = Kind(kind)
        seen: dict[Vector, Vector] = {}
        order: list[Vector] = []
        for i, (a, b) in enumerate(pairs):
            a, b = _exact(a), _exact(b)
            if dim is None:
                dim = len(a)
            if len(a) != dim or len(b) != dim:
                raise GraphStructureError(
                    f"pair {i} has lengths ({len(a)}, {len(b)}), expected {dim}"
                )
            if a in seen:
                if seen[a] != b:
                    raise GraphStructureError(
                        f"point {tuple(float(c) for c in a)} has two different values"
                    )
                continue
            seen[a] = b
            order.append(a)
        if dim is None:
            raise GraphStructureError("graph has no pairs")
        return cls(dim, kind, tuple((a, seen[a]) for a in order))

    @classmethod
    def from_arrays(cls, kind, xs, ys) -> OperatorGraph:
        xs = np.atleast_2d(np.asarray(xs, dtype=object))
        ys = np.atleast_2d(np.asarray(ys, dtype=object))
        if xs.shape != ys.shape:
            raise GraphStructureError(f"shape mismatch {xs.shape} vs {ys.shape}")
        return cls.from_pairs(kind, zip(xs, ys), dim=xs.shape[1])

    def __len__(self) -> int:
        return len(self.pairs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, OperatorGraph):
            return NotImplemented
        return (self.dim, self.kind, self.pairs) == (other.dim, other.kind, other.pairs)

    def __hash__(self) -> int:
        return hash((self.dim, self.kind, self.pairs))

    def _map(self, kind: Kind, fn) -> OperatorGraph:
        return OperatorGraph.from_pairs(kind, (fn(a, b) for a, b in self.pairs), self.dim)


def _dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    return sum((p * q for p, q in zip(u, v)), Fraction(0))


def _sub(u: Vector, v: Vector) -> Vector:
    return tuple(p - q for p, q in zip(u, v))


def pair_slack(kind: Kind, dx: Vector, dy: Vector) -> float:
    """Slack of the kind's defining inequality for one difference pair."""
    if kind is Kind.MONOTONE:
        return float(_dot(dx, dy))
    if kind is Kind.FIRMLY:
        return float(_dot(dy, dx) - _dot(dy, dy))
    return math.sqrt(_dot(dx, dx)) - math.sqrt(_dot(dy, dy))


def validate(g: OperatorGraph, slack: float = VALIDATION_SLACK) -> ValidationReport:
    """Check the kind-specific pairwise inequality on every ordered pair.

    Inner products are computed exactly in rational arithmetic; a pair is
    flagged when its slack is below ``-slack``. Both ``(i, j)`` and
    ``(j, i)`` are reported so that the report is symmetric.
    """
    violations = []
    worst = math.inf
    m = len(g.pairs)
    for i in range(m):
        xi, yi = g.pairs[i]
        for j in range(i + 1, m):
            xj, yj = g.pairs[j]
            s = pair_slack(g.kind, _sub(xi, xj), _sub(yi, yj))
            worst = min(worst, s)
            if s < -slack:
                violations.append((i, j, s))
                violations.append((j, i, s))
    violations.sort()
    return ValidationReport(not violations, tuple(violations), worst)


def require_valid(g: OperatorGraph, kind: Kind | None = None) -> OperatorGraph:
    if kind is not None and g.kind is not kind:
        raise GraphStructureError(f"expected a {kind.value} graph, got {g.kind.value}")
    report = validate(g)
    if not report.ok:
        i, j, s = report.violations[0]
        raise GraphValidationError(
            f"{g.kind.value} inequality fails for pair ({i}, {j}) with slack {s:.3g}",
            report,
        )
    return g


def to_firmly(g: OperatorGraph) -> OperatorGraph:
    """Nonexpansive ``T`` to firmly nonexpansive ``F = (Id + T)/2``."""
    if g.kind is not Kind.NONEXPANSIVE:
        raise GraphStructureError("to_firmly expects a nonexpansive graph")
    return g._map(Kind.FIRMLY, lambda a, b: (a, tuple(_HALF * p + _HALF * q for p, q in zip(a, b))))


def from_firmly(g: OperatorGraph) -> OperatorGraph:
    """Firmly nonexpansive ``F`` to nonexpansive ``T = 2F - Id``.

    Raises :class:`GraphValidationError` when the result is not
    nonexpansive, which can only happen if ``g`` was not firmly
    nonexpansive to begin with.
    """
    if g.kind is not Kind.FIRMLY:
        raise GraphStructureError("from_firmly expects a firmly nonexpansive graph")
    out = g._map(Kind.NONEXPANSIVE, lambda a, b: (a, tuple(2 * q - p for p, q in zip(a, b))))
    report = validate(out)
    if not report.ok:
        raise GraphValidationError("input is not firmly nonexpansive", report)
    return out


def firmly_to_monotone(g: OperatorGraph) -> OperatorGraph:
    """Firmly nonexpansive ``F`` to ``A = F^{-1} - Id`` via ``(x, y) -> (y, x - y)``."""
    if g.kind is not Kind.FIRMLY:
        raise GraphStructureError("firmly_to_monotone expects a firmly nonexpansive graph")
    values = [b for _, b in g.pairs]
    if len(set(values)) != len(values):
        raise GraphStructureError("input not injective; monotone representation set-valued")
    return g._map(Kind.MONOTONE, lambda a, b: (b, _sub(a, b)))


def monotone_to_firmly(g: OperatorGraph) -> OperatorGraph:
    """Inverse of :func:`firmly_to_monotone`: ``(x, y) -> (x + y, x)``."""
    if g.kind is not Kind.MONOTONE:
        raise GraphStructureError("monotone_to_firmly expects a monotone graph")
    keys = [tuple(p + q for p, q in zip(a, b)) for a, b in g.pairs]
    if len(set(keys)) != len(keys):
        raise GraphStructureError("x + y repeats; firmly representation set-valued")
    return g._map(Kind.FIRMLY, lambda a, b: (tuple(p + q for p, q in zip(a, b)), a))


def nonexpansive_to_monotone(g: OperatorGraph) -> OperatorGraph:
    """Composite ``(x, y) -> ((x + y)/2, (x - y)/2)``."""
    return firmly_to_monotone(to_firmly(g))


def monotone_to_nonexpansive(g: OperatorGraph) -> OperatorGraph:
    """Composite ``(x, y) -> (x + y, x - y)``."""
    return from_firmly(monotone_to_firmly(g))
