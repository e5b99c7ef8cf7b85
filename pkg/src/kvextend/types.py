"""Small value types shared across modules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class ExtReal:
    """An extended real number: either a finite float or ``+inf``.

    Convex functions in this package routinely take the value ``+inf`` off
    their domain. Keeping that as a tag instead of a float sentinel makes the
    distinction explicit at call sites (``v.is_finite``), while ``float(v)``
    still gives a usable number for arithmetic and comparisons.
    """

    value: float = 0.0
    infinite: bool = False

    @classmethod
    def finite(cls, value: float) -> ExtReal:
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"finite value expected, got {value!r}")
        return cls(value, False)

    @property
    def is_finite(self) -> bool:
        return not self.infinite

    def __float__(self) -> float:
        return math.inf if self.infinite else self.value

    def __lt__(self, other):
        return float(self) < float(other)

    def __le__(self, other):
        return float(self) <= float(other)

    def __gt__(self, other):
        return float(self) > float(other)

    def __ge__(self, other):
        return float(self) >= float(other)

    def __add__(self, other):
        other = other if isinstance(other, ExtReal) else ExtReal.finite(other)
        if self.infinite or other.infinite:
            return INF
        return ExtReal(self.value + other.value)

    __radd__ = __add__

    def __repr__(self) -> str:
        return "ExtReal(+inf)" if self.infinite else f"ExtReal({self.value!r})"


INF = ExtReal(0.0, True)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of a check.

    ``violations`` holds ``(i, j, slack)`` triples for pairwise checks; a
    negative slack is the amount by which the inequality fails. ``worst`` is
    the smallest slack seen over all pairs (violating or not), and
    ``details`` carries named residuals for checks that are not pairwise.
    """

    ok: bool
    violations: tuple = ()
    worst: float = math.inf
    details: dict[str, Any] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok
