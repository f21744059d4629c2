from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DomainError


@dataclass(frozen=True)
class PredictionInterval:
    """Closed interval [lower, upper] at nominal level ``level``.

    ``contiguous`` is False when the exact prediction set has gaps; the
    bounds are then its convex hull and ``pieces`` lists the sub-intervals.
    Bounds may be infinite.
    """

    lower: float
    upper: float
    level: float
    contiguous: bool = True
    pieces: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise DomainError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __contains__(self, z) -> bool:
        return self.lower <= z <= self.upper
