"""Constraint domains: Euclidean space, probability simplex, axis-aligned box.

All membership tests operate on the last axis and broadcast over leading
axes, so a single point ``(d,)`` and a batch ``(n, d)`` are both accepted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# |sum(x) - 1| tolerance for simplex membership; absorbs softmax float error.
SIMPLEX_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Domain:
    """Description of a constraint set.

    kind is one of "euclidean", "simplex", "box".  ``lower``/``upper`` are
    only meaningful for boxes.
    """

    kind: str
    dim: int
    lower: float = float("nan")
    upper: float = float("nan")

    def __post_init__(self):
        if self.kind not in ("euclidean", "simplex", "box"):
            raise DomainError(f"unknown domain kind {self.kind!r}")
        if self.dim < 1:
            raise DomainError(f"dim must be >= 1, got {self.dim}")
        if self.kind == "box" and not self.lower < self.upper:
            raise DomainError(
                f"box requires lower < upper, got [{self.lower}, {self.upper}]"
            )

    @classmethod
    def euclidean(cls, dim: int) -> "Domain":
        return cls("euclidean", dim)

    @classmethod
    def simplex(cls, dim: int) -> "Domain":
        return cls("simplex", dim)

    @classmethod
    def box(cls, dim: int, lower: float, upper: float) -> "Domain":
        return cls("box", dim, float(lower), float(upper))

    @property
    def width(self) -> float:
        """Box edge length (only for boxes)."""
        return self.upper - self.lower

    def contains(self, x, sum_tol: float = SIMPLEX_SUM_TOL, side_tol: float = 0.0):
        """Boolean membership per row; total on finite input.

        Euclidean accepts every finite vector.  Simplex requires the
        coordinates to sum to 1 within ``sum_tol`` and be >= -side_tol.
        Box requires lower - side_tol <= x_i <= upper + side_tol.
        """
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DomainError(
                f"expected last axis {self.dim}, got shape {x.shape}"
            )
        finite = np.isfinite(x).all(axis=-1)
        if self.kind == "euclidean":
            return finite
        if self.kind == "simplex":
            close = np.abs(x.sum(axis=-1) - 1.0) <= sum_tol
            nonneg = (x >= -side_tol).all(axis=-1)
            return finite & close & nonneg
        inside = ((x >= self.lower - side_tol) & (x <= self.upper + side_tol)).all(axis=-1)
        return finite & inside

    def require_member(self, x, sum_tol: float = SIMPLEX_SUM_TOL,
                       side_tol: float = 0.0, what: str = "point"):
        """Raise DomainError if any row fails the membership test."""
        ok = self.contains(x, sum_tol=sum_tol, side_tol=side_tol)
        if not np.all(ok):
            bad = int(np.size(ok) - np.count_nonzero(ok))
            raise DomainError(
                f"{bad} {what}(s) outside {self.kind} domain of dim {self.dim}"
            )
