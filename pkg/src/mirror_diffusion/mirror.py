"""Legendre-type mirror maps and their conjugates.

A mirror map is the gradient of a strictly convex, twice-differentiable
potential phi on a constraint set.  It transports points from the
constrained primal domain to an unconstrained dual space; the gradient of
the Legendre-Fenchel conjugate phi* pulls dual points back.  Three maps are
shipped, each with a diagonal Hessian:

========================  ==================  ============================
map                       domain              phi(x)
========================  ==================  ============================
IdentityMap               R^d                 (1/2) ||x||^2
NegativeEntropyMap        simplex             sum_i x_i ln x_i
LogBarrierMap             box [a, b]^d        -sum_i ln(x_i-a) + ln(b-x_i)
========================  ==================  ============================

All operations act on the last axis and broadcast over leading axes, are
pure, and never mutate their inputs; map objects are immutable and safe to
share across threads.  Logs and divisions are guarded by
``clamp_to_interior``, which keeps every coordinate at least
``interior_floor`` away from the boundary.
"""

from __future__ import annotations

import numpy as np

from .domains import Domain
from .errors import DomainError, UnsupportedError

# Absolute tolerance for accepting boundary-adjacent input to the clamp.
CLAMP_TOL = 1e-6

# exp(x) overflows float64 a little above x = 709.
_EXP_OVERFLOW = 709.0


def softmax(y):
    """Numerically stable softmax along the last axis."""
    y = np.asarray(y, dtype=float)
    e = np.exp(y - y.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


class MirrorMap:
    """Shared interface: potential, gradient, conjugate, inverse, Hessian."""

    kind = "abstract"

    def __init__(self, domain: Domain, interior_floor: float = 1e-12):
        if not 0.0 < interior_floor < 1e-2:
            raise ValueError(f"interior_floor out of range: {interior_floor}")
        self.domain = domain
        self.interior_floor = float(interior_floor)

    # -- interface -------------------------------------------------------
    def potential(self, x):
        """phi(x) for x in the (clamped) interior of the domain."""
        raise NotImplementedError

    def grad(self, x):
        """Mirror map: grad phi(x), primal -> dual."""
        raise NotImplementedError

    def grad_conjugate(self, y):
        """Inverse mirror map: grad phi*(y), dual -> primal."""
        raise NotImplementedError

    def conjugate_potential(self, y):
        """Fenchel conjugate phi*(y)."""
        raise NotImplementedError

    def hessian_diag(self, x):
        """Diagonal of the Hessian of phi; strictly positive on the interior."""
        raise NotImplementedError

    def hessian_diag_grad(self, x):
        """Per-coordinate derivative d/dx_i of hessian_diag(x)_i.

        Needed by dual-space score formulas (the log-Jacobian term of the
        pushforward density differentiates the Hessian).
        """
        raise NotImplementedError

    def clamp_to_interior(self, x):
        """Push x at least interior_floor away from the boundary.

        Accepts points in the closure of the domain or within ``CLAMP_TOL``
        outside it; raises DomainError for anything grossly outside.
        """
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(domain={self.domain}, floor={self.interior_floor:g})"


class IdentityMap(MirrorMap):
    """phi(x) = (1/2)||x||^2 on R^d: grad phi = id, phi* = phi."""

    kind = "identity"

    def __init__(self, domain: Domain, interior_floor: float = 1e-12):
        if domain.kind != "euclidean":
            raise DomainError("IdentityMap requires a euclidean domain")
        super().__init__(domain, interior_floor)

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * (x * x).sum(axis=-1)

    def grad(self, x):
        return np.asarray(x, dtype=float)

    def grad_conjugate(self, y):
        return np.asarray(y, dtype=float)

    def conjugate_potential(self, y):
        y = np.asarray(y, dtype=float)
        return 0.5 * (y * y).sum(axis=-1)

    def hessian_diag(self, x):
        return np.ones_like(np.asarray(x, dtype=float))

    def hessian_diag_grad(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def clamp_to_interior(self, x):
        x = np.asarray(x, dtype=float)
        if not np.isfinite(x).all():
            raise DomainError("non-finite input to clamp_to_interior")
        return x


class NegativeEntropyMap(MirrorMap):
    """Negative entropy phi(x) = sum_i x_i ln x_i on the simplex.

    grad phi(x) = 1 + ln x, phi*(y) = sum_i exp(y_i - 1), and the inverse
    map (composed with the projection back onto the simplex) is the softmax.
    The softmax output sums to one exactly up to float rounding, so the
    inverse always lands on the simplex.

    The potential and its derivatives extend smoothly to the positive
    orthant, so pointwise operations accept near-simplex input (sum within
    1e-4 of one) and guard the logarithms by flooring alone; only the
    public ``clamp_to_interior`` renormalises back onto the simplex.  This
    keeps finite-difference probes of ``grad`` exact.
    """

    kind = "negative_entropy"

    # points this far off the simplex sum are still accepted by grad etc.
    OP_SUM_TOL = 1e-4

    def __init__(self, domain: Domain, interior_floor: float = 1e-12):
        if domain.kind != "simplex":
            raise DomainError("NegativeEntropyMap requires a simplex domain")
        super().__init__(domain, interior_floor)

    def _floored(self, x):
        x = np.asarray(x, dtype=float)
        self.domain.require_member(x, sum_tol=self.OP_SUM_TOL, side_tol=CLAMP_TOL)
        return np.maximum(x, self.interior_floor)

    def potential(self, x):
        x = self._floored(x)
        return (x * np.log(x)).sum(axis=-1)

    def grad(self, x):
        return 1.0 + np.log(self._floored(x))

    def grad_conjugate(self, y):
        y = np.asarray(y, dtype=float)
        if not np.isfinite(y).all():
            raise DomainError("non-finite dual point")
        return softmax(y)

    def conjugate_potential(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y - 1.0 > _EXP_OVERFLOW):
            raise OverflowError("conjugate_potential overflow: component > ~710")
        return np.exp(y - 1.0).sum(axis=-1)

    def hessian_diag(self, x):
        return 1.0 / self._floored(x)

    def hessian_diag_grad(self, x):
        x = self._floored(x)
        return -1.0 / (x * x)

    def clamp_to_interior(self, x):
        x = np.asarray(x, dtype=float)
        self.domain.require_member(x, sum_tol=CLAMP_TOL, side_tol=CLAMP_TOL)
        x = np.maximum(x, self.interior_floor)
        return x / x.sum(axis=-1, keepdims=True)


class LogBarrierMap(MirrorMap):
    """Log barrier phi(x) = -sum_i [ln(x_i - a) + ln(b - x_i)] on a box.

    grad phi(x)_i = -1/(x_i - a) + 1/(b - x_i), a strictly increasing
    bijection from (a, b) onto R per coordinate.  The inverse solves the
    quadratic y*(x-a)*(b-x) = 2x - a - b in closed form; with t = x - (a+b)/2
    and c = b - a the root inside the box is

        t = (y c^2 / 4) / (1 + sqrt(1 + (y c / 2)^2)),

    written in the cancellation-free form that stays accurate for small y.
    phi* is evaluated through the Fenchel identity phi*(y) = <x, y> - phi(x)
    at x = grad phi*(y).
    """

    kind = "log_barrier"

    def __init__(self, domain: Domain, interior_floor: float = 1e-12):
        if domain.kind != "box":
            raise DomainError("LogBarrierMap requires a box domain")
        super().__init__(domain, interior_floor)

    def potential(self, x):
        x = self.clamp_to_interior(x)
        a, b = self.domain.lower, self.domain.upper
        return -(np.log(x - a) + np.log(b - x)).sum(axis=-1)

    def grad(self, x):
        x = self.clamp_to_interior(x)
        a, b = self.domain.lower, self.domain.upper
        return -1.0 / (x - a) + 1.0 / (b - x)

    def grad_conjugate(self, y):
        y = np.asarray(y, dtype=float)
        if not np.isfinite(y).all():
            raise DomainError("non-finite dual point")
        a, b = self.domain.lower, self.domain.upper
        c = b - a
        s = 0.5 * y * c
        t = (0.25 * y * c * c) / (1.0 + np.sqrt(1.0 + s * s))
        x = 0.5 * (a + b) + t
        # saturates toward the boundary for huge |y|; keep strictly inside
        return np.clip(x, a + self.interior_floor, b - self.interior_floor)

    def conjugate_potential(self, y):
        y = np.asarray(y, dtype=float)
        x = self.grad_conjugate(y)
        return (x * y).sum(axis=-1) - self.potential(x)

    def hessian_diag(self, x):
        x = self.clamp_to_interior(x)
        a, b = self.domain.lower, self.domain.upper
        return 1.0 / (x - a) ** 2 + 1.0 / (b - x) ** 2

    def hessian_diag_grad(self, x):
        x = self.clamp_to_interior(x)
        a, b = self.domain.lower, self.domain.upper
        return -2.0 / (x - a) ** 3 + 2.0 / (b - x) ** 3

    def clamp_to_interior(self, x):
        x = np.asarray(x, dtype=float)
        self.domain.require_member(x, side_tol=CLAMP_TOL)
        a, b = self.domain.lower, self.domain.upper
        return np.clip(x, a + self.interior_floor, b - self.interior_floor)


_MAP_KINDS = {
    "identity": IdentityMap,
    "negative_entropy": NegativeEntropyMap,
    "log_barrier": LogBarrierMap,
}


def make_mirror_map(kind: str, domain: Domain, interior_floor: float = 1e-12) -> MirrorMap:
    """Construct a mirror map by kind name ("identity", "negative_entropy",
    "log_barrier")."""
    try:
        cls = _MAP_KINDS[kind]
    except KeyError:
        raise UnsupportedError(f"unknown mirror map kind {kind!r}") from None
    return cls(domain, interior_floor)


def default_map_for(domain: Domain, interior_floor: float = 1e-12) -> MirrorMap:
    """The canonical map for a domain: identity on R^d, negative entropy on
    the simplex, log barrier on a box."""
    kind = {"euclidean": "identity", "simplex": "negative_entropy", "box": "log_barrier"}
    return make_mirror_map(kind[domain.kind], domain, interior_floor)
