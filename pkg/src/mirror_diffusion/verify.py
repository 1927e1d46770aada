"""Self-check suite: the library's core identities, run end to end.

Each registered invariant returns (worst value, tolerance, passed).  The
environment variable MDM_FAULT_HESSIAN (a float multiplier) perturbs the
Hessian used inside the finite-difference check; it exists so that the
sensitivity of the suite itself can be exercised.
"""

from __future__ import annotations

import os

import numpy as np

from .baselines import mla_step, ula_step
from .domains import Domain
from .metrics import MetricReport
from .mirror import (IdentityMap, LogBarrierMap, MirrorMap,
                     NegativeEntropyMap, softmax)
from .mlp import MlpArch, init_mlp
from .rng import make_generator
from .schedule import NoiseSchedule
from .targets import standard_normal_target

_DIMS = (2, 8, 16)


def _interior_points(mm: MirrorMap, n: int, dim: int, rng, margin: float):
    """Random points at least ``margin`` inside the domain (margin is an
    absolute coordinate floor on the simplex, a relative one on boxes)."""
    if mm.domain.kind == "simplex":
        x = rng.dirichlet(np.ones(dim), size=n)
        x = np.maximum(x, margin)
        return x / x.sum(axis=1, keepdims=True)
    if mm.domain.kind == "box":
        a, b = mm.domain.lower, mm.domain.upper
        pad = margin * (b - a)
        return rng.uniform(a + pad, b - pad, size=(n, dim))
    return rng.standard_normal((n, dim))


def _maps_for(dim: int):
    return (IdentityMap(Domain.euclidean(dim)),
            NegativeEntropyMap(Domain.simplex(dim)),
            LogBarrierMap(Domain.box(dim, 0.0, 1.0)))


def check_roundtrip(points_per_dim: int = 200):
    """max ||grad_conjugate(grad(x)) - x||_inf over random interior points."""
    rng = make_generator(101)
    worst = 0.0
    for dim in _DIMS:
        for mm in _maps_for(dim):
            x = _interior_points(mm, points_per_dim, dim, rng, 1e-6)
            err = np.abs(mm.grad_conjugate(mm.grad(x)) - x).max()
            worst = max(worst, float(err))
    return worst, 1e-9, worst <= 1e-9


def check_fenchel(points_per_dim: int = 200):
    """phi(x) + phi*(grad phi(x)) = <x, grad phi(x)>, relative error.

    Checked for the identity and negative-entropy maps, whose conjugates
    are defined independently of the inverse map.
    """
    rng = make_generator(102)
    worst = 0.0
    for dim in _DIMS:
        for mm in _maps_for(dim)[:2]:
            x = _interior_points(mm, points_per_dim, dim, rng, 1e-4)
            y = mm.grad(x)
            lhs = mm.potential(x) + mm.conjugate_potential(y)
            rhs = (x * y).sum(axis=-1)
            scale = np.maximum(np.abs(lhs) + np.abs(rhs), 1.0)
            worst = max(worst, float((np.abs(lhs - rhs) / scale).max()))
    return worst, 1e-8, worst <= 1e-8


def check_hessian_fd(points_per_dim: int = 100, step: float = 1e-5):
    """hessian_diag vs central differences of grad, relative error.

    Points stay a few percent inside the boundary so the fixed step keeps
    its quadratic accuracy.
    """
    fault = float(os.environ.get("MDM_FAULT_HESSIAN", "1.0"))
    rng = make_generator(103)
    worst = 0.0
    for dim in _DIMS:
        for mm in _maps_for(dim):
            x = _interior_points(mm, points_per_dim, dim, rng, 0.03)
            hess = fault * mm.hessian_diag(x)
            fd = np.empty_like(hess)
            for j in range(dim):
                hi = x.copy()
                lo = x.copy()
                hi[:, j] += step
                lo[:, j] -= step
                fd[:, j] = (mm.grad(hi)[:, j] - mm.grad(lo)[:, j]) / (2 * step)
            rel = np.abs(fd - hess) / np.abs(hess)
            worst = max(worst, float(rel.max()))
    return worst, 1e-4, worst <= 1e-4


def check_one_convexity(pairs: int = 500):
    """Bregman gap of negative entropy >= (1/2) ||y - x||_1^2 (worst slack)."""
    rng = make_generator(104)
    mm = NegativeEntropyMap(Domain.simplex(6))
    x = rng.dirichlet(np.ones(6), size=pairs)
    y = rng.dirichlet(np.ones(6), size=pairs)
    x = mm.clamp_to_interior(np.maximum(x, 1e-9))
    y = mm.clamp_to_interior(np.maximum(y, 1e-9))
    gap = mm.potential(y) - mm.potential(x) - (mm.grad(x) * (y - x)).sum(axis=-1)
    slack = gap - 0.5 * np.abs(y - x).sum(axis=-1) ** 2
    worst = float(slack.min())
    return worst, -1e-10, worst >= -1e-10


def check_pinsker(pairs: int = 500):
    """KL(p||q) >= (1/2) ||p - q||_1^2 on random histograms (worst slack)."""
    rng = make_generator(105)
    p = rng.dirichlet(np.ones(8), size=pairs)
    q = rng.dirichlet(np.ones(8), size=pairs)
    p = np.maximum(p, 1e-12)
    q = np.maximum(q, 1e-12)
    p = p / p.sum(axis=1, keepdims=True)
    q = q / q.sum(axis=1, keepdims=True)
    kl = (p * np.log(p / q)).sum(axis=1)
    slack = kl - 0.5 * np.abs(p - q).sum(axis=1) ** 2
    worst = float(slack.min())
    return worst, -1e-12, worst >= -1e-12


def check_softmax_simplex(n: int = 1000):
    """softmax output sums to one within 1e-12 and is nonnegative."""
    rng = make_generator(106)
    y = rng.standard_normal((n, 12)) * 30.0
    s = softmax(y)
    worst = float(np.abs(s.sum(axis=1) - 1.0).max())
    ok = worst <= 1e-12 and bool((s >= 0.0).all())
    return worst, 1e-12, ok


def check_mla_ula_identity(n_steps: int = 1000):
    """Identity-map mirror Langevin equals ULA bitwise on a shared stream."""
    rng = make_generator(107)
    target = standard_normal_target(4)
    mm = IdentityMap(Domain.euclidean(4))
    x_u = rng.standard_normal((8, 4))
    x_m = x_u.copy()
    mismatches = 0
    for _ in range(n_steps):
        z = rng.standard_normal((8, 4))
        x_u = ula_step(target, x_u, 0.01, z)
        x_m = mla_step(mm, target, x_m, 0.01, z)
        if not np.array_equal(x_u, x_m):
            mismatches += 1
    return float(mismatches), 0.0, mismatches == 0


def check_mlp_gradients(rel_tol: float = 1e-4):
    """Backprop vs central finite differences on a small network."""
    rng = make_generator(108)
    arch = MlpArch(input_dim=2, hidden_widths=(8,), total_steps=50,
                   time_embedding_dim=8)
    model = init_mlp(arch, seed=3)
    y = rng.standard_normal((4, 2))
    k = rng.integers(1, 51, size=4)
    z = rng.standard_normal((4, 2))
    _, grads = model.loss_and_grads(y, k, z)
    worst = 0.0
    step = 1e-6
    for p, g in zip(model.parameters(), grads):
        flat = p.ravel()
        gflat = g.ravel()
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + step
            up, _ = model.loss_and_grads(y, k, z)
            flat[idx] = orig - step
            dn, _ = model.loss_and_grads(y, k, z)
            flat[idx] = orig
            fd = (up - dn) / (2 * step)
            rel = abs(fd - gflat[idx]) / max(abs(fd), abs(gflat[idx]), 1e-8)
            worst = max(worst, rel)
    return worst, rel_tol, worst <= rel_tol


def check_schedule_monotone():
    """Default schedule: abar strictly decreasing, abar_T near zero."""
    sched = NoiseSchedule()
    ab = sched.alpha_bars
    ok = bool(np.all(np.diff(ab) < 0)) and ab[-1] < 1e-3
    return float(ab[-1]), 1e-3, ok


def check_variance_preservation():
    """abar + (1 - abar) reproduces one exactly for every step."""
    sched = NoiseSchedule()
    ab = sched.alpha_bars
    worst = float(np.abs(ab + (1.0 - ab) - 1.0).max())
    return worst, 0.0, worst == 0.0


INVARIANTS = (
    ("mirror_roundtrip", check_roundtrip),
    ("fenchel_identity", check_fenchel),
    ("hessian_vs_finite_difference", check_hessian_fd),
    ("negative_entropy_one_convexity", check_one_convexity),
    ("pinsker_inequality", check_pinsker),
    ("softmax_on_simplex", check_softmax_simplex),
    ("mla_equals_ula_identity_map", check_mla_ula_identity),
    ("mlp_gradient_check", check_mlp_gradients),
    ("schedule_monotonicity", check_schedule_monotone),
    ("variance_preservation", check_variance_preservation),
)


def run_invariants() -> MetricReport:
    report = MetricReport()
    for name, fn in INVARIANTS:
        value, tolerance, passed = fn()
        report.add(name, value, tolerance, passed)
    return report
