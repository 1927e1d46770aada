"""Forward corruption and reverse-time samplers in the dual space.

Two reverse modes are provided, matching two different readings of the
reverse dynamics:

* ``reverse_step_dual_ddpm`` — plain ancestral sampling of the
  variance-preserving chain in the dual space, using a score estimate.
  The posterior noise scale vanishes at k = 1, so the final step injects
  no noise.

* ``reverse_step_mirror_corrected`` — Euler-Maruyama step of the
  Hessian-corrected reverse SDE on a uniform grid h = 1/T:

      y_{k-1} = y_k + h grad_f(x) + 2 h H(x) s(y_k) + sqrt(2 h H(x)) z,

  with x = grad_conjugate(y_k) and H the diagonal mirror Hessian.  The
  drift needs the analytic primal potential gradient, so this mode only
  applies to analytic targets.  With the identity map and grad_f = 0 the
  step reduces to y + 2 h s + sqrt(2h) z.

Both steps are pure functions of (state, step, noise).  The batch drivers
vectorise over chains and read their noise from a counter-based stream, so
results are independent of chain blocking and thread count.
"""

from __future__ import annotations

import numpy as np

from .mirror import MirrorMap
from .rng import CounterStream
from .schedule import NoiseSchedule
from .targets import TargetDistribution

# Noise-stream slot used for the dual-space prior draw; reverse steps use
# their own step index k = 1..T.
PRIOR_STEP = 0


def forward_marginal(sched: NoiseSchedule, y0, k: int, noise):
    """Closed-form corruption: sqrt(abar_k) y0 + sqrt(1 - abar_k) noise."""
    ab = sched.alpha_bar(k)
    y0 = np.asarray(y0, dtype=float)
    return np.sqrt(ab) * y0 + np.sqrt(1.0 - ab) * np.asarray(noise, dtype=float)


def forward_step(sched: NoiseSchedule, y_k, k: int, noise):
    """One discrete forward step k -> k+1 (0 <= k < T)."""
    if not 0 <= k < sched.steps:
        raise IndexError(f"step {k} outside 0..{sched.steps - 1}")
    b = sched.beta(k + 1)
    y_k = np.asarray(y_k, dtype=float)
    return np.sqrt(1.0 - b) * y_k + np.sqrt(b) * np.asarray(noise, dtype=float)


def reverse_step_dual_ddpm(sched: NoiseSchedule, score_model, y_k, k: int, noise):
    """Ancestral reverse step k -> k-1 (1 <= k <= T) with a score estimate.

    Mean (y_k + beta_k * s) / sqrt(alpha_k); noise scale is the posterior
    sigma_k = sqrt(beta_k (1 - abar_{k-1}) / (1 - abar_k)), which is zero at
    k = 1.
    """
    if not 1 <= k <= sched.steps:
        raise IndexError(f"step {k} outside 1..{sched.steps}")
    y_k = np.asarray(y_k, dtype=float)
    s = score_model(y_k, k)
    b = sched.beta(k)
    mean = (y_k + b * s) / np.sqrt(1.0 - b)
    if k == 1:
        return mean
    denom = 1.0 - sched.alpha_bar(k)
    if denom == 0.0:  # degenerate all-zero schedule
        return mean
    var = b * (1.0 - sched.alpha_bar(k - 1)) / denom
    return mean + np.sqrt(var) * np.asarray(noise, dtype=float)


def reverse_step_mirror_corrected(sched: NoiseSchedule, mm: MirrorMap,
                                  target: TargetDistribution, score_model,
                                  y_k, k: int, noise):
    """Hessian-corrected reverse step; returns (y_{k-1}, clamp_events).

    ``clamp_events`` counts rows whose pulled-back point had to be clamped
    onto the interior before evaluating the drift.
    """
    if not 1 <= k <= sched.steps:
        raise IndexError(f"step {k} outside 1..{sched.steps}")
    y_k = np.asarray(y_k, dtype=float)
    h = 1.0 / sched.steps
    x = mm.grad_conjugate(y_k)
    floor_ok = _interior_mask(mm, x)
    clamp_events = int(floor_ok.size - np.count_nonzero(floor_ok))
    x = mm.clamp_to_interior(x)
    hess = mm.hessian_diag(x)
    s = score_model(y_k, k)
    drift = -target.grad_potential(x) + 2.0 * hess * s
    return y_k + h * drift + np.sqrt(2.0 * h * hess) * np.asarray(noise, dtype=float), clamp_events


def _interior_mask(mm: MirrorMap, x):
    lo = mm.interior_floor
    if mm.domain.kind == "box":
        return ((x >= mm.domain.lower + lo) & (x <= mm.domain.upper - lo)).all(axis=-1)
    if mm.domain.kind == "simplex":
        return (x >= lo).all(axis=-1)
    return np.isfinite(x).all(axis=-1)


def sample_dual_ddpm(sched: NoiseSchedule, score_model, dim: int, n_chains: int,
                     seed: int, chain_offset: int = 0) -> np.ndarray:
    """Run the ancestral reverse chain from a standard-normal dual prior.

    Returns the terminal dual points y_0 of shape (n_chains, dim).  Chain i
    corresponds to global chain id ``chain_offset + i`` in the noise stream,
    which is what makes blocked/threaded execution reproduce single-threaded
    output bit for bit.
    """
    stream = CounterStream(seed)
    lo, hi = chain_offset, chain_offset + n_chains
    y = stream.normals(PRIOR_STEP, lo, hi, dim)
    for k in range(sched.steps, 0, -1):
        z = stream.normals(k, lo, hi, dim) if k > 1 else 0.0
        y = reverse_step_dual_ddpm(sched, score_model, y, k, z)
    return y


def sample_mirror_corrected(sched: NoiseSchedule, mm: MirrorMap,
                            target: TargetDistribution, score_model,
                            n_chains: int, seed: int,
                            chain_offset: int = 0):
    """Run the Hessian-corrected reverse chain; returns (y_0, clamp_events)."""
    stream = CounterStream(seed)
    lo, hi = chain_offset, chain_offset + n_chains
    dim = mm.domain.dim
    y = stream.normals(PRIOR_STEP, lo, hi, dim)
    clamp_events = 0
    for k in range(sched.steps, 0, -1):
        z = stream.normals(k, lo, hi, dim)
        y, ce = reverse_step_mirror_corrected(sched, mm, target, score_model, y, k, z)
        clamp_events += ce
    return y, clamp_events
