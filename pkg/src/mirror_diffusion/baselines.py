"""Classical constrained samplers: ULA, mirror Langevin, projected Langevin,
box reflection, and the square-root (CIR) diffusion whose normalised
terminal values give Dirichlet samples.

Step functions are pure given an explicit noise vector.  Chain drivers pull
per-step noise matrices from Philox keyed by (seed, step) and accumulate
post-burn-in moments per chain, so moment standard errors can be estimated
across independent chains.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domains import Domain
from .errors import ConfigError, UnsupportedError
from .metrics import SampleBatch
from .mirror import MirrorMap
from .rng import philox_normals
from .targets import TargetDistribution

INTERIOR_FLOOR = 1e-12


@dataclass(frozen=True)
class LangevinConfig:
    step_size: float
    n_steps: int
    n_chains: int
    seed: int = 0
    burn_in_fraction: float = 0.5

    def __post_init__(self):
        if self.step_size <= 0 or self.n_steps < 1 or self.n_chains < 1:
            raise ConfigError("step_size > 0, n_steps >= 1, n_chains >= 1 required")
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise ConfigError("burn_in_fraction must lie in [0, 1)")


def ula_step(target: TargetDistribution, x, h: float, noise):
    """Unadjusted Langevin: x - h grad_f(x) + sqrt(2h) z."""
    x = np.asarray(x, dtype=float)
    return x - h * target.grad_potential(x) + np.sqrt(2.0 * h) * noise


def mla_step(mm: MirrorMap, target: TargetDistribution, x, h: float, noise):
    """Mirror Langevin: grad phi*(grad phi(x) - h grad_f(x) + sqrt(2h H(x)) z).

    With the identity map this reproduces ``ula_step`` bit for bit (the
    Hessian is all ones and both maps are the identity).
    """
    y = mm.grad(x) - h * target.grad_potential(x) + np.sqrt(
        2.0 * h * mm.hessian_diag(x)) * noise
    return mm.grad_conjugate(y)


def project_to_simplex(v):
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    squeeze = v.ndim == 1
    v2 = v[None, :] if squeeze else v
    u = np.sort(v2, axis=-1)[..., ::-1]
    css = np.cumsum(u, axis=-1) - 1.0
    j = np.arange(1, v2.shape[-1] + 1)
    cond = u - css / j > 0
    rho = v2.shape[-1] - 1 - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, rho[..., None], axis=-1) / (rho + 1)[..., None]
    out = np.maximum(v2 - theta, 0.0)
    return out[0] if squeeze else out


def project_to_domain(domain: Domain, v):
    """Euclidean projection onto the domain (identity on R^d)."""
    v = np.asarray(v, dtype=float)
    if domain.kind == "euclidean":
        return v
    if domain.kind == "box":
        return np.clip(v, domain.lower, domain.upper)
    return project_to_simplex(v)


def pla_step(domain: Domain, target: TargetDistribution, x, h: float, noise):
    """Projected Langevin: Euclidean projection of the ULA proposal."""
    return project_to_domain(domain, ula_step(target, x, h, noise))


def reflect_into_box(domain: Domain, x):
    """Fold coordinates across the box boundaries until they land inside.

    Overshoots beyond the interval width keep reflecting (the fold has
    period twice the width).  Only boxes support reflection.
    """
    if domain.kind != "box":
        raise UnsupportedError("reflection implemented for box domains only")
    x = np.asarray(x, dtype=float)
    width = domain.width
    t = np.mod(x - domain.lower, 2.0 * width)
    return domain.lower + width - np.abs(t - width)


# -- CIR / Dirichlet ---------------------------------------------------------

@dataclass(frozen=True)
class CirParams:
    """Square-root diffusion dx = beta (alpha - x) dt + sigma sqrt(x) dw.

    With 2 beta = sigma^2 the terminal law per coordinate is Gamma(alpha, 1);
    ``dirichlet_terminal`` asserts that constraint at construction, which is
    required by ``dirichlet_from_cir``.
    """

    alpha: np.ndarray
    beta: float
    sigma: float
    dt: float
    n_steps: int
    floor: float = INTERIOR_FLOOR
    dirichlet_terminal: bool = False

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.atleast_1d(np.asarray(self.alpha, dtype=float)))
        if np.any(self.alpha <= 0) or self.beta <= 0 or self.sigma <= 0:
            raise ConfigError("alpha, beta, sigma must all be positive")
        if self.dt <= 0 or self.n_steps < 1:
            raise ConfigError("dt > 0 and n_steps >= 1 required")
        if self.dirichlet_terminal and abs(2.0 * self.beta - self.sigma**2) > 1e-12:
            raise ConfigError(
                f"Dirichlet terminal needs 2*beta = sigma^2, got "
                f"2*{self.beta} vs {self.sigma**2}"
            )


def cir_step(p: CirParams, x, noise):
    """Full-truncation Euler step, floored to stay strictly positive."""
    x = np.asarray(x, dtype=float)
    prop = x + p.beta * (p.alpha - x) * p.dt + p.sigma * np.sqrt(x * p.dt) * noise
    return np.maximum(prop, p.floor)


def dirichlet_from_cir(p: CirParams, n_chains: int, seed: int = 0) -> SampleBatch:
    """Simulate independent coordinates to terminal time and normalise.

    Requires the Gamma-terminal constraint 2 beta = sigma^2; each chain
    starts at the process mean alpha.
    """
    if not p.dirichlet_terminal:
        raise ConfigError("CirParams must be built with dirichlet_terminal=True")
    x = run_cir(p, n_chains, seed)
    x = x / x.sum(axis=1, keepdims=True)
    dim = p.alpha.size
    return SampleBatch(x, Domain.simplex(dim), provenance={
        "sampler": "cir", "seed": seed, "steps": p.n_steps,
    })


def run_cir(p: CirParams, n_chains: int, seed: int = 0) -> np.ndarray:
    """Terminal values of n_chains independent CIR vectors started at alpha."""
    dim = p.alpha.size
    x = np.broadcast_to(p.alpha, (n_chains, dim)).copy()
    for step in range(p.n_steps):
        x = cir_step(p, x, philox_normals(seed, step, (n_chains, dim)))
    return x


# -- chain drivers ------------------------------------------------------------

@dataclass
class ChainStats:
    """Final states plus per-chain post-burn-in moment accumulators."""

    final: SampleBatch
    chain_means: np.ndarray
    chain_vars: np.ndarray
    violation_count: int
    kept_steps: int

    def moment_bands(self):
        """(mean, 3 SE of mean, variance, 3 SE of variance), SE across chains."""
        n_chains = self.chain_means.shape[0]
        mean = self.chain_means.mean(axis=0)
        var = self.chain_vars.mean(axis=0)
        se_mean = self.chain_means.std(axis=0, ddof=1) / np.sqrt(n_chains)
        se_var = self.chain_vars.std(axis=0, ddof=1) / np.sqrt(n_chains)
        return mean, 3.0 * se_mean, var, 3.0 * se_var


def _run_langevin(step_fn, domain: Domain, x0, cfg: LangevinConfig,
                  sampler_name: str) -> ChainStats:
    x = np.asarray(x0, dtype=float).copy()
    n_chains, dim = x.shape
    burn = int(cfg.n_steps * cfg.burn_in_fraction)
    acc = np.zeros_like(x)
    acc_sq = np.zeros_like(x)
    kept = 0
    violations = 0
    for step in range(cfg.n_steps):
        z = philox_normals(cfg.seed, step, (n_chains, dim))
        x = step_fn(x, z)
        violations += int(n_chains - np.count_nonzero(domain.contains(x)))
        if step >= burn:
            acc += x
            acc_sq += x * x
            kept += 1
    chain_means = acc / kept
    chain_vars = acc_sq / kept - chain_means**2
    final = SampleBatch(x, domain, provenance={
        "sampler": sampler_name, "seed": cfg.seed, "steps": cfg.n_steps,
    })
    return ChainStats(final, chain_means, chain_vars, violations, kept)


def run_ula(target: TargetDistribution, x0, cfg: LangevinConfig) -> ChainStats:
    return _run_langevin(
        lambda x, z: ula_step(target, x, cfg.step_size, z),
        target.domain, x0, cfg, "ula")


def run_mla(mm: MirrorMap, target: TargetDistribution, x0,
            cfg: LangevinConfig) -> ChainStats:
    return _run_langevin(
        lambda x, z: mla_step(mm, target, x, cfg.step_size, z),
        mm.domain, x0, cfg, "mla")


def run_pla(target: TargetDistribution, x0, cfg: LangevinConfig) -> ChainStats:
    return _run_langevin(
        lambda x, z: pla_step(target.domain, target, x, cfg.step_size, z),
        target.domain, x0, cfg, "pla")
