"""Variance-preserving noise schedules.

The forward corruption over T discrete steps is the Gaussian Markov chain

    y_{k+1} = sqrt(1 - beta_{k+1}) y_k + sqrt(beta_{k+1}) z_k,

with per-step betas interpolated linearly from ``beta_min`` to ``beta_max``
(the classic discrete-time constants 1e-4 and 0.02 by default).  Iterating
the chain gives the closed-form marginal

    y_k = sqrt(abar_k) y_0 + sqrt(1 - abar_k) z,    abar_k = prod_{j<=k} (1 - beta_j),

whose coefficients satisfy sqrt(abar_k)^2 + (1 - abar_k) = 1 exactly
(variance preservation).
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


class NoiseSchedule:
    """Linear per-step beta schedule with cached alpha products.

    betas[k-1] is the beta applied when stepping k-1 -> k, for k = 1..T.
    alpha_bars has length T+1 with alpha_bars[0] = 1.
    """

    def __init__(self, beta_min: float = 1e-4, beta_max: float = 0.02,
                 steps: int = 1000, interpolation: str = "linear"):
        if interpolation != "linear":
            raise ConfigError(f"unsupported interpolation {interpolation!r}")
        if not (0.0 <= beta_min <= beta_max < 1.0):
            raise ConfigError(
                f"need 0 <= beta_min <= beta_max < 1, got [{beta_min}, {beta_max}]"
            )
        if steps < 1:
            raise ConfigError("steps must be >= 1")
        self.beta_min = float(beta_min)
        self.beta_max = float(beta_max)
        self.steps = int(steps)
        self.interpolation = interpolation
        self.betas = np.linspace(self.beta_min, self.beta_max, self.steps)
        self.alphas = 1.0 - self.betas
        self.alpha_bars = np.concatenate([[1.0], np.cumprod(self.alphas)])

    @property
    def T(self) -> int:
        return self.steps

    def beta(self, k: int) -> float:
        """beta_k for k in 1..T."""
        if not 1 <= k <= self.steps:
            raise IndexError(f"step {k} outside 1..{self.steps}")
        return float(self.betas[k - 1])

    def alpha_bar(self, k: int) -> float:
        """abar_k for k in 0..T."""
        if not 0 <= k <= self.steps:
            raise IndexError(f"step {k} outside 0..{self.steps}")
        return float(self.alpha_bars[k])

    def sigma(self, k: int) -> float:
        """Marginal noise scale sqrt(1 - abar_k)."""
        return float(np.sqrt(1.0 - self.alpha_bar(k)))

    def __repr__(self):
        return (f"NoiseSchedule(beta_min={self.beta_min}, beta_max={self.beta_max}, "
                f"steps={self.steps})")
