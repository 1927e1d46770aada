"""Target distributions to sample from.

Analytic targets expose a log-density and its primal-space gradient (the
score) on the domain interior; ``grad_potential`` is the negated score,
i.e. the gradient of f where the target density is proportional to
exp(-f).  Empirical targets expose sampling of data rows only.
"""

from __future__ import annotations

import numpy as np
from scipy.special import betaln, gammaln

from .domains import Domain
from .errors import ConfigError, UnsupportedError


class TargetDistribution:
    domain: Domain
    is_analytic = True

    def log_density(self, x):
        raise NotImplementedError

    def score(self, x):
        """Gradient of log_density with respect to x."""
        raise NotImplementedError

    def grad_potential(self, x):
        """Gradient of f = -log density (up to an additive constant)."""
        return -self.score(x)

    def sample(self, n: int, rng: np.random.Generator):
        raise NotImplementedError


class Dirichlet(TargetDistribution):
    """Dirichlet(alpha) on the simplex."""

    def __init__(self, alpha):
        self.alpha = np.asarray(alpha, dtype=float)
        if self.alpha.ndim != 1 or np.any(self.alpha <= 0):
            raise ConfigError("Dirichlet needs a 1-D vector of positive alphas")
        self.domain = Domain.simplex(self.alpha.size)
        self._log_norm = gammaln(self.alpha).sum() - gammaln(self.alpha.sum())

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        return ((self.alpha - 1.0) * np.log(x)).sum(axis=-1) - self._log_norm

    def score(self, x):
        x = np.asarray(x, dtype=float)
        return (self.alpha - 1.0) / x

    def sample(self, n, rng):
        return rng.dirichlet(self.alpha, size=n)

    def mean(self):
        return self.alpha / self.alpha.sum()

    def variance(self):
        a0 = self.alpha.sum()
        return self.alpha * (a0 - self.alpha) / (a0 * a0 * (a0 + 1.0))


class ProductBeta(TargetDistribution):
    """Independent Beta(a_i, b_i) marginals rescaled onto a box."""

    def __init__(self, a, b, domain: Domain):
        if domain.kind != "box":
            raise ConfigError("ProductBeta requires a box domain")
        self.a = np.broadcast_to(np.asarray(a, dtype=float), (domain.dim,)).copy()
        self.b = np.broadcast_to(np.asarray(b, dtype=float), (domain.dim,)).copy()
        if np.any(self.a <= 0) or np.any(self.b <= 0):
            raise ConfigError("Beta parameters must be positive")
        self.domain = domain
        self._log_norm = (betaln(self.a, self.b) + np.log(domain.width)).sum()

    def _unit(self, x):
        return (np.asarray(x, dtype=float) - self.domain.lower) / self.domain.width

    def log_density(self, x):
        u = self._unit(x)
        return ((self.a - 1.0) * np.log(u) + (self.b - 1.0) * np.log1p(-u)).sum(
            axis=-1
        ) - self._log_norm

    def score(self, x):
        u = self._unit(x)
        return ((self.a - 1.0) / u - (self.b - 1.0) / (1.0 - u)) / self.domain.width

    def sample(self, n, rng):
        u = rng.beta(self.a, self.b, size=(n, self.domain.dim))
        return self.domain.lower + self.domain.width * u

    def mean(self):
        return self.domain.lower + self.domain.width * self.a / (self.a + self.b)

    def variance(self):
        s = self.a + self.b
        return self.domain.width**2 * self.a * self.b / (s * s * (s + 1.0))


class GaussianMixture(TargetDistribution):
    """Mixture of diagonal Gaussians on R^d."""

    def __init__(self, weights, means, stds):
        self.weights = np.asarray(weights, dtype=float)
        self.means = np.atleast_2d(np.asarray(means, dtype=float))
        self.stds = np.broadcast_to(
            np.asarray(stds, dtype=float), self.means.shape
        ).copy()
        if self.weights.ndim != 1 or self.weights.size != self.means.shape[0]:
            raise ConfigError("weights and means disagree on component count")
        if np.any(self.weights <= 0) or np.any(self.stds <= 0):
            raise ConfigError("weights and stds must be positive")
        self.weights = self.weights / self.weights.sum()
        self.domain = Domain.euclidean(self.means.shape[1])

    def _log_comps(self, x):
        # (..., m): log w_j + log N(x; mu_j, diag sigma_j^2)
        x = np.asarray(x, dtype=float)[..., None, :]
        z = (x - self.means) / self.stds
        ll = -0.5 * (z * z).sum(axis=-1) - np.log(self.stds).sum(axis=-1)
        ll = ll - 0.5 * self.domain.dim * np.log(2.0 * np.pi)
        return ll + np.log(self.weights)

    def log_density(self, x):
        lc = self._log_comps(x)
        m = lc.max(axis=-1, keepdims=True)
        return (m + np.log(np.exp(lc - m).sum(axis=-1, keepdims=True)))[..., 0]

    def score(self, x):
        x = np.asarray(x, dtype=float)
        lc = self._log_comps(x)
        lc = lc - lc.max(axis=-1, keepdims=True)
        r = np.exp(lc)
        r = r / r.sum(axis=-1, keepdims=True)  # responsibilities (..., m)
        pull = (self.means - x[..., None, :]) / self.stds**2  # (..., m, d)
        return (r[..., None] * pull).sum(axis=-2)

    def sample(self, n, rng):
        comps = rng.choice(self.weights.size, size=n, p=self.weights)
        eps = rng.standard_normal((n, self.domain.dim))
        return self.means[comps] + self.stds[comps] * eps


def standard_normal_target(dim: int) -> GaussianMixture:
    return GaussianMixture([1.0], np.zeros((1, dim)), np.ones((1, dim)))


class Empirical(TargetDistribution):
    """Dataset-backed target: supports sampling of data rows only."""

    is_analytic = False

    def __init__(self, data, domain: Domain):
        self.data = np.asarray(data, dtype=float)
        if self.data.ndim != 2 or self.data.shape[1] != domain.dim:
            raise ConfigError(f"dataset shape {self.data.shape} does not match domain")
        self.domain = domain

    def log_density(self, x):
        raise UnsupportedError("empirical target has no analytic density")

    def score(self, x):
        raise UnsupportedError("empirical target has no analytic score")

    def sample(self, n, rng):
        idx = rng.integers(0, self.data.shape[0], size=n)
        return self.data[idx]
