"""Distributional diagnostics for sample batches.

All metrics are pure functions.  Moment acceptance bands elsewhere in the
package are 3-standard-error bands; for Markov-chain output the standard
error is estimated across independent chains rather than from the naive
sample count, which would ignore autocorrelation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .domains import Domain
from .errors import ConfigError, InsufficientDataError

DEFAULT_BINS = 64
DEFAULT_SMOOTHING = 1e-9


@dataclass
class SampleBatch:
    """N points in a domain plus provenance for reproducibility."""

    samples: np.ndarray
    domain: Domain
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2 or self.samples.shape[0] < 1:
            raise InsufficientDataError(f"bad sample shape {self.samples.shape}")
        if self.samples.shape[1] != self.domain.dim:
            raise ConfigError(
                f"samples dim {self.samples.shape[1]} != domain dim {self.domain.dim}"
            )

    @property
    def n(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class MetricResult:
    name: str
    value: float
    tolerance: float | None
    passed: bool


@dataclass
class MetricReport:
    entries: list = field(default_factory=list)

    def add(self, name: str, value: float, tolerance: float | None, passed: bool):
        if any(e.name == name for e in self.entries):
            raise ConfigError(f"duplicate metric name {name!r}")
        self.entries.append(MetricResult(name, float(value), tolerance, bool(passed)))

    @property
    def all_passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["metric", "value", "tolerance", "pass"])
            for e in self.entries:
                tol = "" if e.tolerance is None else f"{e.tolerance:.17g}"
                writer.writerow([e.name, f"{e.value:.17g}", tol, str(e.passed).lower()])

    def format_table(self) -> str:
        width = max((len(e.name) for e in self.entries), default=10)
        lines = []
        for e in self.entries:
            status = "PASS" if e.passed else "FAIL"
            tol = "" if e.tolerance is None else f" (tol {e.tolerance:g})"
            lines.append(f"{e.name:<{width}}  {status}  value={e.value:.6g}{tol}")
        return "\n".join(lines)


def violation_count(batch: SampleBatch) -> int:
    """Number of rows failing the domain membership test."""
    ok = batch.domain.contains(batch.samples)
    return int(batch.n - np.count_nonzero(ok))


def empirical_moments(batch: SampleBatch):
    """Unbiased per-coordinate sample mean and variance."""
    if batch.n < 2:
        raise InsufficientDataError("need at least two samples for moments")
    return batch.samples.mean(axis=0), batch.samples.var(axis=0, ddof=1)


def histogram_kl(p_samples, q_samples, bins: int = DEFAULT_BINS,
                 smoothing: float = DEFAULT_SMOOTHING) -> float:
    """KL divergence (nats) between additive-smoothed histograms.

    Bins cover the union of both sample ranges; ``smoothing`` mass is added
    to every bin before normalisation so the divergence stays finite.
    Asymmetric in (p, q).
    """
    p_samples = np.asarray(p_samples, dtype=float).ravel()
    q_samples = np.asarray(q_samples, dtype=float).ravel()
    if bins < 2:
        raise ConfigError("need at least 2 bins")
    if p_samples.size == 0 or q_samples.size == 0:
        raise InsufficientDataError("empty sample set")
    lo = min(p_samples.min(), q_samples.min())
    hi = max(p_samples.max(), q_samples.max())
    if lo == hi:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    p_hist = np.histogram(p_samples, bins=edges)[0] + smoothing
    q_hist = np.histogram(q_samples, bins=edges)[0] + smoothing
    p_hist = p_hist / p_hist.sum()
    q_hist = q_hist / q_hist.sum()
    return float((p_hist * np.log(p_hist / q_hist)).sum())


def _even_subsample(sorted_values: np.ndarray, m: int) -> np.ndarray:
    idx = np.floor(np.linspace(0, sorted_values.size - 1, m) + 0.5).astype(int)
    return sorted_values[idx]


def wasserstein1_1d(p_samples, q_samples) -> float:
    """Exact 1-D W1 between equal-size empirical measures.

    Mean absolute difference of the sorted samples; if sizes differ, the
    larger sorted set is deterministically subsampled at evenly spaced
    ranks first.
    """
    p = np.sort(np.asarray(p_samples, dtype=float).ravel())
    q = np.sort(np.asarray(q_samples, dtype=float).ravel())
    if p.size == 0 or q.size == 0:
        raise InsufficientDataError("empty sample set")
    if p.size > q.size:
        p = _even_subsample(p, q.size)
    elif q.size > p.size:
        q = _even_subsample(q, p.size)
    return float(np.abs(p - q).mean())


def ks_statistic(p_samples, q_samples_or_cdf) -> float:
    """Kolmogorov-Smirnov statistic: two-sample, or empirical vs a CDF callable."""
    p = np.sort(np.asarray(p_samples, dtype=float).ravel())
    if p.size == 0:
        raise InsufficientDataError("empty sample set")
    grid = np.arange(1, p.size + 1) / p.size
    if callable(q_samples_or_cdf):
        cdf = np.asarray(q_samples_or_cdf(p), dtype=float)
        lower = np.abs(cdf - grid)
        upper = np.abs(cdf - (grid - 1.0 / p.size))
        return float(np.maximum(lower, upper).max())
    q = np.sort(np.asarray(q_samples_or_cdf, dtype=float).ravel())
    if q.size == 0:
        raise InsufficientDataError("empty sample set")
    allv = np.concatenate([p, q])
    cdf_p = np.searchsorted(p, allv, side="right") / p.size
    cdf_q = np.searchsorted(q, allv, side="right") / q.size
    return float(np.abs(cdf_p - cdf_q).max())
