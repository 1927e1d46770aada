"""Experiment configuration: a flat key-value file with dotted keys.

Syntax: one ``key = value`` pair per line; ``#`` starts a comment; blank
lines are ignored.  Values are kept as raw strings and parsed on access,
so a config round-trips through serialisation losslessly.  The config hash
is taken over the sorted canonical ``key=value`` lines and is therefore
stable under key reordering.

Normative keys (others are permitted and ignored by the builders):

    domain.kind, domain.dim, domain.lower, domain.upper
    mirror_map.kind, mirror_map.interior_floor
    schedule.beta_min, schedule.beta_max, schedule.T
    target.kind, target.alpha, target.a, target.b,
    target.weights, target.means, target.stds, target.dataset
    model.hidden, model.time_embedding_dim, model.activation,
    model.checkpoint
    training.learning_rate, training.batch_size, training.iterations,
    training.seed, training.log_every
    sampling.mode, sampling.n_chains, sampling.n_steps, sampling.step_size
    cir.alpha, cir.beta, cir.sigma, cir.dt, cir.n_steps
    categorical.length, categorical.vocab, categorical.floor
    benchmark.samplers, benchmark.n_samples
    seed, output_dir, threads
"""

from __future__ import annotations

import hashlib
import json
import time

import numpy as np

from . import __version__
from .baselines import CirParams
from .domains import Domain
from .errors import ConfigError
from .mirror import MirrorMap, make_mirror_map
from .mlp import MlpArch, TrainingConfig
from .schedule import NoiseSchedule
from .targets import (Dirichlet, Empirical, GaussianMixture, ProductBeta,
                      TargetDistribution)

SAMPLING_MODES = ("dual-ddpm", "mirror-corrected", "mla", "ula", "pla", "cir")


class ExperimentConfig:
    """Ordered mapping of dotted keys to raw string values."""

    def __init__(self, entries=None):
        self.entries: dict = dict(entries or {})

    # -- parsing -----------------------------------------------------------
    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        entries = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"config line {lineno}: expected 'key = value', got {raw!r}")
            key, value = line.split("=", 1)
            key, value = key.strip(), value.strip()
            if not key:
                raise ConfigError(f"config line {lineno}: empty key")
            if key in entries:
                raise ConfigError(f"config line {lineno}: duplicate key {key!r}")
            entries[key] = value
        return cls(entries)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                return cls.from_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.entries.items())

    # -- access ------------------------------------------------------------
    def set(self, key: str, value):
        self.entries[key] = str(value)

    def get(self, key: str, default=None):
        return self.entries.get(key, default)

    def require(self, key: str) -> str:
        if key not in self.entries:
            raise ConfigError(f"missing required config key {key!r}")
        return self.entries[key]

    def get_int(self, key: str, default=None) -> int:
        raw = self.entries.get(key)
        if raw is None:
            if default is None:
                raise ConfigError(f"missing required config key {key!r}")
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"key {key!r}: expected integer, got {raw!r}") from None

    def get_float(self, key: str, default=None) -> float:
        raw = self.entries.get(key)
        if raw is None:
            if default is None:
                raise ConfigError(f"missing required config key {key!r}")
            return default
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"key {key!r}: expected number, got {raw!r}") from None

    def get_floats(self, key: str, default=None) -> np.ndarray:
        raw = self.entries.get(key)
        if raw is None:
            if default is None:
                raise ConfigError(f"missing required config key {key!r}")
            return np.asarray(default, dtype=float)
        try:
            return np.asarray([float(p) for p in raw.split(",") if p.strip() != ""])
        except ValueError:
            raise ConfigError(f"key {key!r}: expected comma-separated numbers, got {raw!r}") from None

    def get_ints(self, key: str, default=None):
        return tuple(int(v) for v in self.get_floats(key, default))

    # -- canonical hash ------------------------------------------------------
    def canonical_text(self) -> str:
        return "".join(f"{k}={self.entries[k]}\n" for k in sorted(self.entries))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()


# -- builders ----------------------------------------------------------------

def build_domain(cfg: ExperimentConfig) -> Domain:
    kind = cfg.require("domain.kind")
    dim = cfg.get_int("domain.dim")
    if kind == "euclidean":
        return Domain.euclidean(dim)
    if kind == "simplex":
        return Domain.simplex(dim)
    if kind == "box":
        return Domain.box(dim, cfg.get_float("domain.lower"),
                          cfg.get_float("domain.upper"))
    raise ConfigError(f"unknown domain.kind {kind!r}")


def build_mirror_map(cfg: ExperimentConfig, domain: Domain) -> MirrorMap:
    default_kind = {"euclidean": "identity", "simplex": "negative_entropy",
                    "box": "log_barrier"}[domain.kind]
    kind = cfg.get("mirror_map.kind", default_kind)
    floor = cfg.get_float("mirror_map.interior_floor", 1e-12)
    return make_mirror_map(kind, domain, floor)


def build_schedule(cfg: ExperimentConfig) -> NoiseSchedule:
    return NoiseSchedule(
        beta_min=cfg.get_float("schedule.beta_min", 1e-4),
        beta_max=cfg.get_float("schedule.beta_max", 0.02),
        steps=cfg.get_int("schedule.T", 1000),
    )


def build_target(cfg: ExperimentConfig, domain: Domain) -> TargetDistribution:
    kind = cfg.get("target.kind")
    if kind is None and "target.dataset" in cfg.entries:
        kind = "empirical"
    if kind is None:
        raise ConfigError("missing required config key 'target.kind'")
    if kind == "dirichlet":
        return Dirichlet(cfg.get_floats("target.alpha"))
    if kind == "product_beta":
        a = cfg.get_floats("target.a")
        b = cfg.get_floats("target.b")
        return ProductBeta(a, b, domain)
    if kind == "gaussian_mixture":
        weights = cfg.get_floats("target.weights")
        means = cfg.get_floats("target.means").reshape(weights.size, domain.dim)
        stds = cfg.get_floats("target.stds").reshape(weights.size, domain.dim)
        return GaussianMixture(weights, means, stds)
    if kind == "empirical":
        path = cfg.require("target.dataset")
        data = np.loadtxt(path, ndmin=2)
        return Empirical(data, domain)
    raise ConfigError(f"unknown target.kind {kind!r}")


def build_arch(cfg: ExperimentConfig, input_dim: int, steps: int) -> MlpArch:
    return MlpArch(
        input_dim=input_dim,
        hidden_widths=cfg.get_ints("model.hidden", (32, 32)),
        total_steps=steps,
        time_embedding_dim=cfg.get_int("model.time_embedding_dim", 16),
        activation=cfg.get("model.activation", "tanh"),
    )


def build_training(cfg: ExperimentConfig) -> TrainingConfig:
    return TrainingConfig(
        learning_rate=cfg.get_float("training.learning_rate", 1e-3),
        batch_size=cfg.get_int("training.batch_size", 128),
        iterations=cfg.get_int("training.iterations", 20_000),
        seed=cfg.get_int("training.seed", cfg.get_int("seed", 0)),
        log_every=cfg.get_int("training.log_every", 100),
    )


def build_cir_params(cfg: ExperimentConfig) -> CirParams:
    return CirParams(
        alpha=cfg.get_floats("cir.alpha"),
        beta=cfg.get_float("cir.beta"),
        sigma=cfg.get_float("cir.sigma"),
        dt=cfg.get_float("cir.dt", 1e-3),
        n_steps=cfg.get_int("cir.n_steps", 10_000),
        dirichlet_terminal=True,
    )


# -- run manifest --------------------------------------------------------------

def write_manifest(path, cfg: ExperimentConfig, artifacts):
    """Write the run manifest once, after all artifacts exist."""
    manifest = {
        "config_hash": cfg.hash(),
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "artifacts": sorted(str(a) for a in artifacts),
        "library_version": __version__,
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
