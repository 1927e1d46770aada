"""Reproducible random number streams.

Two generators are used:

* ``CounterStream`` — a counter-based stream for sampling chains.  The
  normal deviate consumed by (chain, step, coordinate) is a pure function
  of (seed, chain, step, coordinate): three rounds of the splitmix64
  finalizer produce a 64-bit word, which is mapped to (0, 1) and through
  the inverse normal CDF.  Because every deviate is addressable, chains can
  be simulated in any order and split across any number of threads without
  changing a single bit of output.

* ``philox_normals`` — bulk per-step matrices from numpy's Philox engine,
  keyed by (seed, step).  Used by the single-threaded baseline samplers
  where bulk ziggurat generation is faster and per-chain addressing is not
  required.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox, SeedSequence
from scipy.special import ndtri

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix64(z):
    """splitmix64 finalizer (full-avalanche 64-bit mixer, modular arithmetic)."""
    with np.errstate(over="ignore"):
        z = np.asarray(z, dtype=np.uint64)
        z = z ^ (z >> np.uint64(30))
        z = z * _MIX1
        z = z ^ (z >> np.uint64(27))
        z = z * _MIX2
        z = z ^ (z >> np.uint64(31))
    return z


def _to_unit_interval(w):
    # top 53 bits -> (0, 1), never exactly 0 or 1
    return (w >> np.uint64(11)).astype(np.float64) * 2.0**-53 + 2.0**-54


class CounterStream:
    """Counter-based standard-normal stream indexed by (chain, step, coord)."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        with np.errstate(over="ignore"):
            self._key = _mix64(np.uint64(self.seed & 0xFFFFFFFFFFFFFFFF) + _GOLDEN)

    def normals(self, step: int, chain_lo: int, chain_hi: int, dim: int):
        """Standard normals of shape (chain_hi - chain_lo, dim).

        Row i holds the deviates of chain ``chain_lo + i`` at ``step``; the
        same (chain, step) always yields the same row regardless of how the
        chain range is blocked.
        """
        chains = np.arange(chain_lo, chain_hi, dtype=np.uint64)[:, None]
        coords = np.arange(dim, dtype=np.uint64)[None, :]
        with np.errstate(over="ignore"):
            h = _mix64(self._key ^ (np.uint64(step) * _GOLDEN + np.uint64(1)))
            h = _mix64(h ^ (chains * _MIX1 + np.uint64(1)))
            h = _mix64(h ^ (coords * _MIX2 + np.uint64(1)))
        return ndtri(_to_unit_interval(h))


def philox_normals(seed: int, step: int, shape) -> np.ndarray:
    """Standard-normal array keyed by (seed, step) via Philox."""
    gen = Generator(Philox(SeedSequence(entropy=(int(seed), int(step)))))
    return gen.standard_normal(shape)


def make_generator(seed: int) -> Generator:
    """Sequential Philox generator for single-threaded jobs (training)."""
    return Generator(Philox(SeedSequence(entropy=int(seed))))
