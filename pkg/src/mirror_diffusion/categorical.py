"""Toy categorical-sequence pipeline.

Token sequences become sequences of one-hot simplex vertices, which are
lifted to the dual space either by the +-k shift-scale rule or by the
negative-entropy mirror map after interior clamping.  Both encodings are
step-wise in the token and preserve the per-position argmax, so argmax
decoding inverts them.  For diffusion, a sequence of L positions over a
d-token vocabulary is flattened to a single dual vector of length L*d so
the score network can model cross-position dependence.

Datasets serialise as plain text: a header line ``# vocab=<d> L=<L>``
followed by one whitespace-separated row of token indices per sequence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EncodingError
from .mirror import NegativeEntropyMap, softmax
from .rng import make_generator


@dataclass(frozen=True)
class Vocabulary:
    labels: tuple

    def __post_init__(self):
        if len(self.labels) < 2:
            raise ConfigError("vocabulary needs at least 2 tokens")
        if len(set(self.labels)) != len(self.labels):
            raise ConfigError("token labels must be unique")

    @classmethod
    def of_size(cls, d: int) -> "Vocabulary":
        return cls(tuple(f"tok{i}" for i in range(d)))

    @property
    def size(self) -> int:
        return len(self.labels)


@dataclass
class SequenceBatch:
    tokens: np.ndarray  # (n, L) integer indices
    vocab: Vocabulary

    def __post_init__(self):
        self.tokens = np.asarray(self.tokens, dtype=int)
        if self.tokens.ndim != 2 or self.tokens.shape[1] < 1:
            raise ConfigError(f"tokens must be (n, L), got {self.tokens.shape}")
        if self.tokens.min(initial=0) < 0 or self.tokens.max(initial=0) >= self.vocab.size:
            raise IndexError("token index outside vocabulary")

    @property
    def length(self) -> int:
        return self.tokens.shape[1]


@dataclass(frozen=True)
class CategoricalCodec:
    vocab: Vocabulary
    k_logit: float = 5.0

    def __post_init__(self):
        if not np.isfinite(self.k_logit) or self.k_logit <= 0:
            raise ConfigError("k_logit must be finite and positive")


def encode_onehot(codec: CategoricalCodec, batch: SequenceBatch) -> np.ndarray:
    """One-hot tensor (n, L, d): simplex vertices per position."""
    d = codec.vocab.size
    toks = batch.tokens
    if toks.min() < 0 or toks.max() >= d:
        raise IndexError("token index outside vocabulary")
    out = np.zeros((*toks.shape, d))
    np.put_along_axis(out, toks[..., None], 1.0, axis=-1)
    return out


def _require_onehot(tensor):
    tensor = np.asarray(tensor, dtype=float)
    is_one = tensor == 1.0
    if not ((is_one.sum(axis=-1) == 1).all() and
            ((tensor == 0.0) | is_one).all()):
        raise EncodingError("rows must be exactly one-hot")
    return tensor


def shift_scale(codec: CategoricalCodec, onehot) -> np.ndarray:
    """+k at the hot coordinate, -k elsewhere."""
    onehot = _require_onehot(onehot)
    return np.where(onehot == 1.0, codec.k_logit, -codec.k_logit)


def mirror_encode(mm: NegativeEntropyMap, onehot, floor: float) -> np.ndarray:
    """Clamp one-hot rows ``floor`` inside the simplex, then apply the
    mirror map per position.

    The hot coordinate lands near 1 and the cold coordinates near
    1 + ln(floor), the finite stand-in for the map's step to minus
    infinity at the vertex.
    """
    if not isinstance(mm, NegativeEntropyMap):
        raise EncodingError("mirror_encode needs a negative-entropy map")
    onehot = _require_onehot(onehot)
    clamped = np.maximum(onehot, floor)
    clamped = clamped / clamped.sum(axis=-1, keepdims=True)
    return 1.0 + np.log(clamped)


def flatten_dual(tensor) -> np.ndarray:
    """(n, L, d) -> (n, L*d) for diffusion over whole sequences."""
    tensor = np.asarray(tensor, dtype=float)
    return tensor.reshape(tensor.shape[0], -1)


def unflatten_dual(flat, length: int, d: int) -> np.ndarray:
    flat = np.asarray(flat, dtype=float)
    return flat.reshape(flat.shape[0], length, d)


@dataclass(frozen=True)
class Argmax:
    pass


@dataclass(frozen=True)
class TopK:
    k_samples: int
    temperature: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.k_samples < 1 or self.temperature <= 0:
            raise ConfigError("k_samples >= 1 and temperature > 0 required")


def decode(codec: CategoricalCodec, tensor, strategy=Argmax()) -> SequenceBatch:
    """Decode a (n, L, d) dual or simplex tensor back to token indices.

    Argmax takes the per-position argmax (ties break to the lowest index).
    TopK samples per position from the top-k softmax probabilities after
    temperature scaling and renormalisation.
    """
    tensor = np.asarray(tensor, dtype=float)
    if tensor.ndim != 3 or tensor.shape[-1] != codec.vocab.size:
        raise ConfigError(f"expected (n, L, {codec.vocab.size}), got {tensor.shape}")
    if isinstance(strategy, Argmax):
        toks = tensor.argmax(axis=-1)
    else:
        probs = softmax(tensor / strategy.temperature)
        k = min(strategy.k_samples, codec.vocab.size)
        order = np.argsort(-probs, axis=-1, kind="stable")
        keep = order[..., :k]
        top = np.take_along_axis(probs, keep, axis=-1)
        top = top / top.sum(axis=-1, keepdims=True)
        rng = make_generator(strategy.seed)
        u = rng.random(tensor.shape[:2])[..., None]
        pick = (top.cumsum(axis=-1) < u).sum(axis=-1)
        pick = np.minimum(pick, k - 1)
        toks = np.take_along_axis(keep, pick[..., None], axis=-1)[..., 0]
    return SequenceBatch(toks, codec.vocab)


# -- synthetic datasets -------------------------------------------------------

@dataclass(frozen=True)
class ConstantToken:
    token: int = 0


@dataclass(frozen=True)
class AlternatingPair:
    seed: int = 0


@dataclass(frozen=True)
class MarkovChain:
    transition: tuple  # row-stochastic matrix as nested tuples
    seed: int = 0


def make_toy_dataset(kind, d: int, length: int, n: int) -> SequenceBatch:
    """Reproducible synthetic sequence datasets.

    ConstantToken repeats one token; AlternatingPair emits 0101... or
    1010... with a random start per row; MarkovChain rolls the given
    transition matrix from a uniform initial token.
    """
    vocab = Vocabulary.of_size(d)
    if isinstance(kind, ConstantToken):
        if not 0 <= kind.token < d:
            raise ConfigError(f"token {kind.token} outside vocabulary of size {d}")
        toks = np.full((n, length), kind.token, dtype=int)
    elif isinstance(kind, AlternatingPair):
        if d < 2:
            raise ConfigError("AlternatingPair needs d >= 2")
        rng = make_generator(kind.seed)
        start = rng.integers(0, 2, size=n)
        toks = (start[:, None] + np.arange(length)[None, :]) % 2
    elif isinstance(kind, MarkovChain):
        trans = np.asarray(kind.transition, dtype=float)
        if trans.shape != (d, d) or np.any(trans < 0) or \
                not np.allclose(trans.sum(axis=1), 1.0, atol=1e-12):
            raise ConfigError("transition must be a row-stochastic (d, d) matrix")
        rng = make_generator(kind.seed)
        toks = np.empty((n, length), dtype=int)
        toks[:, 0] = rng.integers(0, d, size=n)
        cum = trans.cumsum(axis=1)
        for pos in range(1, length):
            u = rng.random(n)
            toks[:, pos] = (cum[toks[:, pos - 1]] < u[:, None]).sum(axis=1)
    else:
        raise ConfigError(f"unknown dataset kind {kind!r}")
    return SequenceBatch(toks, vocab)


def save_dataset(path, batch: SequenceBatch):
    with open(path, "w") as fh:
        fh.write(f"# vocab={batch.vocab.size} L={batch.length}\n")
        for row in batch.tokens:
            fh.write(" ".join(str(int(t)) for t in row) + "\n")


def load_dataset(path) -> SequenceBatch:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# vocab="):
            raise ConfigError(f"bad dataset header: {header!r}")
        try:
            fields = dict(part.split("=") for part in header[2:].split())
            d, length = int(fields["vocab"]), int(fields["L"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad dataset header: {header!r}") from exc
        rows = [line.split() for line in fh if line.strip()]
    toks = np.asarray(rows, dtype=int)
    if toks.ndim != 2 or toks.shape[1] != length:
        raise ConfigError("dataset rows disagree with header length")
    return SequenceBatch(toks, Vocabulary.of_size(d))
