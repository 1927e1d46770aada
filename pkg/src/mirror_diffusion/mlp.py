"""Small fully-connected noise-prediction network, written on numpy.

The network maps a dual-space point y and a step index k to a prediction
of the standard-normal noise that produced y.  The step enters through
sinusoidal features of k/T concatenated to y.  Forward, backward and the
Adam update are explicit so gradients can be checked against finite
differences; everything runs in float64.

Checkpoint format ("MDM1"): magic bytes, little-endian u32 header
(version, activation id, T, time embedding width, layer-size list), then
the parameter arrays as little-endian float64 in declaration order
(W then b per layer), row-major.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import CheckpointError, ShapeError
from .rng import make_generator

_MAGIC = b"MDM1"
_VERSION = 1
_ACTIVATIONS = {"tanh": 0, "silu": 1}
_ACTIVATION_NAMES = {v: k for k, v in _ACTIVATIONS.items()}


@dataclass(frozen=True)
class MlpArch:
    """Architecture description; ``total_steps`` is the diffusion horizon T
    used to normalise the step index."""

    input_dim: int
    hidden_widths: tuple
    total_steps: int
    time_embedding_dim: int = 16
    activation: str = "tanh"

    def __post_init__(self):
        if self.input_dim < 1 or any(w < 1 for w in self.hidden_widths):
            raise ShapeError("all widths must be >= 1")
        if self.time_embedding_dim < 2 or self.time_embedding_dim % 2:
            raise ShapeError("time_embedding_dim must be a positive even number")
        if self.activation not in _ACTIVATIONS:
            raise ShapeError(f"unknown activation {self.activation!r}")
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))

    @property
    def layer_sizes(self):
        """Matrix dimensions: input + time features, hidden layers, output."""
        return (self.input_dim + self.time_embedding_dim,
                *self.hidden_widths, self.input_dim)


@dataclass(frozen=True)
class TrainingConfig:
    """Denoising training hyperparameters.

    The loss weight per step is fixed to sigma_k^2 = 1 - abar_k, which makes
    the weighted score-matching objective equal to the plain noise-prediction
    loss actually minimised here.
    """

    learning_rate: float = 1e-3
    batch_size: int = 128
    iterations: int = 20_000
    seed: int = 0
    lambda_weighting: str = "sigma_squared"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    log_every: int = 100

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.iterations < 1 or self.batch_size < 1:
            raise ValueError("iterations and batch_size must be >= 1")
        if self.lambda_weighting != "sigma_squared":
            raise ValueError(f"unsupported weighting {self.lambda_weighting!r}")


class Mlp:
    """Parameter container with explicit forward/backward passes."""

    def __init__(self, arch: MlpArch, weights, biases):
        self.arch = arch
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        sizes = arch.layer_sizes
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[i], sizes[i + 1]) or b.shape != (sizes[i + 1],):
                raise ShapeError(f"layer {i} has shape {w.shape}, expected "
                                 f"{(sizes[i], sizes[i + 1])}")

    @property
    def n_layers(self):
        return len(self.weights)

    def parameter_count(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def parameters(self):
        """Flat list [W0, b0, W1, b1, ...] (views, not copies)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "Mlp":
        return Mlp(self.arch, [w.copy() for w in self.weights],
                   [b.copy() for b in self.biases])

    # -- forward ----------------------------------------------------------
    def _features(self, y, k):
        y = np.asarray(y, dtype=float)
        squeeze = y.ndim == 1
        y2 = y[None, :] if squeeze else y
        if y2.shape[-1] != self.arch.input_dim:
            raise ShapeError(f"input dim {y2.shape[-1]} != {self.arch.input_dim}")
        k = np.broadcast_to(np.asarray(k, dtype=float), (y2.shape[0],))
        emb = time_features(k, self.arch.total_steps, self.arch.time_embedding_dim)
        return np.concatenate([y2, emb], axis=1), squeeze

    def forward(self, y, k):
        """Noise prediction for y at step k; batched over rows."""
        x, squeeze = self._features(y, k)
        out = self._forward_from(x)[0]
        return out[0] if squeeze else out

    def _forward_from(self, x):
        act, _ = _activation_fns(self.arch.activation)
        pre = []       # pre-activations per hidden layer
        post = [x]     # layer inputs
        h = x
        for i in range(self.n_layers - 1):
            z = h @ self.weights[i] + self.biases[i]
            pre.append(z)
            h = act(z)
            post.append(h)
        out = h @ self.weights[-1] + self.biases[-1]
        return out, (pre, post)

    # -- backward ---------------------------------------------------------
    def loss_and_grads(self, y, k, target_noise):
        """Mean squared noise-prediction loss and exact parameter gradients.

        Loss = mean over the batch of ||target - prediction||^2 summed over
        coordinates.  Returns (loss, grads) with grads ordered like
        ``parameters()``.
        """
        x, _ = self._features(np.atleast_2d(np.asarray(y, dtype=float)), k)
        target = np.atleast_2d(np.asarray(target_noise, dtype=float))
        if target.shape != (x.shape[0], self.arch.input_dim):
            raise ShapeError(f"target noise shape {target.shape} mismatch")
        out, (pre, post) = self._forward_from(x)
        n = x.shape[0]
        diff = out - target
        loss = float((diff * diff).sum(axis=1).mean())
        _, dact = _activation_fns(self.arch.activation)
        delta = 2.0 * diff / n
        grads_w = [None] * self.n_layers
        grads_b = [None] * self.n_layers
        for i in range(self.n_layers - 1, -1, -1):
            grads_w[i] = post[i].T @ delta
            grads_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * dact(pre[i - 1])
        grads = []
        for gw, gb in zip(grads_w, grads_b):
            grads.extend((gw, gb))
        return loss, grads


def _activation_fns(name: str):
    if name == "tanh":
        return np.tanh, lambda z: 1.0 - np.tanh(z) ** 2
    # smooth SiLU-like unit: z * sigmoid(z)
    def silu(z):
        s = 1.0 / (1.0 + np.exp(-z))
        return z * s

    def dsilu(z):
        s = 1.0 / (1.0 + np.exp(-z))
        return s * (1.0 + z * (1.0 - s))

    return silu, dsilu


def time_features(k, total_steps: int, emb_dim: int):
    """Sinusoidal features of the normalised step t = k/T.

    Columns are sin(pi t 2^j), cos(pi t 2^j) for j = 0..emb_dim/2 - 1.
    """
    t = np.asarray(k, dtype=float) / float(total_steps)
    freqs = 2.0 ** np.arange(emb_dim // 2)
    ang = np.pi * t[:, None] * freqs[None, :]
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)


def init_mlp(arch: MlpArch, seed: int = 0) -> Mlp:
    """Glorot-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases."""
    rng = make_generator(seed)
    sizes = arch.layer_sizes
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Mlp(arch, weights, biases)


@dataclass
class AdamState:
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    t: int = 0

    @classmethod
    def for_model(cls, model: Mlp) -> "AdamState":
        params = model.parameters()
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params])


def adam_update(model: Mlp, grads, state: AdamState, cfg: TrainingConfig):
    """One in-place Adam step over all parameters."""
    state.t += 1
    b1, b2 = cfg.beta1, cfg.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(model.parameters(), grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.eps)


# -- checkpoint io ---------------------------------------------------------

def save_checkpoint(path, model: Mlp):
    arch = model.arch
    dims = (arch.input_dim, *arch.hidden_widths, arch.input_dim)
    header = struct.pack(
        "<5I", _VERSION, _ACTIVATIONS[arch.activation], arch.total_steps,
        arch.time_embedding_dim, len(dims),
    ) + struct.pack(f"<{len(dims)}I", *dims)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(header)
        for w, b in zip(model.weights, model.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_checkpoint(path) -> Mlp:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _MAGIC:
        raise CheckpointError(f"bad magic {raw[:4]!r}, expected {_MAGIC!r}")
    off = 4
    version, act_id, total_steps, emb, ndims = struct.unpack_from("<5I", raw, off)
    off += 20
    if version != _VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    if act_id not in _ACTIVATION_NAMES:
        raise CheckpointError(f"unknown activation id {act_id}")
    dims = struct.unpack_from(f"<{ndims}I", raw, off)
    off += 4 * ndims
    if ndims < 2 or dims[0] != dims[-1]:
        raise CheckpointError(f"inconsistent layer sizes {dims}")
    arch = MlpArch(input_dim=dims[0], hidden_widths=dims[1:-1],
                   total_steps=total_steps, time_embedding_dim=emb,
                   activation=_ACTIVATION_NAMES[act_id])
    sizes = arch.layer_sizes
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        nw, nb = fan_in * fan_out, fan_out
        need = (nw + nb) * 8
        if off + need > len(raw):
            raise CheckpointError("truncated checkpoint")
        weights.append(np.frombuffer(raw, dtype="<f8", count=nw, offset=off)
                       .reshape(fan_in, fan_out).astype(float))
        off += nw * 8
        biases.append(np.frombuffer(raw, dtype="<f8", count=nb, offset=off)
                      .astype(float))
        off += nb * 8
    if off != len(raw):
        raise CheckpointError("trailing bytes in checkpoint")
    return Mlp(arch, weights, biases)
