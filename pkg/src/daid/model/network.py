"""Encoder f_theta, low-rank projection U and the sigmoid classifier head."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch


@dataclass
class ModelParams:
    """All trainable arrays.

    ``layers`` holds (W, b) pairs with W shaped (out, in); tanh sits between
    consecutive layers but not after the last one, whose output is h.
    """

    layers: list = field(default_factory=list)
    U: np.ndarray = None
    head_w: np.ndarray = None
    head_b: np.ndarray = None

    @property
    def d_in(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def d_h(self) -> int:
        return self.layers[-1][0].shape[0]

    @property
    def rank(self) -> int:
        return self.U.shape[1]

    def arrays(self) -> list[np.ndarray]:
        out = []
        for W, b in self.layers:
            out += [W, b]
        return out + [self.U, self.head_w, self.head_b]

    def names(self) -> list[str]:
        out = []
        for i in range(len(self.layers)):
            out += [f"W{i}", f"b{i}"]
        return out + ["U", "head_w", "head_b"]

    @classmethod
    def from_arrays(cls, arrays) -> "ModelParams":
        arrays = list(arrays)
        n_layers = (len(arrays) - 3) // 2
        layers = [(arrays[2 * i], arrays[2 * i + 1]) for i in range(n_layers)]
        return cls(layers, arrays[-3], arrays[-2], arrays[-1])

    def copy(self) -> "ModelParams":
        return ModelParams.from_arrays([a.copy() for a in self.arrays()])

    def zeros_like(self) -> "ModelParams":
        return ModelParams.from_arrays([np.zeros_like(a) for a in self.arrays()])

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())

    def to_json(self) -> dict:
        return {"arrays": [{"name": n, "shape": list(a.shape), "data": a.ravel().tolist()}
                           for n, a in zip(self.names(), self.arrays())]}

    @classmethod
    def from_json(cls, obj: dict) -> "ModelParams":
        return cls.from_arrays([np.asarray(e["data"], dtype=np.float64).reshape(e["shape"])
                                for e in obj["arrays"]])


def init_params(d_in: int, hidden=(32, 32), d_h: int = 16, rank: int = 8,
                rng: np.random.Generator | None = None) -> ModelParams:
    """LeCun-normal encoder, zero biases, U with orthonormal columns."""
    if rank > d_h:
        raise ShapeMismatch(f"rank {rank} exceeds d_h {d_h}")
    rng = rng if rng is not None else np.random.default_rng(0)
    sizes = [d_in, *hidden, d_h]
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        layers.append((rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_out, fan_in)), np.zeros(fan_out)))
    q, r = np.linalg.qr(rng.normal(size=(d_h, rank)))
    U = q * np.sign(np.diag(r))
    head_w = rng.normal(0.0, 1.0 / np.sqrt(rank), size=rank)
    return ModelParams(layers, U, head_w, np.zeros(1))


def sigmoid(z):
    # split by sign so exp never overflows
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class ForwardCache:
    acts: list           # inputs to each affine layer
    pre: list            # pre-activations of hidden layers
    h: np.ndarray
    h_hat: np.ndarray
    inv_std: np.ndarray | None
    h_tilde: np.ndarray
    logits: np.ndarray
    scores: np.ndarray


def encode(params: ModelParams, X: np.ndarray, cache: bool = False):
    a = X
    acts, pre = [], []
    last = len(params.layers) - 1
    for i, (W, b) in enumerate(params.layers):
        acts.append(a)
        z = a @ W.T + b
        if i < last:
            pre.append(z)
            a = np.tanh(z)
        else:
            a = z
    return (a, acts, pre) if cache else a


def forward_batch(params: ModelParams, X, mu=None, inv_std=None) -> ForwardCache:
    """Batched forward pass.

    ``mu``/``inv_std`` are per-row normalization statistics (already looked up
    for each sample's subgroup); pass None to skip normalization.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.d_in:
        raise ShapeMismatch(f"expected inputs of width {params.d_in}, got shape {X.shape}")
    h, acts, pre = encode(params, X, cache=True)
    h_hat = (h - mu) * inv_std if mu is not None else h
    h_tilde = h_hat @ params.U
    logits = h_tilde @ params.head_w + params.head_b[0]
    return ForwardCache(acts, pre, h, h_hat, inv_std if mu is not None else None, h_tilde,
                        logits, sigmoid(logits))


def forward(params: ModelParams, x, moments=None, group=None) -> tuple[np.ndarray, float]:
    """Single-sample forward: returns the encoder latent h and the score."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != params.d_in:
        raise ShapeMismatch(f"expected a vector of length {params.d_in}")
    if not np.all(np.isfinite(x)):
        raise ShapeMismatch("input contains non-finite values")
    mu = inv_std = None
    if moments is not None:
        mu, inv_std = moments.tables([group])
    c = forward_batch(params, x[None, :], mu, inv_std)
    return c.h[0], float(c.scores[0])
