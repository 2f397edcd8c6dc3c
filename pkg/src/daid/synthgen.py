"""Synthetic structural causal model with a planted demographic shortcut.

Mechanism, per sample::

    attrs ~ independent categoricals (group_marginals)
    y     ~ Bernoulli(0.5), flipped with prob. label_noise
    x     = signal * y * v_true
          + shortcut * (2y - 1) * sum_k c_k(attr_k) * v_k     (source domain)
          + N(0, I)

``c_k`` is the category's over-representation, p - 1/C, scaled so the
largest magnitude is 1. It averages to zero over categories, so the
shortcut only predicts the label under the imbalanced training
distribution: a reweighted learner sees no net correlation along it, a
naive learner does and its errors then differ by group.

In the shifted domain the spurious directions are rotated by
``shift_angle`` inside their span (planes (v_1, v_2), (v_3, v_4), ...; an
unpaired last direction rotates toward a reserved orthogonal direction).
At pi/2 the gender shortcut turns up where the race shortcut used to be,
so a model that leaned on it is actively misled, unevenly across groups.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .domain import AttributeSchema, Dataset
from .errors import ConfigError

DEFAULT_SCHEMA = AttributeSchema(("gender", "race"), (("M", "F"), ("W", "B", "A")))


@dataclass(frozen=True)
class ScmConfig:
    n_train: int = 4000
    n_test: int = 2000
    d_in: int = 16
    group_marginals: tuple = ((0.7, 0.3), (0.5, 0.3, 0.2))
    shortcut_strength: float = 1.0
    signal_strength: float = 1.0
    shift_angle: float = math.pi / 2
    label_noise: float = 0.0
    seed: int = 0
    attribute_names: tuple = ("gender", "race")
    category_labels: tuple = (("M", "F"), ("W", "B", "A"))

    def __post_init__(self):
        marg = tuple(tuple(float(p) for p in m) for m in self.group_marginals)
        object.__setattr__(self, "group_marginals", marg)
        object.__setattr__(self, "attribute_names", tuple(self.attribute_names))
        object.__setattr__(self, "category_labels", tuple(tuple(c) for c in self.category_labels))
        K = len(marg)
        if K < 1:
            raise ConfigError("need at least one attribute")
        for m in marg:
            if len(m) < 1 or min(m) < 0 or abs(sum(m) - 1.0) > 1e-9:
                raise ConfigError(f"marginals must be non-negative and sum to 1: {m}")
        if len(self.attribute_names) != K or len(self.category_labels) != K:
            raise ConfigError("attribute_names/category_labels must match group_marginals")
        if any(len(c) != len(m) for c, m in zip(self.category_labels, marg)):
            raise ConfigError("category_labels cardinalities must match group_marginals")
        if self.n_train < 1 or self.n_test < 1:
            raise ConfigError("n_train and n_test must be positive")
        # v_true plus K spurious directions plus one spare must fit
        if self.d_in < K + 2:
            raise ConfigError(f"d_in must be at least {K + 2}")
        if self.shortcut_strength < 0 or not self.signal_strength > 0:
            raise ConfigError("shortcut_strength must be >= 0 and signal_strength > 0")
        if not 0 <= self.shift_angle <= math.pi / 2:
            raise ConfigError("shift_angle must lie in [0, pi/2]")
        if not 0 <= self.label_noise < 0.5:
            raise ConfigError("label_noise must lie in [0, 0.5)")

    @property
    def schema(self) -> AttributeSchema:
        return AttributeSchema(self.attribute_names, self.category_labels)

    def to_json(self) -> dict:
        d = asdict(self)
        d["group_marginals"] = [list(m) for m in self.group_marginals]
        d["attribute_names"] = list(self.attribute_names)
        d["category_labels"] = [list(c) for c in self.category_labels]
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "ScmConfig":
        return cls(**obj)


def couplings(marginals) -> list[np.ndarray]:
    """Per-attribute label coupling: centred frequency, max magnitude 1."""
    out = []
    for m in marginals:
        m = np.asarray(m, dtype=np.float64)
        c = m - 1.0 / m.shape[0]
        top = np.abs(c).max()
        out.append(c / top if top > 0 else np.zeros_like(c))
    return out


@dataclass(frozen=True)
class Directions:
    v_true: np.ndarray
    spurious: np.ndarray        # (K, d_in), source domain
    shifted: np.ndarray         # (K, d_in), after rotation


def directions(cfg: ScmConfig, rng: np.random.Generator) -> Directions:
    K = len(cfg.group_marginals)
    q, r = np.linalg.qr(rng.normal(size=(cfg.d_in, K + 2)))
    basis = (q * np.sign(np.diag(r))).T
    v_true, V, spare = basis[0], basis[1:K + 1], basis[K + 1]
    c, s = math.cos(cfg.shift_angle), math.sin(cfg.shift_angle)
    W = V.copy()
    for k in range(0, K - 1, 2):
        W[k] = c * V[k] + s * V[k + 1]
        W[k + 1] = -s * V[k] + c * V[k + 1]
    if K % 2 == 1:
        W[K - 1] = c * V[K - 1] + s * spare
    return Directions(v_true, V, W)


def _draw(cfg: ScmConfig, n: int, dirs: np.ndarray, v_true: np.ndarray, rng, domain: str,
          id_offset: int, coupling) -> Dataset:
    K = len(cfg.group_marginals)
    attrs = np.stack([rng.choice(len(m), size=n, p=m) for m in cfg.group_marginals], axis=1)
    y = rng.integers(0, 2, size=n)
    flip = rng.random(n) < cfg.label_noise
    y = np.where(flip, 1 - y, y)
    sign = 2.0 * y - 1.0
    X = cfg.signal_strength * y[:, None] * v_true[None, :]
    if cfg.shortcut_strength > 0:
        coef = np.stack([coupling[k][attrs[:, k]] for k in range(K)], axis=1)
        X = X + cfg.shortcut_strength * sign[:, None] * (coef @ dirs)
    X = X + rng.normal(size=(n, cfg.d_in))
    return Dataset(cfg.schema, np.arange(id_offset, id_offset + n), X, y, attrs, (domain,) * n)


def generate(cfg: ScmConfig) -> tuple[Dataset, Dataset, Dataset]:
    """(train, test_source, test_shifted); bit-reproducible per seed."""
    root = np.random.SeedSequence(cfg.seed)
    dir_seq, train_seq, src_seq, shift_seq = root.spawn(4)
    dirs = directions(cfg, np.random.default_rng(dir_seq))
    coupling = couplings(cfg.group_marginals)
    train = _draw(cfg, cfg.n_train, dirs.spurious, dirs.v_true, np.random.default_rng(train_seq),
                  "source", 0, coupling)
    test_src = _draw(cfg, cfg.n_test, dirs.spurious, dirs.v_true, np.random.default_rng(src_seq),
                     "source", cfg.n_train, coupling)
    test_shift = _draw(cfg, cfg.n_test, dirs.shifted, dirs.v_true, np.random.default_rng(shift_seq),
                       "shifted", cfg.n_train + cfg.n_test, coupling)
    return train, test_src, test_shift


def null_config(**kw) -> ScmConfig:
    """Generator with the shortcut switched off: demographics carry no signal."""
    return ScmConfig(shortcut_strength=0.0, **kw)


def describe(cfg: ScmConfig) -> dict:
    """Planted parameters and the sign of the effect the causal pipeline should find."""
    coupling = couplings(cfg.group_marginals)
    imbalanced = any(np.abs(c).max() > 0 for c in coupling)
    if cfg.shortcut_strength > 0 and cfg.shift_angle > 0 and imbalanced:
        sign = "positive"
    else:
        sign = "zero"
    return {
        "config": cfg.to_json(),
        "couplings": [c.tolist() for c in coupling],
        "expected_effect_sign": sign,
    }


def describe_json(cfg: ScmConfig) -> str:
    return json.dumps(describe(cfg), sort_keys=True)
