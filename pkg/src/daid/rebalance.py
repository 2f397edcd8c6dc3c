"""Demographic-aware rebalancing: inverse-propensity weights and
subgroup-conditioned feature normalization."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .domain import Dataset, Sample, SubgroupKey
from .errors import EmptyDataset, EmptyInput, ShapeMismatch, UnseenCategory

DEFAULT_NORM_EPS = 1e-5


@dataclass(frozen=True)
class PropensityTable:
    """Empirical attribute marginals and the per-sample weights they imply.

    ``weights`` are the raw inverse products; ``normalization`` is their mean,
    so ``weights / normalization`` averages to one over the training set.
    """

    marginals: tuple[np.ndarray, ...]
    weights: np.ndarray
    normalization: float
    joint: dict = field(default_factory=dict)
    joint_propensity: bool = False
    fallback: bool = True

    def to_json(self) -> dict:
        return {
            "marginals": [m.tolist() for m in self.marginals],
            "normalization": self.normalization,
            "joint_propensity": self.joint_propensity,
            "joint": [{"key": list(k), "p": p} for k, p in sorted(self.joint.items())],
            "fallback": self.fallback,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PropensityTable":
        return cls(tuple(np.asarray(m, dtype=np.float64) for m in obj["marginals"]),
                   np.zeros(0), float(obj["normalization"]),
                   {SubgroupKey(e["key"]): float(e["p"]) for e in obj.get("joint", [])},
                   bool(obj.get("joint_propensity", False)), bool(obj.get("fallback", True)))

    def _prob(self, attrs) -> float:
        if self.joint_propensity:
            key = SubgroupKey(attrs)
            if key in self.joint:
                return self.joint[key]
            if not self.fallback:
                raise UnseenCategory(f"subgroup {tuple(key)} never seen during fitting")
            return min(self.joint.values())
        p = 1.0
        for k, c in enumerate(attrs):
            marg = self.marginals[k]
            q = marg[c] if c < marg.shape[0] else 0.0
            if q <= 0.0:
                if not self.fallback:
                    raise UnseenCategory(f"category {c} of attribute {k} has zero training frequency")
                q = marg[marg > 0].min()
            p *= q
        return p

    def weights_for(self, attrs: np.ndarray, normalize: bool = True) -> np.ndarray:
        A = np.asarray(attrs, dtype=np.int64)
        w = np.array([1.0 / self._prob(row) for row in A], dtype=np.float64)
        return w / self.normalization if normalize else w


def fit_propensity(ds: Dataset, joint_propensity: bool = False, fallback: bool = True) -> PropensityTable:
    """Per-sample weight = 1 / prod_k P(s_k) with P the empirical marginals.

    ``joint_propensity`` swaps the product for the joint intersection frequency.
    """
    n = len(ds)
    if n == 0:
        raise EmptyDataset("cannot fit propensity on an empty dataset")
    marginals = tuple(np.bincount(ds.attrs[:, k], minlength=card) / n
                      for k, card in enumerate(ds.schema.cardinalities))
    keys, gid = ds.group_ids()
    joint = {k: c / n for k, c in zip(keys, np.bincount(gid, minlength=len(keys)))}
    if joint_propensity:
        w = 1.0 / np.array([joint[k] for k in keys])[gid]
    else:
        p = np.ones(n)
        for k, marg in enumerate(marginals):
            p = p * marg[ds.attrs[:, k]]
        w = 1.0 / p
    w.setflags(write=False)
    return PropensityTable(marginals, w, float(np.mean(w)), joint, joint_propensity, fallback)


def weight_of(table: PropensityTable, sample: Sample, normalize: bool = True) -> float:
    return float(table.weights_for(np.asarray([sample.attrs]), normalize)[0])


@dataclass(frozen=True)
class SubgroupMoments:
    """Frozen per-subgroup feature mean and (population) variance."""

    mu: dict
    var: dict
    eps: float
    fallback_mu: np.ndarray
    fallback_var: np.ndarray

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    def stats(self, key) -> tuple[np.ndarray, np.ndarray]:
        key = SubgroupKey(key)
        if key in self.mu:
            return self.mu[key], self.var[key]
        return self.fallback_mu, self.fallback_var

    def tables(self, keys: Sequence) -> tuple[np.ndarray, np.ndarray]:
        """Stacked (mean, 1/sqrt(var + eps)) rows for the given keys."""
        mus, vars_ = zip(*(self.stats(k) for k in keys))
        return np.stack(mus), 1.0 / np.sqrt(np.stack(vars_) + self.eps)

    def to_json(self) -> dict:
        return {
            "eps": self.eps,
            "groups": [{"key": list(k), "mu": self.mu[k].tolist(), "var": self.var[k].tolist()}
                       for k in sorted(self.mu)],
            "fallback_mu": self.fallback_mu.tolist(),
            "fallback_var": self.fallback_var.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SubgroupMoments":
        mu = {SubgroupKey(g["key"]): np.asarray(g["mu"], dtype=np.float64) for g in obj["groups"]}
        var = {SubgroupKey(g["key"]): np.asarray(g["var"], dtype=np.float64) for g in obj["groups"]}
        return cls(mu, var, float(obj["eps"]), np.asarray(obj["fallback_mu"], dtype=np.float64),
                   np.asarray(obj["fallback_var"], dtype=np.float64))


def fit_moments(features, groups: Sequence, eps: float = DEFAULT_NORM_EPS) -> SubgroupMoments:
    H = np.asarray(features, dtype=np.float64)
    if H.ndim != 2 or H.shape[0] == 0:
        raise EmptyInput("fit_moments needs a non-empty (n, d_h) array")
    if len(groups) != H.shape[0]:
        raise ShapeMismatch("features and groups are not aligned")
    G = np.asarray([tuple(g) for g in groups], dtype=np.int64).reshape(H.shape[0], -1)
    uniq, inv = np.unique(G, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    counts = np.bincount(inv, minlength=len(uniq)).astype(np.float64)
    sums = np.zeros((len(uniq), H.shape[1]))
    np.add.at(sums, inv, H)
    means = sums / counts[:, None]
    centered = H - means[inv]
    sq = np.zeros_like(sums)
    np.add.at(sq, inv, centered * centered)
    variances = sq / counts[:, None]
    keys = [SubgroupKey(row) for row in uniq]
    return SubgroupMoments({k: means[g] for g, k in enumerate(keys)},
                           {k: variances[g] for g, k in enumerate(keys)},
                           eps, H.mean(axis=0), H.var(axis=0))


def normalize(moments: SubgroupMoments, h, group) -> np.ndarray:
    """(h - mu_g) / sqrt(var_g + eps); unseen groups use the pooled moments."""
    mu, var = moments.stats(group)
    h = np.asarray(h, dtype=np.float64)
    if h.shape[-1] != mu.shape[0]:
        raise ShapeMismatch(f"expected length {mu.shape[0]}, got {h.shape[-1]}")
    return (h - mu) / np.sqrt(var + moments.eps)


def normalize_batch(moments: SubgroupMoments, H, groups: Sequence) -> np.ndarray:
    mu, inv_std = moments.tables(list(groups))
    return (np.asarray(H, dtype=np.float64) - mu) * inv_std
