"""Training objective and its analytic gradient.

total = weighted BCE + lambda_attr * alignment + lambda_ortho * orthogonality.
Normalization statistics enter as constants: no gradient flows into them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonFiniteGradient, NonFiniteLoss, ShapeMismatch
from .network import ModelParams, forward_batch

COS_DELTA = 1e-8
DEFAULT_PAIR_CAP = 512


@dataclass(frozen=True)
class LossSettings:
    align_space: str = "projected"   # or "normalized"
    ortho_form: str = "columns"      # ||U^T U - I_r||^2; "literal" = ||U U^T - I_d||^2
    cos_delta: float = COS_DELTA
    cos_eps: float = 0.0


@dataclass(frozen=True)
class LossBreakdown:
    total: float
    cls: float
    attr: float
    ortho: float
    lambda_attr: float
    lambda_ortho: float
    n_pairs: int


def cosine_loss(a, b, delta: float = COS_DELTA, eps: float = 0.0) -> float:
    """1 - cos(a, b) + eps, norms floored at delta (zero vectors give cos = 0)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch("cosine_loss needs equal-length vectors")
    cos = float(a @ b) / (max(np.linalg.norm(a), delta) * max(np.linalg.norm(b), delta))
    return 1.0 - cos + eps


def alignment_pairs(labels, group_ids, cap: int | None = DEFAULT_PAIR_CAP,
                    rng: np.random.Generator | None = None) -> np.ndarray:
    """All (i, j), i < j, with equal labels and different subgroups.

    When more than ``cap`` pairs qualify, ``cap`` of them are drawn without
    replacement from ``rng`` (kept in index order).
    """
    y = np.asarray(labels)
    g = np.asarray(group_ids)
    i, j = np.triu_indices(y.shape[0], k=1)
    keep = (y[i] == y[j]) & (g[i] != g[j])
    pairs = np.stack([i[keep], j[keep]], axis=1)
    if cap is not None and pairs.shape[0] > cap:
        rng = rng if rng is not None else np.random.default_rng(0)
        pick = np.sort(rng.choice(pairs.shape[0], size=cap, replace=False))
        pairs = pairs[pick]
    return pairs


def _pair_cosines(F, pairs, delta):
    A = F[pairs[:, 0]]
    B = F[pairs[:, 1]]
    ra = np.sqrt(np.einsum("ij,ij->i", A, A))
    rb = np.sqrt(np.einsum("ij,ij->i", B, B))
    na = np.maximum(ra, delta)
    nb = np.maximum(rb, delta)
    cos = np.einsum("ij,ij->i", A, B) / (na * nb)
    return A, B, ra, rb, na, nb, cos


def attr_loss(latents, labels, groups, pairs=None, delta: float = COS_DELTA,
              eps: float = 0.0, cap: int | None = None, rng=None) -> tuple[float, int]:
    """Mean cosine loss over same-label, cross-subgroup pairs; (0, 0) if none."""
    F = np.asarray(latents, dtype=np.float64)
    if pairs is None:
        gid = _group_ids(groups)
        pairs = alignment_pairs(labels, gid, cap, rng)
    if len(pairs) == 0:
        return 0.0, 0
    cos = _pair_cosines(F, pairs, delta)[-1]
    return float(np.mean(1.0 - cos) + eps), int(len(pairs))


def _attr_grad(F, pairs, delta):
    A, B, ra, rb, na, nb, cos = _pair_cosines(F, pairs, delta)
    P = pairs.shape[0]
    # d(-cos)/da = -(b / (na nb) - cos a / ra^2), second term only above the floor
    ca = np.where(ra > delta, cos / np.where(ra > 0, ra, 1.0) ** 2, 0.0)
    cb = np.where(rb > delta, cos / np.where(rb > 0, rb, 1.0) ** 2, 0.0)
    inv = 1.0 / (na * nb)
    gA = -(B * inv[:, None] - A * ca[:, None]) / P
    gB = -(A * inv[:, None] - B * cb[:, None]) / P
    G = np.zeros_like(F)
    np.add.at(G, pairs[:, 0], gA)
    np.add.at(G, pairs[:, 1], gB)
    return G


def ortho_loss(U, form: str = "columns") -> float:
    U = np.asarray(U, dtype=np.float64)
    if form == "literal":
        M = U @ U.T - np.eye(U.shape[0])
    else:
        M = U.T @ U - np.eye(U.shape[1])
    return float(np.sum(M * M))


def _ortho_grad(U, form):
    if form == "literal":
        return 4.0 * (U @ U.T - np.eye(U.shape[0])) @ U
    return 4.0 * U @ (U.T @ U - np.eye(U.shape[1]))


def _group_ids(groups):
    index: dict = {}
    return np.array([index.setdefault(tuple(g), len(index)) for g in groups], dtype=np.int64)


def bce_from_logits(logits, y) -> np.ndarray:
    return np.logaddexp(0.0, logits) - y * logits


def loss_and_grad(params: ModelParams, X, y, weights, mu=None, inv_std=None, pairs=None,
                  lambda_attr: float = 0.0, lambda_ortho: float = 0.0,
                  settings: LossSettings = LossSettings(), need_grad: bool = True):
    """Loss breakdown and (optionally) the gradient as a ModelParams of arrays.

    ``mu``/``inv_std`` are the frozen per-row normalization statistics.
    """
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    n = y.shape[0]
    if n == 0:
        raise ShapeMismatch("empty batch")
    if w.shape[0] != n:
        raise ShapeMismatch("weights not aligned with batch")
    c = forward_batch(params, X, mu, inv_std)
    cls = float(np.mean(w * bce_from_logits(c.logits, y)))

    use_attr = lambda_attr != 0.0 and pairs is not None and len(pairs) > 0
    align = c.h_tilde if settings.align_space == "projected" else c.h_hat
    if use_attr:
        attr, n_pairs = attr_loss(align, None, None, pairs=pairs, delta=settings.cos_delta,
                                  eps=settings.cos_eps)
    else:
        attr, n_pairs = 0.0, 0
    ortho = ortho_loss(params.U, settings.ortho_form)
    total = cls + lambda_attr * attr + lambda_ortho * ortho
    br = LossBreakdown(total, cls, attr, ortho, lambda_attr, lambda_ortho, n_pairs)
    if not np.isfinite([total, cls, attr, ortho]).all():
        raise NonFiniteLoss(f"non-finite loss: {br}")
    if not need_grad:
        return br, None

    dz = w * (c.scores - y) / n
    g_head_w = c.h_tilde.T @ dz
    g_head_b = np.array([dz.sum()])
    d_tilde = np.outer(dz, params.head_w)
    d_hat = None
    if use_attr:
        G = lambda_attr * _attr_grad(align, pairs, settings.cos_delta)
        if settings.align_space == "projected":
            d_tilde = d_tilde + G
        else:
            d_hat = G
    g_U = c.h_hat.T @ d_tilde + lambda_ortho * _ortho_grad(params.U, settings.ortho_form)
    d = d_tilde @ params.U.T
    if d_hat is not None:
        d = d + d_hat
    if c.inv_std is not None:
        d = d * c.inv_std

    grads = []
    last = len(params.layers) - 1
    for i in range(last, -1, -1):
        W, _ = params.layers[i]
        if i < last:
            d = d * (1.0 - c.acts[i + 1] ** 2)
        grads.append((d.T @ c.acts[i], d.sum(axis=0)))
        if i > 0:
            d = d @ W
    grads.reverse()
    grad = ModelParams(grads, g_U, g_head_w, g_head_b)
    if not grad.all_finite():
        raise NonFiniteGradient("non-finite gradient")
    return br, grad


def total_loss(params: ModelParams, X, y, groups, weights, moments=None,
               lambda_attr: float = 0.7, lambda_ortho: float = 0.2, pairs=None,
               settings: LossSettings = LossSettings()) -> LossBreakdown:
    """Loss on one batch; ``groups`` are subgroup keys, ``moments`` optional."""
    mu, inv_std, pairs = _prepare(X, y, groups, moments, pairs)
    return loss_and_grad(params, X, y, weights, mu, inv_std, pairs, lambda_attr, lambda_ortho,
                         settings, need_grad=False)[0]


def backward(params: ModelParams, X, y, groups, weights, moments=None,
             lambda_attr: float = 0.7, lambda_ortho: float = 0.2, pairs=None,
             settings: LossSettings = LossSettings()) -> ModelParams:
    mu, inv_std, pairs = _prepare(X, y, groups, moments, pairs)
    return loss_and_grad(params, X, y, weights, mu, inv_std, pairs, lambda_attr, lambda_ortho,
                         settings)[1]


def _prepare(X, y, groups, moments, pairs):
    mu = inv_std = None
    if moments is not None:
        mu, inv_std = moments.tables(list(groups))
    if pairs is None:
        pairs = alignment_pairs(y, _group_ids(groups), cap=None)
    return mu, inv_std, pairs
