"""Mini-batch training loop with the four DAID regime switches."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..domain import Dataset
from ..errors import ConfigError, DegenerateLabels, NumericError
from ..metrics import auc
from ..rebalance import DEFAULT_NORM_EPS, PropensityTable, SubgroupMoments, fit_moments, fit_propensity
from .losses import DEFAULT_PAIR_CAP, LossSettings, alignment_pairs, loss_and_grad
from .network import ModelParams, encode, init_params, sigmoid
from .optim import OptimizerState, optimizer_step

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    hidden: tuple = (32, 32)
    d_h: int = 16
    rank: int = 8
    epochs: int = 20
    batch_size: int = 64
    lr: float = 1e-3
    weight_decay: float = 4e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    # regime switches
    reweight: bool = False
    normalize: bool = False
    attr: bool = False
    ortho: bool = False
    lambda_attr: float = 0.7
    lambda_ortho: float = 0.2
    align_space: str = "projected"
    ortho_form: str = "columns"
    norm_eps: float = DEFAULT_NORM_EPS
    norm_stats: str = "epoch"        # "epoch": frozen full-train stats, refit every epoch; "batch"
    weight_norm: str = "global"      # "global", "batch" or "none"
    joint_propensity: bool = False
    pair_cap: int = DEFAULT_PAIR_CAP

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        checks = [
            (self.rank <= self.d_h, "rank must not exceed d_h"),
            (self.rank >= 1 and self.d_h >= 1, "rank and d_h must be positive"),
            (self.epochs >= 0, "epochs must be >= 0"),
            (self.batch_size >= 1, "batch_size must be >= 1"),
            (self.lr > 0, "lr must be positive"),
            (self.weight_decay >= 0, "weight_decay must be >= 0"),
            (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1, "betas must lie in [0, 1)"),
            (self.lambda_attr >= 0 and self.lambda_ortho >= 0, "lambdas must be >= 0"),
            (self.align_space in ("projected", "normalized"), "align_space: projected|normalized"),
            (self.ortho_form in ("columns", "literal"), "ortho_form: columns|literal"),
            (self.ortho_form == "columns" or self.rank == self.d_h, "literal ortho_form needs rank == d_h"),
            (self.norm_eps > 0, "norm_eps must be positive"),
            (self.norm_stats in ("epoch", "batch"), "norm_stats: epoch|batch"),
            (self.weight_norm in ("global", "batch", "none"), "weight_norm: global|batch|none"),
            (self.pair_cap >= 1, "pair_cap must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    @property
    def settings(self) -> LossSettings:
        return LossSettings(self.align_space, self.ortho_form)

    def regime(self, reweight=False, normalize=False, attr=False, ortho=False) -> "TrainConfig":
        return replace(self, reweight=reweight, normalize=normalize, attr=attr, ortho=ortho)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    cls: float
    attr: float
    ortho: float
    total: float
    train_auc: float


@dataclass
class TrainResult:
    params: ModelParams
    config: TrainConfig
    moments: SubgroupMoments | None = None
    propensity: PropensityTable | None = None
    history: list = field(default_factory=list)

    def scores(self, ds: Dataset) -> np.ndarray:
        return predict(self.params, ds, self.moments)

    def history_rows(self) -> list[dict]:
        return [asdict(r) for r in self.history]


def predict(params: ModelParams, ds: Dataset, moments: SubgroupMoments | None = None) -> np.ndarray:
    """Scores in (0, 1); normalization uses the frozen training moments."""
    H = encode(params, ds.features)
    if moments is not None:
        keys, gid = ds.group_ids()
        mu, inv_std = moments.tables(keys)
        H = (H - mu[gid]) * inv_std[gid]
    return sigmoid(H @ params.U @ params.head_w + params.head_b[0])


def _fit_epoch_moments(params, X, keys, gid, eps):
    H = encode(params, X)
    return fit_moments(H, [keys[g] for g in gid], eps)


def sample_weights(ds: Dataset, config: TrainConfig) -> tuple[np.ndarray, PropensityTable | None]:
    if not config.reweight:
        return np.ones(len(ds)), None
    table = fit_propensity(ds, joint_propensity=config.joint_propensity)
    w = np.array(table.weights)
    if config.weight_norm == "global":
        w = w / table.normalization
    return w, table


def train(ds: Dataset, config: TrainConfig = TrainConfig(), init: ModelParams | None = None) -> TrainResult:
    """Train from scratch (or from ``init``) and return params plus per-epoch history.

    Bit-reproducible for a fixed config (seed included).
    """
    y_all = ds.labels
    if len(ds) == 0 or y_all.min() == y_all.max():
        raise DegenerateLabels("training data must contain both labels")
    ss = np.random.SeedSequence(config.seed)
    init_seq, shuffle_seq, pair_seq = ss.spawn(3)
    params = init.copy() if init is not None else init_params(
        ds.d_in, config.hidden, config.d_h, config.rank, np.random.default_rng(init_seq))
    shuffle_rng = np.random.default_rng(shuffle_seq)
    pair_rng = np.random.default_rng(pair_seq)
    opt = OptimizerState.for_params(params, lr=config.lr, weight_decay=config.weight_decay,
                                    beta1=config.beta1, beta2=config.beta2, eps=config.adam_eps)

    X = ds.features
    y = y_all.astype(np.float64)
    keys, gid = ds.group_ids()
    weights, table = sample_weights(ds, config)
    lam_attr = config.lambda_attr if config.attr else 0.0
    lam_ortho = config.lambda_ortho if config.ortho else 0.0
    settings = config.settings
    n = len(ds)

    moments = None
    if config.normalize:
        moments = _fit_epoch_moments(params, X, keys, gid, config.norm_eps)
    history = []
    for epoch in range(config.epochs):
        perm = shuffle_rng.permutation(n)
        sums = np.zeros(4)
        n_batches = 0
        if config.normalize and config.norm_stats == "epoch":
            mu_tab, inv_tab = moments.tables(keys)
        for b, start in enumerate(range(0, n, config.batch_size)):
            idx = perm[start:start + config.batch_size]
            mu = inv_std = None
            if config.normalize:
                if config.norm_stats == "batch":
                    bkeys, bgid = np.unique(gid[idx], return_inverse=True)
                    bm = fit_moments(encode(params, X[idx]), [keys[g] for g in gid[idx]], config.norm_eps)
                    mu_b, inv_b = bm.tables([keys[g] for g in bkeys])
                    mu, inv_std = mu_b[bgid.reshape(-1)], inv_b[bgid.reshape(-1)]
                else:
                    mu, inv_std = mu_tab[gid[idx]], inv_tab[gid[idx]]
            w = weights[idx]
            if config.reweight and config.weight_norm == "batch":
                w = w / w.mean()
            pairs = alignment_pairs(y_all[idx], gid[idx], config.pair_cap, pair_rng) if config.attr else None
            try:
                # divergence is reported through NonFiniteLoss/NonFiniteGradient instead
                with np.errstate(over="ignore", invalid="ignore"):
                    br, grad = loss_and_grad(params, X[idx], y[idx], w, mu, inv_std, pairs,
                                             lam_attr, lam_ortho, settings)
            except NumericError as exc:
                exc.epoch, exc.batch = epoch, b
                exc.args = (f"{exc.args[0]} (epoch {epoch}, batch {b})",)
                raise
            optimizer_step(opt, params, grad)
            sums += (br.cls, br.attr, br.ortho, br.total)
            n_batches += 1
        if config.normalize:
            moments = _fit_epoch_moments(params, X, keys, gid, config.norm_eps)
        train_auc = auc(predict(params, ds, moments), y_all)
        m = sums / max(n_batches, 1)
        history.append(EpochRecord(epoch, float(m[0]), float(m[1]), float(m[2]), float(m[3]), train_auc))
        log.debug("epoch %d total %.5f train_auc %.4f", epoch, m[3], train_auc)
    return TrainResult(params, config, moments, table, history)
