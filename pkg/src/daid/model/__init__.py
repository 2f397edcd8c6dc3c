from .losses import (LossBreakdown, LossSettings, alignment_pairs, attr_loss, backward, cosine_loss,
                     loss_and_grad, ortho_loss, total_loss)
from .network import ModelParams, forward, forward_batch, init_params, sigmoid
from .optim import OptimizerState, optimizer_step
from .train import EpochRecord, TrainConfig, TrainResult, predict, train

__all__ = [
    "LossBreakdown", "LossSettings", "alignment_pairs", "attr_loss", "backward", "cosine_loss",
    "loss_and_grad", "ortho_loss", "total_loss", "ModelParams", "forward", "forward_batch",
    "init_params", "sigmoid", "OptimizerState", "optimizer_step", "EpochRecord", "TrainConfig",
    "TrainResult", "predict", "train",
]
