"""AdamW with decoupled weight decay, applied in place."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import ModelParams


@dataclass
class OptimizerState:
    lr: float = 1e-3
    weight_decay: float = 4e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params: ModelParams, **kw) -> "OptimizerState":
        st = cls(**kw)
        st.m = [np.zeros_like(a) for a in params.arrays()]
        st.v = [np.zeros_like(a) for a in params.arrays()]
        return st


def optimizer_step(state: OptimizerState, params: ModelParams, grads: ModelParams) -> None:
    """p <- p (1 - lr wd) - lr m_hat / (sqrt(v_hat) + eps)."""
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** t
    bc2 = 1.0 - b2 ** t
    decay = 1.0 - state.lr * state.weight_decay
    for p, g, m, v in zip(params.arrays(), grads.arrays(), state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise ValueError("parameter/gradient/moment shapes differ")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p *= decay
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
