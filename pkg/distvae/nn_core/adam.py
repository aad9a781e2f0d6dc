import logging
from dataclasses import dataclass

import numpy as np

from distvae.errors import NonFiniteError, ShapeError

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def create(cls, params, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params],
                   0, lr, beta1, beta2, eps)


def adam_step(params, tape, state):
    """Bias-corrected Adam update, applied to params in place."""
    if not (len(params) == len(tape.grads) == len(state.m)):
        raise ShapeError("adam_step: params, gradients and moments differ in length")
    for i, (p, g) in enumerate(zip(params, tape.grads)):
        if p.shape != g.shape:
            raise ShapeError(f"adam_step: gradient shape {g.shape} != parameter shape {p.shape}")
        if not np.all(np.isfinite(g)):
            block = tape.names[i] if i < len(tape.names) else f"#{i}"
            raise NonFiniteError(f"non-finite gradient in parameter block {block}")

    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t
    for p, g, m, v in zip(params, tape.grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
    return params, state
