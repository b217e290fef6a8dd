"""
Adam optimizer (bias-corrected), thuần numpy và deterministic.
"""
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from modules.errors import ShapeError

Params = Dict[str, np.ndarray]


@dataclass
class AdamState:
    """First/second moment estimates keyed by parameter name"""
    step: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)

    def copy(self) -> 'AdamState':
        return AdamState(self.step,
                         {k: a.copy() for k, a in self.m.items()},
                         {k: a.copy() for k, a in self.v.items()})


def adam_step(params: Params, grads: Params, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> Tuple[Params, AdamState]:
    """
    Một bước Adam. Không sửa params/state đầu vào; trả về bản mới.
    Raises:
        ShapeError: tên hoặc shape của grads không khớp params
    """
    if set(grads) != set(params):
        missing = sorted(set(params) ^ set(grads))
        raise ShapeError(f"adam_step: params and grads disagree on names {missing}")

    t = state.step + 1
    new_params: Params = {}
    new_state = AdamState(step=t)
    bias1 = 1.0 - beta1 ** t
    bias2 = 1.0 - beta2 ** t
    for name, p in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != p.shape:
            raise ShapeError(f"adam_step: gradient for '{name}' has shape {g.shape}, parameter has {p.shape}")
        m = state.m.get(name, np.zeros(p.shape))
        v = state.v.get(name, np.zeros(p.shape))
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        update = lr * (m / bias1) / (np.sqrt(v / bias2) + eps)
        new_params[name] = (p - update).astype(p.dtype)
        new_state.m[name] = m
        new_state.v[name] = v
    return new_params, new_state


class Adam:
    """Stateful wrapper quanh adam_step"""

    def __init__(self, lr: float = 0.001, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = AdamState()

    def step(self, params: Params, grads: Params) -> Params:
        params, self.state = adam_step(params, grads, self.state, self.lr, self.beta1, self.beta2, self.eps)
        return params
