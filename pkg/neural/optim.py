"""
Adam optimizer
"""
from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np

from app.config import config
from app.exceptions import NonFiniteGradientError


@dataclass
class AdamState:
    step_size: float = config.STEP_SIZE
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_update(
    state: AdamState, params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray]
) -> Tuple[Mapping[str, np.ndarray], AdamState]:
    """One bias-corrected Adam step, applied to `params` in place"""
    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise NonFiniteGradientError(name)

    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t
    for name, array in params.items():
        grad = grads[name]
        if grad.shape != array.shape:
            raise ValueError(f"gradient shape {grad.shape} does not match parameter '{name}' {array.shape}")
        m = state.m.setdefault(name, np.zeros_like(array))
        v = state.v.setdefault(name, np.zeros_like(array))
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad ** 2
        m_hat = m / correction1
        v_hat = v / correction2
        array -= state.step_size * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return params, state
