"""
Finite-difference gradient checking
"""
from typing import Optional

import numpy as np

from app.logger import logger
from neural.losses import mse_loss
from neural.network import Network


def _loss(network: Network, inputs: np.ndarray, targets: np.ndarray) -> float:
    return mse_loss(network.forward(inputs, training=False), targets)[0]


def gradient_check(
    network: Network,
    inputs: np.ndarray,
    targets: np.ndarray,
    epsilon: float = 1e-5,
    sample_size: Optional[int] = 200,
    seed: int = 0,
) -> float:
    """
    Max relative error between analytic and central-difference gradients.

    Arrays with more than twice `sample_size` entries are checked on a random
    subsample of `sample_size` coordinates; smaller arrays are checked fully.
    """
    pred = network.forward(inputs, training=False)
    _, dY = mse_loss(pred, targets)
    network.backward(dY)
    analytic = network.gradients().copy()

    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_name = ""
    for name, array in network.parameters().items():
        flat = array.reshape(-1)
        if sample_size is not None and flat.size > 2 * sample_size:
            coords = rng.choice(flat.size, size=sample_size, replace=False)
        else:
            coords = np.arange(flat.size)
        grad = analytic[name].reshape(-1)
        for idx in coords:
            original = flat[idx]
            flat[idx] = original + epsilon
            loss_plus = _loss(network, inputs, targets)
            flat[idx] = original - epsilon
            loss_minus = _loss(network, inputs, targets)
            flat[idx] = original
            numeric = (loss_plus - loss_minus) / (2.0 * epsilon)
            if abs(grad[idx]) + abs(numeric) < 1e-10:
                continue
            error = abs(grad[idx] - numeric) / (abs(grad[idx]) + abs(numeric) + 1e-12)
            if error > worst:
                worst, worst_name = error, f"{name}[{idx}]"
    logger.debug(f"Gradient check: max relative error {worst:.3e} at {worst_name or '-'}")
    return float(worst)
