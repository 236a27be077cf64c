"""
Loss functions
"""
from typing import Tuple

import numpy as np

from app.exceptions import ShapeError


def mse_loss(pred: np.ndarray, target: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean squared error over all entries and its gradient w.r.t. `pred`"""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"prediction {pred.shape} and target {target.shape} differ in shape")
    diff = pred - target
    return float(np.mean(diff ** 2)), 2.0 * diff / diff.size
