"""
Closed-form least-squares linear baseline
"""
import numpy as np

from app.exceptions import RankDeficientError
from app.logger import logger
from app.models import Family, ModelDescriptor, Split, WindowedDataset
from predictors.builder import Model, build_model

RIDGE = 1e-8


def fit_linear_closed_form(dataset: WindowedDataset, ridge: float = RIDGE) -> Model:
    """Solve the normal equations (tiny ridge on the weights only) for weights and bias"""
    X, Y = dataset.subset(Split.TRAIN)
    if X.shape[0] < dataset.input_len + 1:
        raise ValueError(
            f"closed-form fit needs at least {dataset.input_len + 1} training examples, got {X.shape[0]}"
        )
    design = np.hstack([X, np.ones((X.shape[0], 1))])
    penalty = ridge * np.eye(design.shape[1])
    penalty[-1, -1] = 0.0  # intercept is not shrunk
    gram = design.T @ design + penalty
    condition = float(np.linalg.cond(gram))
    if not np.isfinite(condition) or condition > 1.0 / np.finfo(np.float64).eps:
        raise RankDeficientError(condition)
    solution = np.linalg.solve(gram, design.T @ Y)

    descriptor = ModelDescriptor(family=Family.LINEAR, input_len=dataset.input_len, output_len=dataset.output_len)
    model = build_model(descriptor)
    dense = model.network.layers[0].params
    dense.W[...] = solution[:-1]
    dense.b[...] = solution[-1]
    logger.info(f"Closed-form linear fit on {X.shape[0]} examples (condition {condition:.2e})")
    return model
