"""
Per-step forecast error metrics on the held-out split
"""
from typing import Optional

import numpy as np

from app.exceptions import ShapeError
from app.models import EvalReport, ModelDescriptor, Scaler, TrainReport


def _check(pred: np.ndarray, target: np.ndarray):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"predictions {pred.shape} and targets {target.shape} differ")
    if pred.ndim != 2 or pred.shape[0] == 0:
        raise ValueError("need a non-empty (N, T_y) matrix of predictions")
    return pred, target


def rmse_per_step(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Root-mean-square error at each horizon step n"""
    pred, target = _check(pred, target)
    return np.sqrt(np.mean((pred - target) ** 2, axis=0))


def mae_per_step(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    pred, target = _check(pred, target)
    return np.mean(np.abs(pred - target), axis=0)


def aggregate_report(
    pred: np.ndarray,
    target: np.ndarray,
    descriptor: ModelDescriptor,
    seed: int,
    training: Optional[TrainReport] = None,
) -> EvalReport:
    """Per-step and mean RMSE/MAE plus the training bookkeeping of one run"""
    rmse = rmse_per_step(pred, target)
    mae = mae_per_step(pred, target)
    if rmse.size != descriptor.output_len:
        raise ShapeError(f"descriptor says T_y={descriptor.output_len}, predictions have {rmse.size} steps")
    training = training or TrainReport()
    return EvalReport(
        rmse_per_step=rmse.tolist(),
        mae_per_step=mae.tolist(),
        rmse_mean=float(rmse.mean()),
        mae_mean=float(mae.mean()),
        num_test_examples=int(np.shape(pred)[0]),
        descriptor=descriptor,
        seed=seed,
        train_time_s=training.wall_time_s,
        stopped_epoch=training.stopped_epoch,
        best_epoch=training.best_epoch,
    )


def to_physical_units(report: EvalReport, scaler: Scaler) -> EvalReport:
    """Errors expressed in the pre-normalisation unit (divide by the scaler slope)"""
    factor = 1.0 / scaler.slope
    return report.model_copy(update={
        "rmse_per_step": [v * factor for v in report.rmse_per_step],
        "mae_per_step": [v * factor for v in report.mae_per_step],
        "rmse_mean": report.rmse_mean * factor,
        "mae_mean": report.mae_mean * factor,
    })
