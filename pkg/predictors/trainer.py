"""
Training loop: Adam on MSE with early stopping and best-weights restoration
"""
import math
import time
from typing import Tuple

import numpy as np

from app.exceptions import DivergenceError, NonFiniteGradientError, ShapeError
from app.logger import logger
from app.models import BatchPlan, Split, TrainConfig, TrainReport, WindowedDataset
from neural.losses import mse_loss
from neural.optim import AdamState, adam_update
from predictors.builder import Model
from tools.windowing import batches


class EarlyStopping:
    """Tracks the best validation loss; stops after `patience` epochs without improvement"""

    def __init__(self, patience: int, min_delta: float = 1e-9):
        self.patience = patience
        self.min_delta = min_delta
        self.best = math.inf
        self.best_epoch = 0
        self.wait = 0

    def update(self, epoch: int, loss: float) -> bool:
        """Record an epoch's loss; True when it is a new best"""
        if loss < self.best - self.min_delta:
            self.best, self.best_epoch, self.wait = loss, epoch, 0
            return True
        self.wait += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.wait > 0 and self.wait >= self.patience


def evaluate_loss(model: Model, dataset: WindowedDataset, split: Split) -> float:
    inputs, targets = dataset.subset(split)
    return mse_loss(model.predict(inputs), targets)[0]


def train(model: Model, dataset: WindowedDataset, config: TrainConfig) -> Tuple[Model, TrainReport]:
    descriptor = model.descriptor
    if (descriptor.input_len, descriptor.output_len) != (dataset.input_len, dataset.output_len):
        raise ShapeError(
            f"model expects T_x={descriptor.input_len}, T_y={descriptor.output_len}; "
            f"dataset has {dataset.input_len}, {dataset.output_len}"
        )
    if dataset.count(Split.VAL) == 0:
        raise ValueError("validation split is empty")

    network = model.network
    network.set_dropout(config.dropout_rate, config.seed)
    plan = BatchPlan(batch_size=config.batch_size, shuffle_seed=config.seed)
    state = AdamState(step_size=config.step_size)
    stopper = EarlyStopping(config.patience, config.min_delta)
    best_snapshot = network.snapshot()
    report = TrainReport()

    logger.info(
        f"Training {descriptor.family.value} ({model.parameter_count} parameters) on "
        f"{dataset.count(Split.TRAIN)} windows for up to {config.epochs} epochs"
    )
    start = time.perf_counter()
    for epoch in range(1, config.epochs + 1):
        total, count = 0.0, 0
        for index, (X, Y) in enumerate(batches(dataset, Split.TRAIN, plan, epoch - 1)):
            try:
                pred = network.forward(X, training=True, key=(epoch, index))
                loss, dY = mse_loss(pred, Y)
                if not np.isfinite(loss):
                    raise DivergenceError(epoch, loss)
                network.backward(dY)
                adam_update(state, network.parameters(), network.gradients())
            except (FloatingPointError, NonFiniteGradientError) as exc:
                logger.error(f"Divergence at epoch {epoch}, batch {index}: {exc}")
                raise DivergenceError(epoch, math.nan) from exc
            total += loss * X.shape[0]
            count += X.shape[0]

        train_loss = total / count
        val_loss = evaluate_loss(model, dataset, Split.VAL)
        if not np.isfinite(val_loss):
            raise DivergenceError(epoch, val_loss)
        report.train_losses.append(train_loss)
        report.val_losses.append(val_loss)
        if stopper.update(epoch, val_loss):
            best_snapshot = network.snapshot()
        logger.debug(f"epoch {epoch}: train={train_loss:.6g} val={val_loss:.6g} best@{stopper.best_epoch}")
        report.stopped_epoch = epoch
        if stopper.should_stop:
            logger.info(f"Early stop at epoch {epoch}; best epoch {stopper.best_epoch}")
            break

    network.restore(best_snapshot)
    report.best_epoch = stopper.best_epoch
    report.wall_time_s = time.perf_counter() - start
    return model, report
