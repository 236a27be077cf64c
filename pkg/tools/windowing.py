"""
Sliding-window framing, chronological splits and mini-batches
"""
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from app.exceptions import TraceError
from app.logger import logger
from app.models import BatchPlan, Split, SignalTrace, WindowConfig, WindowedDataset

Batch = Tuple[np.ndarray, np.ndarray]


def window_count(length: int, config: WindowConfig) -> int:
    span = config.input_len + config.output_len
    if length < span:
        return 0
    return (length - span) // config.stride + 1


def make_windows(trace: SignalTrace, config: WindowConfig, split: Split = Split.TRAIN) -> WindowedDataset:
    """Input windows of T_x samples, each followed by its T_y-sample target"""
    span = config.input_len + config.output_len
    if len(trace) < span:
        raise TraceError(
            f"trace '{trace.label}' has {len(trace)} samples, fewer than T_x + T_y = {span}"
        )
    frames = sliding_window_view(trace.samples, span)[::config.stride]
    return WindowedDataset(
        inputs=frames[:, :config.input_len],
        targets=frames[:, config.input_len:],
        splits=[Split(split)] * frames.shape[0],
    )


def chronological_split(
    trace: SignalTrace, fractions: Sequence[float] = (0.7, 0.2, 0.1)
) -> Tuple[SignalTrace, SignalTrace, SignalTrace]:
    """Contiguous train/validation/test segments; the remainder goes to test"""
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise ValueError(f"need three positive fractions, got {tuple(fractions)}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"split fractions must sum to 1, got {sum(fractions)}")
    n = len(trace)
    n_train = int(math.floor(fractions[0] * n + 1e-9))
    n_val = int(math.floor(fractions[1] * n + 1e-9))
    if min(n_train, n_val, n - n_train - n_val) < 1:
        raise TraceError(f"trace of {n} samples is too short to split {tuple(fractions)}")

    bounds = [(0, n_train, Split.TRAIN), (n_train, n_train + n_val, Split.VAL), (n_train + n_val, n, Split.TEST)]
    segments = tuple(
        trace.derive(
            trace.samples[lo:hi],
            label=f"{trace.label}:{split.value}",
            metadata=dict(trace.metadata, split=split.value, offset=lo),
        )
        for lo, hi, split in bounds
    )
    logger.debug(f"Split {n} samples into {n_train}/{n_val}/{n - n_train - n_val}")
    return segments


def build_dataset(
    segments: Tuple[SignalTrace, SignalTrace, SignalTrace],
    config: WindowConfig,
    test_stride: Optional[int] = None,
) -> WindowedDataset:
    """
    Window each split segment on its own so no window straddles a boundary.

    Training and validation use `config.stride`; test windows default to a
    stride of T_y so consecutive test targets cover disjoint horizons.
    """
    test_config = config.model_copy(update={"stride": test_stride or config.output_len})
    parts = [
        make_windows(segments[0], config, Split.TRAIN),
        make_windows(segments[1], config, Split.VAL),
        make_windows(segments[2], test_config, Split.TEST),
    ]
    dataset = WindowedDataset(
        inputs=np.concatenate([p.inputs for p in parts]),
        targets=np.concatenate([p.targets for p in parts]),
        splits=np.concatenate([p.splits for p in parts]),
    )
    logger.info(
        f"Windowed dataset T_x={config.input_len} T_y={config.output_len}: "
        f"{dataset.count(Split.TRAIN)}/{dataset.count(Split.VAL)}/{dataset.count(Split.TEST)} examples"
    )
    return dataset


def batches(dataset: WindowedDataset, split: Split, plan: BatchPlan, epoch: int = 0) -> List[Batch]:
    """
    Mini-batches of one split. Training batches are reshuffled every epoch
    with seed ``plan.shuffle_seed + epoch``; other splits keep their order.
    """
    inputs, targets = dataset.subset(split)
    count = inputs.shape[0]
    if count == 0:
        raise ValueError(f"split '{Split(split).value}' is empty")

    order = np.arange(count)
    if Split(split) == Split.TRAIN:
        order = np.random.default_rng(plan.shuffle_seed + epoch).permutation(count)

    result = []
    for start in range(0, count, plan.batch_size):
        idx = order[start:start + plan.batch_size]
        if plan.drop_last and idx.size < plan.batch_size:
            break
        result.append((inputs[idx], targets[idx]))
    return result
