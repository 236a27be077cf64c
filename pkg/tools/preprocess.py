"""
Trace conditioning: downsampling, large-scale removal and min-max scaling
"""
from typing import Union

import numpy as np

from app.exceptions import DegenerateRangeError, TraceError
from app.logger import logger
from app.models import Scaler, SignalTrace, TraceScale

Values = Union[float, np.ndarray, SignalTrace]


def downsample_mean(trace: SignalTrace, factor: int) -> SignalTrace:
    """Average consecutive blocks of `factor` samples; a short tail is dropped"""
    if factor < 1:
        raise ValueError(f"downsample factor must be >= 1, got {factor}")
    if len(trace) < factor:
        raise TraceError(f"trace of {len(trace)} samples is shorter than factor {factor}")
    if factor == 1:
        return trace
    usable = (len(trace) // factor) * factor
    blocks = trace.samples[:usable].reshape(-1, factor)
    logger.debug(f"Downsampling {len(trace)} samples by {factor} ({len(trace) - usable} dropped)")
    return trace.derive(blocks.mean(axis=1), sample_rate_hz=trace.sample_rate_hz / factor)


def _moving_average(samples: np.ndarray, window: int) -> np.ndarray:
    # centered window [k - left, k + right], truncated at the edges
    n = samples.size
    left, right = (window - 1) // 2, window // 2
    cumulative = np.concatenate(([0.0], np.cumsum(samples)))
    idx = np.arange(n)
    lo = np.clip(idx - left, 0, n)
    hi = np.clip(idx + right + 1, 0, n)
    return (cumulative[hi] - cumulative[lo]) / (hi - lo)


def local_mean(trace: SignalTrace, window: int) -> SignalTrace:
    """Centered moving average in linear scale, same length as the input"""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if window > len(trace):
        raise TraceError(f"window {window} exceeds trace length {len(trace)}")
    if window == 1:
        return trace
    return trace.derive(_moving_average(trace.samples, window))


def extract_small_scale(trace: SignalTrace, window: int) -> SignalTrace:
    """Divide out the local mean to keep only small-scale fading"""
    non_positive = np.flatnonzero(trace.samples <= 0)
    if non_positive.size:
        raise TraceError(f"sample at index {non_positive[0]} is not positive; small-scale extraction needs linear power")
    mean = local_mean(trace, window).samples
    bad = np.flatnonzero(mean <= 0)
    if bad.size:
        raise TraceError(f"local mean is not positive at index {bad[0]}")
    logger.debug(f"Extracted small-scale fading with a {window}-sample local mean")
    return trace.derive(trace.samples / mean, scale=TraceScale.LINEAR)


def fit_minmax(trace: SignalTrace, new_min: float = -1.0, new_max: float = 1.0) -> Scaler:
    x_min = float(np.min(trace.samples))
    x_max = float(np.max(trace.samples))
    if x_max == x_min:
        raise DegenerateRangeError(f"degenerate range: trace is constant at {x_min}")
    return Scaler(x_min=x_min, x_max=x_max, new_min=new_min, new_max=new_max)


def apply_scaler(scaler: Scaler, values: Values) -> Values:
    """
    Map values into [new_min, new_max].

    Values outside the fitted range extrapolate linearly; for traces the
    count of such samples is recorded under metadata["extrapolated"].
    """
    if isinstance(values, SignalTrace):
        scaled = apply_scaler(scaler, values.samples)
        outside = int(np.count_nonzero((values.samples < scaler.x_min) | (values.samples > scaler.x_max)))
        if outside:
            logger.warning(f"{outside} samples of '{values.label}' fall outside the fitted range and extrapolate")
        metadata = dict(values.metadata, extrapolated=outside)
        return values.derive(scaled, scale=TraceScale.NORMALIZED, metadata=metadata)
    array = np.asarray(values, dtype=np.float64)
    scaled = (array - scaler.x_min) * scaler.slope + scaler.new_min
    return float(scaled) if np.ndim(values) == 0 else scaled


def invert_scaler(scaler: Scaler, values: Values) -> Values:
    """Exact inverse of apply_scaler"""
    if isinstance(values, SignalTrace):
        restored = invert_scaler(scaler, values.samples)
        return values.derive(restored, scale=TraceScale.LINEAR)
    array = np.asarray(values, dtype=np.float64)
    restored = (array - scaler.new_min) / scaler.slope + scaler.x_min
    return float(restored) if np.ndim(values) == 0 else restored
