"""
Time correlation, coherence time and prediction horizons
"""
import math
from typing import Iterable, Optional

import numpy as np
from scipy import signal as scipy_signal

from app.config import config
from app.exceptions import CoherenceError, DegenerateRangeError
from app.logger import logger
from app.models import AcfCurve, HorizonRow, HorizonTable, SignalTrace


def default_max_lag(length: int) -> int:
    return max(1, min(length // 4, 1000))


def autocorrelation(trace: SignalTrace, max_lag: Optional[int] = None) -> AcfCurve:
    """Biased sample ACF of the mean-removed trace, normalized to 1 at lag 0"""
    n = len(trace)
    max_lag = default_max_lag(n) if max_lag is None else max_lag
    if not 0 < max_lag < n:
        raise ValueError(f"max_lag must be in [1, {n - 1}], got {max_lag}")

    centered = trace.samples - trace.samples.mean()
    energy = float(np.dot(centered, centered))
    if energy <= 0.0 or energy <= 1e-24 * n * float(np.max(np.abs(trace.samples))) ** 2:
        raise DegenerateRangeError("constant trace has no autocorrelation (zero variance)")

    full = scipy_signal.correlate(centered, centered, mode="full", method="fft")
    values = full[n - 1:n + max_lag] / energy
    values[0] = 1.0
    return AcfCurve(values=np.clip(values, -1.0, 1.0), sample_rate_hz=trace.sample_rate_hz)


def coherence_time(acf: AcfCurve, threshold: float) -> float:
    """
    First downward crossing of `threshold`, linearly interpolated, in seconds.
    """
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    below = np.flatnonzero(acf.values < threshold)
    if below.size == 0:
        raise CoherenceError(
            f"ACF stays above {threshold} up to lag {acf.max_lag}; increase max_lag"
        )
    k = int(below[0])
    upper, lower = acf.values[k - 1], acf.values[k]
    lag = (k - 1) + (upper - threshold) / (upper - lower)
    return float(lag / acf.sample_rate_hz)


def output_length_for(coherence_time_s: float, sample_rate_hz: float) -> int:
    """Samples within the coherence time, rounded half up, at least 1"""
    if coherence_time_s < 0 or sample_rate_hz <= 0:
        raise ValueError("coherence time and sample rate must be positive")
    return max(1, int(math.floor(coherence_time_s * sample_rate_hz + 0.5)))


def horizon_table(
    trace: SignalTrace,
    thresholds: Iterable[float] = config.CORRELATION_THRESHOLDS,
    max_lag: Optional[int] = None,
) -> HorizonTable:
    acf = autocorrelation(trace, max_lag)
    rows = []
    for threshold in thresholds:
        tau = coherence_time(acf, threshold)
        rows.append(HorizonRow(
            threshold=threshold,
            coherence_time_s=tau,
            output_length_samples=output_length_for(tau, trace.sample_rate_hz),
        ))
    logger.info(
        "Horizon table (max_lag={}): {}".format(
            acf.max_lag, ", ".join(f"{r.threshold}->{r.output_length_samples}" for r in rows)
        )
    )
    return HorizonTable(rows=rows, sample_rate_hz=trace.sample_rate_hz, max_lag=acf.max_lag)


def horizons_from_coherence_times(coherence_times_s: Iterable[float], sample_rate_hz: float) -> list:
    """Output lengths for published coherence times"""
    return [output_length_for(tau, sample_rate_hz) for tau in coherence_times_s]
