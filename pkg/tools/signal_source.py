"""
Fading trace generation and ingestion
"""
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd
from scipy import signal as scipy_signal
from scipy import special

from app.exceptions import TraceError
from app.logger import logger
from app.models import ClarkeConfig, PowerUnit, ShadowConfig, SignalTrace, TraceScale


def clarke_gain(config: ClarkeConfig) -> np.ndarray:
    """
    Complex fading gain from a sum of sinusoids (Clarke/Jakes isotropic scattering).

    Arrival angles are uniformly spaced with a random rotation so that no two
    sinusoids share a Doppler frequency; in-phase and quadrature branches get
    independent random phases. Mean power is 1.
    """
    rng = np.random.default_rng(config.seed)
    n = config.num_sinusoids
    t = np.arange(config.num_samples) / config.sample_rate_hz

    rotation = rng.uniform(-np.pi, np.pi)
    alpha = (2 * np.pi * np.arange(1, n + 1) - np.pi + rotation) / n
    phases_i = rng.uniform(-np.pi, np.pi, n)
    phases_q = rng.uniform(-np.pi, np.pi, n)
    omega = 2 * np.pi * config.doppler_hz * np.cos(alpha)

    in_phase = np.zeros_like(t)
    quadrature = np.zeros_like(t)
    for w, phi_i, phi_q in zip(omega, phases_i, phases_q):
        in_phase += np.cos(w * t + phi_i)
        quadrature += np.cos(w * t + phi_q)
    scattered = np.sqrt(2.0 / n) * (in_phase + 1j * quadrature) / np.sqrt(2.0)

    if config.rician_k == 0:
        return scattered

    k = config.rician_k
    los_angle = rng.uniform(-np.pi, np.pi)
    los_phase = rng.uniform(-np.pi, np.pi)
    los = np.exp(1j * (2 * np.pi * config.doppler_hz * np.cos(los_angle) * t + los_phase))
    return np.sqrt(k / (k + 1)) * los + np.sqrt(1 / (k + 1)) * scattered


def simulate_clarke(config: ClarkeConfig, label: str = "synthetic") -> SignalTrace:
    """Linear power trace |g|^2 of a simulated fading channel"""
    logger.info(
        f"Simulating fading trace: fD={config.doppler_hz} Hz, K={config.rician_k}, "
        f"{config.num_samples} samples at {config.sample_rate_hz} Hz"
    )
    power = np.abs(clarke_gain(config)) ** 2
    # A deep fade can underflow to exactly zero power
    power = np.maximum(power, np.finfo(np.float64).tiny)
    return SignalTrace(
        samples=power,
        sample_rate_hz=config.sample_rate_hz,
        label=label,
        metadata={"doppler_hz": config.doppler_hz, "rician_k": config.rician_k, "seed": config.seed},
    )


def theoretical_acf_clarke(doppler_hz: float, lag_s: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Normalized ACF of one quadrature branch: J0(2*pi*fD*tau); scalar or per-lag array"""
    if not doppler_hz > 0:
        raise ValueError("doppler_hz must be positive")
    lags = np.asarray(lag_s, dtype=np.float64)
    if np.any(lags < 0):
        raise ValueError("lag_s must be non-negative")
    values = special.j0(2 * np.pi * doppler_hz * lags)
    return float(values) if values.ndim == 0 else values


def shadowing_gain_db(num_samples: int, config: ShadowConfig) -> np.ndarray:
    """First-order autoregressive log-normal shadowing, in dB"""
    rng = np.random.default_rng(config.seed)
    rho = 1.0 - 1.0 / config.correlation_length_samples
    drive = rng.standard_normal(num_samples) * config.sigma_db * np.sqrt(1.0 - rho ** 2)
    # stationary start
    drive[0] = rng.standard_normal() * config.sigma_db if num_samples else 0.0
    return scipy_signal.lfilter([1.0], [1.0, -rho], drive)


def apply_shadowing(trace: SignalTrace, config: ShadowConfig) -> SignalTrace:
    """Multiply a linear trace by correlated log-normal shadowing"""
    if config.sigma_db == 0:
        return trace
    gain_db = shadowing_gain_db(len(trace), config)
    logger.info(f"Applying shadowing: sigma={config.sigma_db} dB, L={config.correlation_length_samples}")
    metadata = dict(trace.metadata, shadow_sigma_db=config.sigma_db)
    return trace.derive(trace.samples * 10.0 ** (gain_db / 10.0), metadata=metadata)


def to_db(trace: SignalTrace) -> np.ndarray:
    """Presentation helper: linear power to dB"""
    return 10.0 * np.log10(trace.samples)


def from_db(values_db: np.ndarray) -> np.ndarray:
    return 10.0 ** (np.asarray(values_db, dtype=np.float64) / 10.0)


def load_trace_csv(
    path: Union[str, Path],
    column: str,
    sample_rate_hz: float,
    unit: PowerUnit = PowerUnit.LINEAR,
    label: str = "",
) -> SignalTrace:
    """
    Load one column of a UTF-8 CSV file as a trace, in file row order.

    Row numbers in errors count data rows from 1 (the header is not a row).
    """
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"File not found: {file_path}")

    logger.info(f"Loading trace column '{column}' from {file_path}")
    try:
        df = pd.read_csv(file_path, encoding="utf-8", dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise TraceError(f"empty trace: {file_path} has no header or rows")

    if column not in df.columns:
        raise TraceError(f"column '{column}' not found in {file_path} (columns: {list(df.columns)})")
    if df.empty:
        raise TraceError(f"empty trace: {file_path} has a header but no rows")

    values = pd.to_numeric(df[column].str.strip(), errors="coerce").to_numpy(dtype=np.float64)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        row = int(bad[0]) + 1
        raise TraceError(f"non-numeric or non-finite value {df[column].iloc[bad[0]]!r} at row {row}")

    if PowerUnit(unit) == PowerUnit.DBM:
        values = from_db(values)
    non_positive = np.flatnonzero(values <= 0)
    if non_positive.size:
        raise TraceError(f"linear power must be positive, got {values[non_positive[0]]} at row {non_positive[0] + 1}")

    return SignalTrace(
        samples=values,
        sample_rate_hz=sample_rate_hz,
        label=label or file_path.stem,
        scale=TraceScale.LINEAR,
        metadata={"source": str(file_path), "column": column, "unit": PowerUnit(unit).value},
    )
