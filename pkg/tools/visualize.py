"""
Data visualization tools
"""
from pathlib import Path
from typing import Any, Dict, Optional, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from app.logger import logger  # noqa: E402
from app.models import AcfCurve  # noqa: E402
from tools.signal_source import theoretical_acf_clarke  # noqa: E402


def _save(fig, path: Union[str, Path], dpi: int = 100) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi, bbox_inches="tight", facecolor="white", edgecolor="none")
    plt.close(fig)
    return path


def plot_error_curves(long_df: pd.DataFrame, path: Union[str, Path], metric: str = "rmse") -> Path:
    """One line per (series, layers) of median error against the swept axis"""
    fig, ax = plt.subplots(figsize=(8, 5))
    x_name = str(long_df["x_name"].iloc[0]) if len(long_df) else "x"
    medians = long_df.groupby(["environment", "series", "layers", "x"], as_index=False)[metric].median()
    for (environment, series, layers), group in medians.groupby(["environment", "series", "layers"]):
        group = group.sort_values("x")
        ax.plot(group["x"], group[metric], marker="o", label=f"{series} ({layers}L, {environment})")
    ax.set_xlabel(x_name)
    ax.set_ylabel(metric.upper())
    ax.set_title(f"{metric.upper()} vs {x_name}")
    ax.grid(alpha=0.3)
    ax.legend(fontsize="small")
    return _save(fig, path)


def plot_prediction_overlay(predictions: pd.DataFrame, path: Union[str, Path], limit: int = 400) -> Path:
    """Measured normalised series against the step-1 forecasts of each family"""
    fig, ax = plt.subplots(figsize=(10, 4))
    head = predictions[predictions["step"] == 1].sort_values("time_index")
    measured = head.drop_duplicates("time_index").head(limit)
    ax.plot(measured["time_index"], measured["measured"], color="black", linewidth=1.5, label="measured")
    for family, group in head.groupby("family"):
        group = group.head(limit)
        ax.plot(group["time_index"], group["predicted"], linewidth=1, alpha=0.8, label=str(family))
    ax.set_xlabel("sample")
    ax.set_ylabel("normalised power")
    ax.legend(fontsize="small")
    return _save(fig, path)


def plot_acf(acf: AcfCurve, path: Union[str, Path], doppler_hz: Optional[float] = None) -> Path:
    """Estimated ACF, with the Clarke reference J0 curve when the Doppler is known"""
    fig, ax = plt.subplots(figsize=(8, 4))
    lags_ms = acf.lags_s * 1e3
    ax.plot(lags_ms, acf.values, label="estimated")
    if doppler_hz is not None:
        reference = theoretical_acf_clarke(doppler_hz, acf.lags_s) ** 2
        ax.plot(lags_ms, reference, linestyle="--", label=f"J0^2, fD={doppler_hz:g} Hz")
    ax.axhline(0.0, color="grey", linewidth=0.5)
    ax.set_xlabel("lag (ms)")
    ax.set_ylabel("autocorrelation")
    ax.legend(fontsize="small")
    return _save(fig, path)


def visualize(params: Dict[str, Any]) -> Dict[str, Any]:
    """
    Create a chart file

    Args:
        params: {
            "chart_type": str - "errors", "predictions" or "acf"
            "data": DataFrame or AcfCurve
            "path": str - output PNG path
            "metric": str - "rmse" or "mae" for error charts
            "doppler_hz": float - reference curve for ACF charts
        }
    """
    chart_type = params.get("chart_type", "errors")
    try:
        data = params.get("data")
        path = params.get("path")
        if data is None or path is None:
            raise ValueError("data and path parameters are required")
        if chart_type == "errors":
            written = plot_error_curves(data, path, params.get("metric", "rmse"))
        elif chart_type == "predictions":
            written = plot_prediction_overlay(data, path)
        elif chart_type == "acf":
            written = plot_acf(data, path, params.get("doppler_hz"))
        else:
            raise ValueError(f"Unsupported chart type: {chart_type}")
        logger.info(f"Wrote {chart_type} chart to {written}")
        return {"status": "success", "data": str(written), "metadata": {"chart_type": chart_type}}
    except Exception as e:
        plt.close("all")
        logger.error(f"Visualization failed: {str(e)}")
        return {"status": "error", "error": str(e), "data": None}