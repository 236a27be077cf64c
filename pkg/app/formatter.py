"""
Report writer: result rows and pipeline artefacts to CSV files
"""
import json
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from app.logger import logger
from app.models import AcfCurve, HorizonTable, ResultRow, TrainReport

MAIN_COLUMNS = [
    "environment", "family", "layers", "hidden_units", "num_kernels", "kernel_size",
    "input_len", "output_len", "seed", "status", "rmse_mean", "mae_mean",
    "rmse_mean_physical", "mae_mean_physical",
    "train_time_s", "stopped_epoch", "best_epoch",
]
PER_STEP_COLUMNS = ["environment", "family", "layers", "input_len", "output_len", "seed", "step", "rmse", "mae"]
LONG_COLUMNS = ["environment", "series", "layers", "x_name", "x", "rmse", "mae", "seed"]
CONFIG_KEYS = [
    "environment", "family", "layers", "hidden_units", "num_kernels", "kernel_size", "input_len", "output_len",
]
TIMING_COLUMNS = ("train_time_s",)

PathLike = Union[str, Path]


def _frame(rows: Sequence[ResultRow]) -> pd.DataFrame:
    records = []
    for row in rows:
        record = row.model_dump(mode="json")
        record["family"] = row.family.value
        record["status"] = row.status.value
        records.append(record)
    return pd.DataFrame.from_records(records)


def sweep_axis(rows: Sequence[ResultRow]) -> str:
    """input_len unless only the output length varies across rows"""
    input_lens = {row.input_len for row in rows}
    output_lens = {row.output_len for row in rows}
    return "output_len" if len(input_lens) == 1 and len(output_lens) > 1 else "input_len"


class ReportWriter:
    """Writes benchmark results in the documented CSV schemas"""

    def __init__(self, out_dir: PathLike):
        self.out_dir = Path(out_dir)

    def _path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / name

    def write_frame(self, df: pd.DataFrame, name: str) -> Path:
        path = self._path(name)
        df.to_csv(path, index=False, lineterminator="\n")
        logger.info(f"Wrote {len(df)} rows to {path}")
        return path

    # ------------------------------------------------------------ results

    def main_table(self, rows: Sequence[ResultRow]) -> pd.DataFrame:
        return _frame(rows).reindex(columns=MAIN_COLUMNS)

    def per_step_table(self, rows: Sequence[ResultRow]) -> pd.DataFrame:
        records = [
            {
                "environment": row.environment, "family": row.family.value, "layers": row.layers,
                "input_len": row.input_len, "output_len": row.output_len, "seed": row.seed,
                "step": step, "rmse": rmse, "mae": mae,
            }
            for row in rows if row.ok
            for step, (rmse, mae) in enumerate(zip(row.rmse_per_step, row.mae_per_step), start=1)
        ]
        return pd.DataFrame.from_records(records, columns=PER_STEP_COLUMNS)

    def long_table(self, rows: Sequence[ResultRow]) -> pd.DataFrame:
        """Plot-ready: one line per successful row, x on the swept axis, series = family"""
        axis = sweep_axis(rows)
        records = [
            {
                "environment": row.environment, "series": row.family.value, "layers": row.layers,
                "x_name": axis, "x": getattr(row, axis), "rmse": row.rmse_mean, "mae": row.mae_mean,
                "seed": row.seed,
            }
            for row in rows if row.ok
        ]
        return pd.DataFrame.from_records(records, columns=LONG_COLUMNS)

    def summary_table(self, rows: Sequence[ResultRow]) -> pd.DataFrame:
        """Per-configuration medians across seeds"""
        ok = self.main_table([row for row in rows if row.ok])
        if ok.empty:
            return pd.DataFrame(columns=CONFIG_KEYS + ["runs", "rmse_median", "mae_median", "train_time_median_s"])
        grouped = ok.groupby(CONFIG_KEYS, sort=False)
        summary = grouped.agg(
            runs=("seed", "count"),
            rmse_median=("rmse_mean", "median"),
            mae_median=("mae_mean", "median"),
            train_time_median_s=("train_time_s", "median"),
        )
        return summary.reset_index()

    def write_results(self, rows: Sequence[ResultRow], fmt: str = "csv") -> Dict[str, Path]:
        if not rows:
            raise ValueError("no result rows to write")
        written = {
            "results": self.write_frame(self.main_table(rows), "results.csv"),
            "per_step": self.write_frame(self.per_step_table(rows), "per_step.csv"),
            "long": self.write_frame(self.long_table(rows), "long.csv"),
            "summary": self.write_frame(self.summary_table(rows), "summary.csv"),
        }
        if fmt == "json":
            path = self._path("results.json")
            path.write_text(json.dumps([row.model_dump(mode="json") for row in rows], indent=2))
            written["json"] = path
        elif fmt != "csv":
            raise ValueError(f"Unsupported report format: {fmt}")
        return written

    # ---------------------------------------------------------- artefacts

    def write_horizon_table(self, table: HorizonTable, name: str = "horizons.csv") -> Path:
        df = pd.DataFrame({
            "threshold": [row.threshold for row in table.rows],
            "coherence_ms": [row.coherence_time_s * 1e3 for row in table.rows],
            "output_samples": [row.output_length_samples for row in table.rows],
        })
        return self.write_frame(df, name)

    def write_acf(self, acf: AcfCurve, name: str = "acf.csv") -> Path:
        df = pd.DataFrame({"lag": np.arange(acf.values.size), "lag_ms": acf.lags_s * 1e3, "acf": acf.values})
        return self.write_frame(df, name)

    def write_series(self, columns: Dict[str, np.ndarray], sample_rate_hz: float, name: str) -> Path:
        """Equal-length series side by side with a time column"""
        length = min(len(values) for values in columns.values())
        df = pd.DataFrame({"t_s": np.arange(length) / sample_rate_hz})
        for key, values in columns.items():
            df[key] = np.asarray(values)[:length]
        return self.write_frame(df, name)

    def write_history(self, history: TrainReport, name: str = "history.csv") -> Path:
        df = pd.DataFrame({
            "epoch": np.arange(1, len(history.train_losses) + 1),
            "train_mse": history.train_losses,
            "val_mse": history.val_losses,
        })
        return self.write_frame(df, name)

    def write_predictions(self, frames: List[pd.DataFrame], name: str = "predictions.csv") -> Optional[Path]:
        frames = [frame for frame in frames if frame is not None and not frame.empty]
        if not frames:
            return None
        return self.write_frame(pd.concat(frames, ignore_index=True), name)


def emit_report(rows: Sequence[ResultRow], out_dir: PathLike, fmt: str = "csv",
                plots: bool = False) -> Dict[str, Path]:
    """Main, per-step, long-format and summary CSVs (plus optional charts)"""
    writer = ReportWriter(out_dir)
    written = writer.write_results(rows, fmt)
    if plots and any(row.ok for row in rows):
        from tools.visualize import visualize

        long_df = writer.long_table(rows)
        for metric in ("rmse", "mae"):
            result = visualize({
                "chart_type": "errors", "data": long_df, "metric": metric,
                "path": writer.out_dir / f"{metric}_vs_{long_df['x_name'].iloc[0]}.png",
            })
            if result["status"] == "success":
                written[f"plot_{metric}"] = Path(result["data"])
    return written


def strip_timing(df: pd.DataFrame) -> pd.DataFrame:
    """Result table without wall-clock columns, for run-to-run comparison"""
    return df.drop(columns=[c for c in TIMING_COLUMNS if c in df.columns])
