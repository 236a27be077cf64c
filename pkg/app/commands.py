"""
Command registry and dispatcher for the CLI subcommands
"""
from pathlib import Path
from typing import Any, Callable, Dict, List

import pandas as pd

from app.config import config
from app.formatter import ReportWriter, emit_report
from app.logger import logger
from app.models import Command, ExperimentConfig, ResultRow, SourceKind
from app.orchestrator import RunOutcome, runner
from planner.grid_planner import grid_planner
from predictors.builder import load_model, save_model
from tools.coherence import autocorrelation, horizon_table, horizons_from_coherence_times
from tools.preprocess import apply_scaler, downsample_mean, local_mean
from tools.signal_source import to_db

Params = Dict[str, Any]


def _experiment(params: Params) -> ExperimentConfig:
    return grid_planner.experiment_from_sections(params["sections"], params.get("seed"))


def _rows_result(rows: List[ResultRow], written: Dict[str, Path]) -> Dict[str, Any]:
    failed = [row for row in rows if not row.ok]
    return {
        "status": "success" if not failed else "failed",
        "data": {"rows": len(rows), "failed": len(failed)},
        "files": {key: str(path) for key, path in written.items()},
        "all_succeeded": not failed,
    }


def simulate(params: Params) -> Dict[str, Any]:
    """Generate or load the raw linear trace and write it as CSV"""
    experiment = _experiment(params)
    writer = ReportWriter(params["out_dir"])
    trace = runner.load_source(experiment.source, experiment.environment)
    path = writer.write_series(
        {"power_linear": trace.samples, "power_db": to_db(trace)}, trace.sample_rate_hz, "trace.csv",
    )
    return {
        "status": "success",
        "data": {"samples": len(trace), "sample_rate_hz": trace.sample_rate_hz,
                 "mean_power": float(trace.samples.mean())},
        "files": {"trace": str(path)},
    }


def preprocess(params: Params) -> Dict[str, Any]:
    """Downsampled RSS, local mean, small-scale fading and normalised series"""
    experiment = _experiment(params)
    writer = ReportWriter(params["out_dir"])
    raw = runner.load_source(experiment.source, experiment.environment)
    prepared = runner.prepare(experiment)
    pre = experiment.preprocess
    downsampled = downsample_mean(raw, pre.downsample_factor)
    columns = {"rss_linear": downsampled.samples, "rss_db": to_db(downsampled)}
    if pre.small_scale:
        columns["local_mean"] = local_mean(downsampled, pre.local_mean_window).samples
        columns["small_scale"] = prepared.trace.samples
    columns["normalized"] = apply_scaler(prepared.scaler, prepared.trace.samples)
    path = writer.write_series(columns, downsampled.sample_rate_hz, "preprocess.csv")
    return {
        "status": "success",
        "data": {"samples": len(prepared.trace), "scaler": prepared.scaler.model_dump()},
        "files": {"series": str(path)},
    }


def coherence(params: Params) -> Dict[str, Any]:
    """ACF of the preprocessed trace and the horizon table derived from it"""
    experiment = _experiment(params)
    writer = ReportWriter(params["out_dir"])
    trace = runner.prepare(experiment).trace
    acf = autocorrelation(trace)
    table = horizon_table(trace, config.CORRELATION_THRESHOLDS, acf.max_lag)
    files = {"horizons": str(writer.write_horizon_table(table)), "acf": str(writer.write_acf(acf))}

    published = config.preset(experiment.environment).get("coherence_times_s")
    if published:
        reference = horizons_from_coherence_times(published, trace.sample_rate_hz)
        logger.info(f"Published horizons for {experiment.environment}: {reference}; "
                    f"measured: {table.output_lengths}")
    if params.get("plots"):
        from tools.visualize import visualize

        doppler = experiment.source.clarke.doppler_hz if experiment.source.kind == SourceKind.SIMULATE else None
        chart = visualize({"chart_type": "acf", "data": acf, "doppler_hz": doppler,
                           "path": writer.out_dir / "acf.png"})
        if chart["status"] == "success":
            files["acf_plot"] = chart["data"]
    return {
        "status": "success",
        "data": {"max_lag": acf.max_lag, "output_lengths": table.output_lengths},
        "files": files,
    }


def _write_outcomes(outcomes: List[RunOutcome], params: Params) -> Dict[str, Path]:
    writer = ReportWriter(params["out_dir"])
    rows = [outcome.row for outcome in outcomes]
    written = emit_report(rows, writer.out_dir, params.get("fmt", "csv"), params.get("plots", False))
    for outcome in outcomes:
        if outcome.history is not None and outcome.history.train_losses:
            written[f"history_{outcome.row.seed}"] = writer.write_history(
                outcome.history, f"history_seed{outcome.row.seed}.csv"
            )
    predictions = writer.write_predictions([outcome.predictions for outcome in outcomes])
    if predictions is not None:
        written["predictions"] = predictions
        if params.get("plots"):
            from tools.visualize import visualize

            chart = visualize({"chart_type": "predictions", "data": pd.read_csv(predictions),
                               "path": writer.out_dir / "predictions.png"})
            if chart["status"] == "success":
                written["predictions_plot"] = Path(chart["data"])
    return written


def train(params: Params) -> Dict[str, Any]:
    """Run the configured experiment once per seed and keep the trained models"""
    experiment = _experiment(params)
    outcomes = runner.run_outcomes(experiment)
    written = _write_outcomes(outcomes, params)
    for outcome in outcomes:
        if outcome.model is not None:
            name = f"model_{experiment.model.family.value}_seed{outcome.row.seed}.json"
            written[f"model_{outcome.row.seed}"] = save_model(outcome.model, Path(params["out_dir"]) / name)
    return _rows_result([outcome.row for outcome in outcomes], written)


def evaluate(params: Params) -> Dict[str, Any]:
    """Score a saved model on the test split of the configured trace"""
    model_path = params.get("model_path")
    if not model_path:
        raise ValueError("evaluate needs --model <path>")
    model = load_model(model_path)
    base = _experiment(params)
    descriptor = model.descriptor
    window = base.window.model_copy(update={"input_len": descriptor.input_len, "output_len": descriptor.output_len})
    experiment = base.model_copy(update={"window": window, "model": descriptor})
    prepared = runner.prepare(experiment)
    dataset = runner.dataset(experiment, prepared)
    outcome = runner.evaluate(experiment, model, dataset, model.seed, scaler=prepared.scaler)
    written = _write_outcomes([outcome], params)
    return _rows_result([outcome.row], written)


def sweep(params: Params) -> Dict[str, Any]:
    """Grid of families x layers x input lengths x output lengths"""
    base = _experiment(params)
    grid = grid_planner.grid_from_sections(params["sections"], base)
    rows = runner.sweep(base, grid, params.get("jobs", config.MAX_JOBS))
    written = emit_report(rows, params["out_dir"], params.get("fmt", "csv"), params.get("plots", False))
    return _rows_result(rows, written)


def profile(params: Params) -> Dict[str, Any]:
    """Training wall-clock of LSTM and GRU across the horizon set"""
    base = _experiment(params)
    output_lens = None
    if params["sections"].get("sweep", {}).get("output_lens"):
        output_lens = grid_planner.grid_from_sections(params["sections"], base).output_lens
    rows = runner.profile_training(base, output_lens)
    written = emit_report(rows, params["out_dir"], params.get("fmt", "csv"))
    writer = ReportWriter(params["out_dir"])
    table = writer.main_table(rows)[["family", "output_len", "seed", "train_time_s"]]
    written["profile"] = writer.write_frame(table, "profile.csv")
    return _rows_result(rows, written)


class CommandRegistry:
    """Registry for all CLI subcommands"""

    def __init__(self):
        self.commands: Dict[Command, Callable[[Params], Dict[str, Any]]] = {
            Command.SIMULATE: simulate,
            Command.PREPROCESS: preprocess,
            Command.COHERENCE: coherence,
            Command.TRAIN: train,
            Command.EVALUATE: evaluate,
            Command.SWEEP: sweep,
            Command.PROFILE: profile,
        }

    def get_command(self, command: Command) -> Callable[[Params], Dict[str, Any]]:
        if command not in self.commands:
            raise ValueError(f"Unknown command: {command}")
        return self.commands[command]

    def execute(self, command: Command, params: Params) -> Dict[str, Any]:
        """Run a command; errors come back as a status dict"""
        try:
            handler = self.get_command(command)
            logger.info(f"Executing command: {command.value}")
            result = handler(params)
            if result.get("status") == "success":
                logger.info(f"Command {command.value} completed successfully")
            else:
                logger.warning(f"Command {command.value} finished with failed rows")
            return result
        except Exception as e:
            logger.error(f"Command {command.value} failed: {str(e)}")
            return {"status": "error", "error": str(e), "command": command.value}

    def list_commands(self) -> Dict[str, str]:
        return {
            command.value: (handler.__doc__ or "No description").strip()
            for command, handler in self.commands.items()
        }


# Global command registry
command_registry = CommandRegistry()
