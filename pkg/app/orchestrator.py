"""
Main Orchestrator - runs the benchmark pipeline for single experiments and sweeps
"""
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
import pandas as pd

from app.exceptions import StageError
from app.logger import experiment_logger_info, log_experiment_result, logger
from app.models import (
    EvalReport, ExperimentConfig, ExperimentStep, Family, LinearSolver, ModelDescriptor,
    ResultRow, RunStatus, Scaler, SignalTrace, SourceConfig, SourceKind, Split, SweepGrid,
    SweepPlan, TrainReport, WindowedDataset,
)
from planner.grid_planner import grid_planner
from predictors.builder import Model, build_model
from predictors.linear import fit_linear_closed_form
from predictors.trainer import train
from tools.evaluation import aggregate_report, to_physical_units
from tools.preprocess import apply_scaler, downsample_mean, extract_small_scale, fit_minmax
from tools.signal_source import apply_shadowing, load_trace_csv, simulate_clarke
from tools.verifier import verifier_tool
from tools.windowing import build_dataset, chronological_split

PREDICTION_WINDOWS = 40


@dataclass
class PreparedData:
    """Preprocessed trace, its normalised split segments and the train-fitted scaler"""
    trace: SignalTrace
    scaler: Scaler
    segments: Tuple[SignalTrace, SignalTrace, SignalTrace]
    datasets: Dict[Tuple[int, int, int], WindowedDataset] = field(default_factory=dict)


@dataclass
class RunOutcome:
    row: ResultRow
    model: Optional[Model] = None
    history: Optional[TrainReport] = None
    report: Optional[EvalReport] = None
    predictions: Optional[pd.DataFrame] = None


@contextmanager
def stage(name: str, **details) -> Iterator[None]:
    """Tag any failure inside the block with the pipeline stage name"""
    start = time.time()
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        experiment_logger_info(name, "failed", error=f"{type(exc).__name__}: {exc}", **details)
        raise StageError(name, exc) from exc
    experiment_logger_info(name, "success", elapsed=f"{time.time() - start:.3f}s", **details)


def _row_fields(config: ExperimentConfig, seed: int) -> dict:
    descriptor = config.model
    return {
        "environment": config.environment,
        "family": descriptor.family,
        "layers": descriptor.layers,
        "hidden_units": descriptor.units if descriptor.family in (Family.FFN, Family.LSTM, Family.GRU) else 0,
        "num_kernels": descriptor.kernels if descriptor.family == Family.CNN1D else 0,
        "kernel_size": descriptor.kernel_size if descriptor.family == Family.CNN1D else 0,
        "input_len": descriptor.input_len,
        "output_len": descriptor.output_len,
        "seed": seed,
    }


def failed_row(config: ExperimentConfig, seed: int, error: str) -> ResultRow:
    return ResultRow(**_row_fields(config, seed), status=RunStatus.FAILED, error=error)


def prediction_frame(model: Model, dataset: WindowedDataset, seed: int, limit: int = PREDICTION_WINDOWS) -> pd.DataFrame:
    """Forecast vs measured values of the first test windows, one line per (window, step)"""
    inputs, targets = dataset.subset(Split.TEST)
    inputs, targets = inputs[:limit], targets[:limit]
    predicted = model.predict(inputs)
    t_y = targets.shape[1]
    windows, steps = np.meshgrid(np.arange(targets.shape[0]), np.arange(1, t_y + 1), indexing="ij")
    return pd.DataFrame({
        "family": model.descriptor.family.value,
        "seed": seed,
        "window": windows.ravel(),
        "step": steps.ravel(),
        "time_index": (windows * t_y + steps - 1).ravel(),
        "measured": targets.ravel(),
        "predicted": predicted.ravel(),
    })


class ExperimentRunner:
    """Central orchestration engine for benchmark runs"""

    def __init__(self):
        self._traces: Dict[str, SignalTrace] = {}
        self._prepared: Dict[str, PreparedData] = {}

    # -------------------------------------------------------- data stages

    def load_source(self, source: SourceConfig, label: str = "") -> SignalTrace:
        """Raw linear trace of a source, cached per source configuration"""
        key = source.model_dump_json()
        if key in self._traces:
            return self._traces[key]
        with stage("signal_source", kind=source.kind.value):
            if source.kind == SourceKind.CSV:
                trace = load_trace_csv(source.csv_path, source.column, source.sample_rate_hz, source.unit, label)
            else:
                trace = simulate_clarke(source.clarke, label=f"{label or 'synthetic'}-synthetic")
            if source.shadow is not None:
                trace = apply_shadowing(trace, source.shadow)
        self._traces[key] = trace
        return trace

    def prepare(self, config: ExperimentConfig) -> PreparedData:
        """Downsample, remove the local mean, split and normalise with train-split statistics"""
        key = config.source.model_dump_json() + config.preprocess.model_dump_json() + str(config.split_fractions)
        if key in self._prepared:
            return self._prepared[key]
        raw = self.load_source(config.source, config.environment)
        pre = config.preprocess
        with stage("preprocess", samples=len(raw)):
            trace = downsample_mean(raw, pre.downsample_factor)
            if pre.small_scale:
                trace = extract_small_scale(trace, pre.local_mean_window)
            segments = chronological_split(trace, config.split_fractions)
            scaler = fit_minmax(segments[0], pre.new_min, pre.new_max)
            normalised = tuple(apply_scaler(scaler, segment) for segment in segments)
        prepared = PreparedData(trace=trace, scaler=scaler, segments=normalised)
        self._prepared[key] = prepared
        return prepared

    def dataset(self, config: ExperimentConfig, prepared: Optional[PreparedData] = None) -> WindowedDataset:
        prepared = prepared or self.prepare(config)
        window = config.window
        key = (window.input_len, window.output_len, window.stride)
        if key not in prepared.datasets:
            # one windowed dataset at a time per trace
            prepared.datasets.clear()
            with stage("windowing", input_len=window.input_len, output_len=window.output_len):
                prepared.datasets[key] = build_dataset(prepared.segments, window)
        return prepared.datasets[key]

    # -------------------------------------------------------- model stages

    def fit(self, config: ExperimentConfig, dataset: WindowedDataset, seed: int) -> Tuple[Model, TrainReport]:
        train_config = config.train.model_copy(update={"seed": seed})
        descriptor: ModelDescriptor = config.model
        with stage("training", family=descriptor.family.value, seed=seed):
            if descriptor.family == Family.LINEAR and train_config.linear_solver == LinearSolver.CLOSED_FORM:
                start = time.perf_counter()
                model = fit_linear_closed_form(dataset)
                return model, TrainReport(wall_time_s=time.perf_counter() - start)
            model = build_model(descriptor, seed, train_config.dropout_rate)
            return train(model, dataset, train_config)

    def evaluate(self, config: ExperimentConfig, model: Model, dataset: WindowedDataset, seed: int,
                 history: Optional[TrainReport] = None, scaler: Optional[Scaler] = None) -> RunOutcome:
        with stage("evaluation", family=model.descriptor.family.value, seed=seed):
            inputs, targets = dataset.subset(Split.TEST)
            report = aggregate_report(model.predict(inputs), targets, model.descriptor, seed, history)
            predictions = prediction_frame(model, dataset, seed)
            # errors in the unit of the series before min-max scaling
            physical = to_physical_units(report, scaler) if scaler is not None else None
        history = history or TrainReport()
        row = ResultRow(
            **_row_fields(config, seed),
            rmse_mean=report.rmse_mean,
            mae_mean=report.mae_mean,
            rmse_mean_physical=physical.rmse_mean if physical is not None else float("nan"),
            mae_mean_physical=physical.mae_mean if physical is not None else float("nan"),
            rmse_per_step=report.rmse_per_step,
            mae_per_step=report.mae_per_step,
            num_test_examples=report.num_test_examples,
            train_time_s=history.wall_time_s,
            stopped_epoch=history.stopped_epoch,
            best_epoch=history.best_epoch,
        )
        verification = verifier_tool.verify_row(row)
        if not verification.passed:
            row = row.model_copy(update={
                "status": RunStatus.FAILED,
                "error": "[verification] " + "; ".join(verification.issues),
            })
        return RunOutcome(row=row, model=model, history=history, report=report, predictions=predictions)

    # ---------------------------------------------------------- operations

    def run_seed(self, config: ExperimentConfig, seed: int) -> RunOutcome:
        try:
            prepared = self.prepare(config)
            dataset = self.dataset(config, prepared)
            model, history = self.fit(config, dataset, seed)
            outcome = self.evaluate(config, model, dataset, seed, history, prepared.scaler)
        except StageError as exc:
            logger.error(f"Experiment {config.model.family.value} T_x={config.window.input_len} "
                         f"T_y={config.window.output_len} seed={seed} failed: {exc}")
            outcome = RunOutcome(row=failed_row(config, seed, str(exc)))
        log_experiment_result(outcome.row.model_dump(mode="json"))
        return outcome

    def run_outcomes(self, config: ExperimentConfig) -> List[RunOutcome]:
        """Full pipeline once per seed, with models and predictions kept"""
        return [self.run_seed(config, seed) for seed in config.seeds]

    def run_experiment(self, config: ExperimentConfig) -> List[ResultRow]:
        """One ResultRow per seed; failures become rows with status 'failed'"""
        return [outcome.row for outcome in self.run_outcomes(config)]

    def execute_plan(self, plan: SweepPlan, jobs: int = 1) -> List[ResultRow]:
        """Run every step; rows come back in plan order whatever the worker count"""
        logger.info(f"Executing plan {plan.plan_id} with {len(plan.steps)} steps on {jobs} worker(s)")
        start = time.time()
        experiments = [step.experiment for step in plan.steps]
        if jobs > 1 and len(experiments) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_run_in_worker, experiments))
        else:
            results = []
            for step in plan.steps:
                step.status = RunStatus.RUNNING
                results.append(self._timed(step))

        rows: List[ResultRow] = []
        for step, (step_rows, elapsed) in zip(plan.steps, results):
            self._finish(step, step_rows, elapsed)
            rows.extend(step_rows)
        failed = sum(1 for row in rows if not row.ok)
        logger.info(f"Plan {plan.plan_id} finished in {time.time() - start:.2f}s: "
                    f"{len(rows) - failed} succeeded, {failed} failed")
        return rows

    def _timed(self, step: ExperimentStep) -> Tuple[List[ResultRow], float]:
        step_start = time.time()
        return self.run_experiment(step.experiment), time.time() - step_start

    @staticmethod
    def _finish(step: ExperimentStep, rows: List[ResultRow], elapsed: float):
        step.rows = rows
        step.execution_time = elapsed
        errors = [row.error for row in rows if not row.ok]
        step.status = RunStatus.FAILED if errors else RunStatus.SUCCESS
        step.error = errors[0] if errors else None

    def sweep(self, base: ExperimentConfig, grid: SweepGrid, jobs: int = 1) -> List[ResultRow]:
        """Cartesian product of the grid over the base experiment"""
        return self.execute_plan(grid_planner.generate_plan(base, grid), jobs)

    def profile_training(self, base: ExperimentConfig, output_lens: Optional[List[int]] = None) -> List[ResultRow]:
        """Training wall-clock of LSTM and GRU per horizon, run one at a time"""
        return self.execute_plan(grid_planner.profile_plan(base, output_lens), jobs=1)


_worker_runner: Optional[ExperimentRunner] = None


def _run_in_worker(experiment: ExperimentConfig) -> Tuple[List[ResultRow], float]:
    global _worker_runner
    if _worker_runner is None:
        _worker_runner = ExperimentRunner()
    start = time.time()
    return _worker_runner.run_experiment(experiment), time.time() - start


# Global runner instance
runner = ExperimentRunner()
