"""
Data Models and Types for the channel prediction benchmark
"""
import math
import time
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.config import config


class TraceScale(str, Enum):
    LINEAR = "linear"          # linear power or fading gain, strictly positive
    NORMALIZED = "normalized"  # min-max scaled, any sign


class Family(str, Enum):
    LINEAR = "linear"
    FFN = "ffn"
    LSTM = "lstm"
    GRU = "gru"
    CNN1D = "cnn1d"


class Split(str, Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


class SourceKind(str, Enum):
    SIMULATE = "simulate"
    CSV = "csv"


class PowerUnit(str, Enum):
    LINEAR = "linear"
    DBM = "dbm"


class LinearSolver(str, Enum):
    CLOSED_FORM = "closed_form"
    ADAM = "adam"


class RunStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    SUCCESS = "success"
    FAILED = "failed"


class Activation(str, Enum):
    RELU = "relu"
    IDENTITY = "identity"


class Command(str, Enum):
    SIMULATE = "simulate"
    PREPROCESS = "preprocess"
    COHERENCE = "coherence"
    TRAIN = "train"
    EVALUATE = "evaluate"
    SWEEP = "sweep"
    PROFILE = "profile"


ArrayLike = Union[np.ndarray, List[float], Tuple[float, ...]]


def _frozen_array(value: Any) -> np.ndarray:
    array = np.array(value, dtype=np.float64)
    array.setflags(write=False)
    return array


# ---------------------------------------------------------------- signals


class SignalTrace(BaseModel):
    """Uniformly sampled real-valued series with its sampling rate"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    samples: np.ndarray
    sample_rate_hz: float = Field(gt=0, allow_inf_nan=False)
    label: str = ""
    scale: TraceScale = TraceScale.LINEAR
    metadata: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("samples", mode="before")
    @classmethod
    def _as_array(cls, value: Any) -> np.ndarray:
        return _frozen_array(value).ravel()

    @model_validator(mode="after")
    def _check_samples(self) -> "SignalTrace":
        if self.samples.size == 0:
            raise ValueError("empty trace")
        bad = np.flatnonzero(~np.isfinite(self.samples))
        if bad.size:
            raise ValueError(f"non-finite sample at index {bad[0]}")
        if self.scale == TraceScale.LINEAR:
            non_positive = np.flatnonzero(self.samples <= 0)
            if non_positive.size:
                raise ValueError(f"linear trace sample at index {non_positive[0]} is not strictly positive")
        return self

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz

    def derive(self, samples: ArrayLike, **changes: Any) -> "SignalTrace":
        """New trace with the same provenance and replaced samples"""
        fields = {
            "sample_rate_hz": self.sample_rate_hz,
            "label": self.label,
            "scale": self.scale,
            "metadata": dict(self.metadata),
        }
        fields.update(changes)
        return SignalTrace(samples=samples, **fields)


class ClarkeConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    doppler_hz: float = Field(gt=0, allow_inf_nan=False)
    num_sinusoids: int = Field(64, ge=8)
    duration_s: float = Field(gt=0, allow_inf_nan=False)
    sample_rate_hz: float = Field(config.SOURCE_SAMPLE_RATE_HZ, gt=0, allow_inf_nan=False)
    rician_k: float = Field(0.0, ge=0, allow_inf_nan=False)
    seed: int = 0

    @model_validator(mode="after")
    def _check_sampling(self) -> "ClarkeConfig":
        if self.sample_rate_hz <= 2 * self.doppler_hz:
            raise ValueError(
                f"sample_rate_hz={self.sample_rate_hz} must exceed twice doppler_hz={self.doppler_hz} (aliasing)"
            )
        if self.num_samples < 2:
            raise ValueError("duration_s * sample_rate_hz gives fewer than 2 samples")
        return self

    @property
    def num_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate_hz))


class ShadowConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    sigma_db: float = Field(0.0, ge=0, allow_inf_nan=False)
    correlation_length_samples: int = Field(1, ge=1)
    seed: int = 0


# ---------------------------------------------------------- preprocessing


class Scaler(BaseModel):
    """Fitted min-max transform"""
    model_config = ConfigDict(frozen=True)

    x_min: float = Field(allow_inf_nan=False)
    x_max: float = Field(allow_inf_nan=False)
    new_min: float = Field(-1.0, allow_inf_nan=False)
    new_max: float = Field(1.0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _check_ranges(self) -> "Scaler":
        if not self.x_max > self.x_min:
            raise ValueError("degenerate range: x_max must exceed x_min")
        if not self.new_max > self.new_min:
            raise ValueError("degenerate range: new_max must exceed new_min")
        return self

    @property
    def slope(self) -> float:
        return (self.new_max - self.new_min) / (self.x_max - self.x_min)


class PreprocessConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    downsample_factor: int = Field(config.DOWNSAMPLE_FACTOR, ge=1)
    local_mean_window: int = Field(config.LOCAL_MEAN_WINDOW, ge=1)
    small_scale: bool = True
    new_min: float = -1.0
    new_max: float = 1.0


# -------------------------------------------------------------- coherence


class AcfCurve(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    sample_rate_hz: float = Field(gt=0)

    @field_validator("values", mode="before")
    @classmethod
    def _as_array(cls, value: Any) -> np.ndarray:
        return _frozen_array(value).ravel()

    @model_validator(mode="after")
    def _check_values(self) -> "AcfCurve":
        if self.values.size == 0 or abs(self.values[0] - 1.0) > 1e-9:
            raise ValueError("ACF must start with 1 at lag 0")
        if np.any(np.abs(self.values) > 1.0 + 1e-9):
            raise ValueError("ACF magnitude exceeds 1")
        return self

    @property
    def max_lag(self) -> int:
        return int(self.values.size - 1)

    @property
    def lags_s(self) -> np.ndarray:
        return np.arange(self.values.size) / self.sample_rate_hz


class HorizonRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    threshold: float = Field(gt=0, lt=1)
    coherence_time_s: float = Field(ge=0)
    output_length_samples: int = Field(ge=1)


class HorizonTable(BaseModel):
    model_config = ConfigDict(frozen=True)

    rows: List[HorizonRow]
    sample_rate_hz: float = Field(gt=0)
    max_lag: int = Field(ge=1)

    @model_validator(mode="after")
    def _check_monotone(self) -> "HorizonTable":
        ordered = sorted(self.rows, key=lambda row: -row.threshold)
        for higher, lower in zip(ordered, ordered[1:]):
            if lower.coherence_time_s < higher.coherence_time_s:
                raise ValueError("coherence time shrinks for a lower threshold")
        return self

    @property
    def output_lengths(self) -> List[int]:
        return [row.output_length_samples for row in self.rows]


# -------------------------------------------------------------- windowing


class WindowConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    input_len: int = Field(25, ge=1)
    output_len: int = Field(11, ge=1)
    stride: int = Field(1, ge=1)


class WindowedDataset(BaseModel):
    """Aligned (input, target) windows with a split label per example"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    inputs: np.ndarray
    targets: np.ndarray
    splits: np.ndarray

    @field_validator("inputs", "targets", mode="before")
    @classmethod
    def _as_matrix(cls, value: Any) -> np.ndarray:
        array = _frozen_array(value)
        if array.ndim != 2:
            raise ValueError("windows must be a 2-D matrix")
        return array

    @field_validator("splits", mode="before")
    @classmethod
    def _as_labels(cls, value: Any) -> np.ndarray:
        labels = np.array([Split(v).value for v in value], dtype=object)
        labels.setflags(write=False)
        return labels

    @model_validator(mode="after")
    def _check_alignment(self) -> "WindowedDataset":
        if not (self.inputs.shape[0] == self.targets.shape[0] == self.splits.shape[0]):
            raise ValueError("inputs, targets and split labels are not row-aligned")
        return self

    @property
    def input_len(self) -> int:
        return int(self.inputs.shape[1])

    @property
    def output_len(self) -> int:
        return int(self.targets.shape[1])

    def __len__(self) -> int:
        return int(self.inputs.shape[0])

    def count(self, split: Split) -> int:
        return int(np.count_nonzero(self.splits == Split(split).value))

    def subset(self, split: Split) -> Tuple[np.ndarray, np.ndarray]:
        mask = self.splits == Split(split).value
        return self.inputs[mask], self.targets[mask]


class BatchPlan(BaseModel):
    model_config = ConfigDict(frozen=True)

    batch_size: int = Field(config.BATCH_SIZE, ge=1)
    shuffle_seed: int = 0
    drop_last: bool = False


# ----------------------------------------------------------------- models


class ModelDescriptor(BaseModel):
    """Architecture choice of one predictor"""
    model_config = ConfigDict(frozen=True)

    family: Family
    layers: int = Field(1, ge=1, le=2)
    hidden_units: Optional[int] = Field(None, ge=1)
    num_kernels: Optional[int] = Field(None, ge=1)
    kernel_size: int = Field(5, ge=1)
    input_len: int = Field(ge=1)
    output_len: int = Field(ge=1)

    @property
    def units(self) -> int:
        if self.hidden_units is not None:
            return self.hidden_units
        return 5 if self.family == Family.FFN and self.layers == 2 else 25

    @property
    def kernels(self) -> int:
        if self.num_kernels is not None:
            return self.num_kernels
        return 64 if self.layers == 2 else 128


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    epochs: int = Field(config.EPOCHS, ge=1)
    batch_size: int = Field(config.BATCH_SIZE, ge=1)
    dropout_rate: float = Field(config.DROPOUT_RATE, ge=0, lt=1)
    patience: int = Field(config.PATIENCE, ge=0)
    step_size: float = Field(config.STEP_SIZE, gt=0)
    min_delta: float = Field(1e-9, ge=0)
    seed: int = config.DEFAULT_SEED
    linear_solver: LinearSolver = LinearSolver.CLOSED_FORM


class TrainReport(BaseModel):
    train_losses: List[float] = []
    val_losses: List[float] = []
    stopped_epoch: int = 0
    best_epoch: int = 0
    wall_time_s: float = 0.0

    @property
    def best_val_loss(self) -> float:
        return self.val_losses[self.best_epoch - 1] if self.best_epoch else math.nan


# ------------------------------------------------------------- evaluation


class EvalReport(BaseModel):
    rmse_per_step: List[float]
    mae_per_step: List[float]
    rmse_mean: float
    mae_mean: float
    num_test_examples: int = Field(ge=1)
    descriptor: ModelDescriptor
    seed: int
    train_time_s: float = 0.0
    stopped_epoch: int = 0
    best_epoch: int = 0

    @model_validator(mode="after")
    def _check_errors(self) -> "EvalReport":
        z = self.descriptor.output_len
        if len(self.rmse_per_step) != z or len(self.mae_per_step) != z:
            raise ValueError(f"per-step vectors must have length {z}")
        for n, (rmse, mae) in enumerate(zip(self.rmse_per_step, self.mae_per_step)):
            if rmse < 0 or mae < 0:
                raise ValueError(f"negative error at step {n}")
            if mae > rmse * (1 + 1e-12) + 1e-15:
                raise ValueError(f"MAE exceeds RMSE at step {n}")
        return self


# -------------------------------------------------------------- harness


class SourceConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: SourceKind = SourceKind.SIMULATE
    csv_path: Optional[str] = None
    column: str = "rss"
    unit: PowerUnit = PowerUnit.LINEAR
    sample_rate_hz: float = Field(config.SOURCE_SAMPLE_RATE_HZ, gt=0)
    clarke: Optional[ClarkeConfig] = None
    shadow: Optional[ShadowConfig] = None

    @model_validator(mode="after")
    def _check_kind(self) -> "SourceConfig":
        if self.kind == SourceKind.CSV and not self.csv_path:
            raise ValueError("csv source needs source.csv_path")
        if self.kind == SourceKind.SIMULATE and self.clarke is None:
            raise ValueError("simulated source needs a clarke configuration")
        return self


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    environment: str = config.DEFAULT_ENVIRONMENT
    source: SourceConfig
    preprocess: PreprocessConfig = PreprocessConfig()
    split_fractions: Tuple[float, float, float] = tuple(config.SPLIT_FRACTIONS)
    window: WindowConfig
    model: ModelDescriptor
    train: TrainConfig = TrainConfig()
    repeats: int = Field(1, ge=1)
    seed: int = config.DEFAULT_SEED

    @model_validator(mode="after")
    def _check_window(self) -> "ExperimentConfig":
        if (self.window.input_len, self.window.output_len) != (self.model.input_len, self.model.output_len):
            raise ValueError("window and model descriptor disagree on T_x/T_y")
        return self

    @property
    def seeds(self) -> List[int]:
        return [self.seed + r for r in range(self.repeats)]


class SweepGrid(BaseModel):
    model_config = ConfigDict(frozen=True)

    input_lens: List[int]
    output_lens: List[int]
    families: List[Family]
    layers: List[int] = [1]

    @model_validator(mode="after")
    def _check_grid(self) -> "SweepGrid":
        if not (self.input_lens and self.output_lens and self.families and self.layers):
            raise ValueError("empty grid")
        return self

    @property
    def size(self) -> int:
        return len(self.input_lens) * len(self.output_lens) * len(self.families) * len(self.layers)


class ResultRow(BaseModel):
    environment: str
    family: Family
    layers: int
    hidden_units: int
    num_kernels: int
    kernel_size: int
    input_len: int
    output_len: int
    seed: int
    status: RunStatus = RunStatus.SUCCESS
    error: Optional[str] = None
    rmse_mean: float = math.nan
    mae_mean: float = math.nan
    rmse_mean_physical: float = math.nan
    mae_mean_physical: float = math.nan
    rmse_per_step: List[float] = []
    mae_per_step: List[float] = []
    num_test_examples: int = 0
    train_time_s: float = math.nan
    stopped_epoch: int = 0
    best_epoch: int = 0

    @property
    def ok(self) -> bool:
        return self.status == RunStatus.SUCCESS


class ExperimentStep(BaseModel):
    step_id: int
    experiment: ExperimentConfig
    status: RunStatus = RunStatus.PENDING
    rows: List[ResultRow] = []
    error: Optional[str] = None
    execution_time: Optional[float] = None


class SweepPlan(BaseModel):
    steps: List[ExperimentStep]
    plan_id: str = Field(default_factory=lambda: f"sweep_{int(time.time())}")
    grid: Optional[SweepGrid] = None


class VerificationResult(BaseModel):
    score: float = Field(ge=0.0, le=1.0)
    issues: List[str] = []
    passed: bool
