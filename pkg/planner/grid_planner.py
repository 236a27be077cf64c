"""
Planner module: turns config sections into experiment configs and sweep plans
"""
from itertools import product
from typing import Dict, List, Optional, Sequence

from app.config import config, split_list
from app.logger import logger
from app.models import (
    ClarkeConfig, ExperimentConfig, ExperimentStep, Family, LinearSolver, ModelDescriptor,
    PowerUnit, PreprocessConfig, ShadowConfig, SourceConfig, SourceKind, SweepGrid, SweepPlan,
    TrainConfig, WindowConfig,
)
from tools.coherence import horizons_from_coherence_times

Sections = Dict[str, Dict[str, str]]

# Keys accepted in each config file section
KNOWN_KEYS: Dict[str, Sequence[str]] = {
    "experiment": ("environment", "repeats", "seed"),
    "source": ("kind", "csv_path", "column", "unit", "sample_rate_hz"),
    "clarke": ("doppler_hz", "num_sinusoids", "duration_s", "rician_k", "seed"),
    "shadow": ("sigma_db", "correlation_length_samples", "seed"),
    "preprocess": ("downsample_factor", "local_mean_window", "small_scale", "new_min", "new_max"),
    "split": ("train", "val", "test"),
    "window": ("input_len", "output_len", "stride"),
    "model": ("family", "layers", "hidden_units", "num_kernels", "kernel_size"),
    "train": ("epochs", "batch_size", "dropout_rate", "patience", "step_size", "min_delta", "linear_solver"),
    "sweep": ("input_lens", "output_lens", "families", "layers"),
}

DEFAULT_DURATION_S = 62.3
PROFILE_FAMILIES = (Family.LSTM, Family.GRU)


def _ints(raw: str) -> List[int]:
    return [int(v) for v in split_list(raw)]


class GridPlanner:
    """Builds validated experiment configurations from flat key=value sections"""

    def check_keys(self, sections: Sections):
        for section, values in sections.items():
            allowed = KNOWN_KEYS.get(section, ())
            for name in values:
                if name not in allowed:
                    raise ValueError(f"Unknown config key '{section}.{name}'")

    def _source(self, sections: Sections, environment: str, seed: int) -> SourceConfig:
        src = sections.get("source", {})
        kind = SourceKind(src.get("kind", SourceKind.SIMULATE.value))
        sample_rate_hz = float(src.get("sample_rate_hz", config.SOURCE_SAMPLE_RATE_HZ))

        clarke = None
        if kind == SourceKind.SIMULATE:
            preset = config.preset(environment)
            cl = sections.get("clarke", {})
            clarke = ClarkeConfig(
                doppler_hz=float(cl.get("doppler_hz", preset["doppler_hz"])),
                num_sinusoids=int(cl.get("num_sinusoids", 64)),
                duration_s=float(cl.get("duration_s", DEFAULT_DURATION_S)),
                sample_rate_hz=sample_rate_hz,
                rician_k=float(cl.get("rician_k", preset["rician_k"])),
                seed=int(cl.get("seed", seed)),
            )

        shadow = None
        sh = sections.get("shadow", {})
        if sh:
            shadow = ShadowConfig(
                sigma_db=float(sh.get("sigma_db", 0.0)),
                correlation_length_samples=int(sh.get("correlation_length_samples", 1)),
                seed=int(sh.get("seed", seed + 1)),
            )

        return SourceConfig(
            kind=kind,
            csv_path=src.get("csv_path"),
            column=src.get("column", "rss"),
            unit=PowerUnit(src.get("unit", PowerUnit.LINEAR.value)),
            sample_rate_hz=sample_rate_hz,
            clarke=clarke,
            shadow=shadow,
        )

    def experiment_from_sections(self, sections: Sections, seed: Optional[int] = None) -> ExperimentConfig:
        """One ExperimentConfig from parsed config file sections"""
        self.check_keys(sections)
        exp = sections.get("experiment", {})
        environment = exp.get("environment", config.DEFAULT_ENVIRONMENT)
        seed = int(exp.get("seed", config.DEFAULT_SEED)) if seed is None else seed

        pre = sections.get("preprocess", {})
        preprocess = PreprocessConfig(
            downsample_factor=int(pre.get("downsample_factor", config.DOWNSAMPLE_FACTOR)),
            local_mean_window=int(pre.get("local_mean_window", config.LOCAL_MEAN_WINDOW)),
            small_scale=pre.get("small_scale", "true").lower() in ("1", "true", "yes"),
            new_min=float(pre.get("new_min", -1.0)),
            new_max=float(pre.get("new_max", 1.0)),
        )

        sp = sections.get("split", {})
        defaults = config.SPLIT_FRACTIONS
        fractions = (
            float(sp.get("train", defaults[0])),
            float(sp.get("val", defaults[1])),
            float(sp.get("test", defaults[2])),
        )

        win = sections.get("window", {})
        window = WindowConfig(
            input_len=int(win.get("input_len", 25)),
            output_len=int(win.get("output_len", 11)),
            stride=int(win.get("stride", 1)),
        )

        mod = sections.get("model", {})
        descriptor = ModelDescriptor(
            family=Family(mod.get("family", Family.GRU.value)),
            layers=int(mod.get("layers", 1)),
            hidden_units=int(mod["hidden_units"]) if "hidden_units" in mod else None,
            num_kernels=int(mod["num_kernels"]) if "num_kernels" in mod else None,
            kernel_size=int(mod.get("kernel_size", 5)),
            input_len=window.input_len,
            output_len=window.output_len,
        )

        tr = sections.get("train", {})
        train = TrainConfig(
            epochs=int(tr.get("epochs", config.EPOCHS)),
            batch_size=int(tr.get("batch_size", config.BATCH_SIZE)),
            dropout_rate=float(tr.get("dropout_rate", config.DROPOUT_RATE)),
            patience=int(tr.get("patience", config.PATIENCE)),
            step_size=float(tr.get("step_size", config.STEP_SIZE)),
            min_delta=float(tr.get("min_delta", 1e-9)),
            seed=seed,
            linear_solver=LinearSolver(tr.get("linear_solver", LinearSolver.CLOSED_FORM.value)),
        )

        return ExperimentConfig(
            environment=environment,
            source=self._source(sections, environment, seed),
            preprocess=preprocess,
            split_fractions=fractions,
            window=window,
            model=descriptor,
            train=train,
            repeats=int(exp.get("repeats", 1)),
            seed=seed,
        )

    def preset_horizons(self, base: ExperimentConfig) -> List[int]:
        """Output lengths of the environment's published coherence times, at the model sample rate"""
        times = config.preset(base.environment).get("coherence_times_s")
        if not times:
            return [base.window.output_len]
        rate = base.source.sample_rate_hz / base.preprocess.downsample_factor
        return sorted(set(horizons_from_coherence_times(times, rate)))

    def grid_from_sections(self, sections: Sections, base: ExperimentConfig) -> SweepGrid:
        """
        Sweep axes; `sweep.output_lens=preset` takes the environment's horizon
        set. Missing axes fall back to the base experiment (input lengths to
        the full grid).
        """
        sw = sections.get("sweep", {})
        raw_outputs = sw.get("output_lens", "")
        if raw_outputs.strip().lower() == "preset":
            output_lens = self.preset_horizons(base)
        else:
            output_lens = _ints(raw_outputs) or [base.window.output_len]
        return SweepGrid(
            input_lens=_ints(sw.get("input_lens", "")) or list(config.INPUT_LENGTHS),
            output_lens=output_lens,
            families=[Family(f) for f in split_list(sw.get("families", ""))] or list(Family),
            layers=_ints(sw.get("layers", "")) or [base.model.layers],
        )

    def _variant(self, base: ExperimentConfig, family: Family, layers: int, t_x: int, t_y: int) -> ExperimentConfig:
        window = base.window.model_copy(update={"input_len": t_x, "output_len": t_y})
        model = base.model.model_copy(update={
            "family": family, "layers": layers, "input_len": t_x, "output_len": t_y,
        })
        return base.model_copy(update={"window": window, "model": model})

    def generate_plan(self, base: ExperimentConfig, grid: SweepGrid) -> SweepPlan:
        """Cartesian product of the grid, one step per configuration, in grid order"""
        steps = [
            ExperimentStep(step_id=index + 1, experiment=self._variant(base, family, layers, t_x, t_y))
            for index, (family, layers, t_x, t_y) in enumerate(
                product(grid.families, grid.layers, grid.input_lens, grid.output_lens)
            )
        ]
        plan = SweepPlan(steps=steps, grid=grid)
        logger.info(f"Generated plan {plan.plan_id} with {len(steps)} configurations x {base.repeats} seed(s)")
        return plan

    def profile_plan(self, base: ExperimentConfig, output_lens: Optional[List[int]] = None) -> SweepPlan:
        """LSTM and GRU over the horizon set at the base input length"""
        grid = SweepGrid(
            input_lens=[base.window.input_len],
            output_lens=output_lens or self.preset_horizons(base),
            families=list(PROFILE_FAMILIES),
            layers=[base.model.layers],
        )
        return self.generate_plan(base, grid)


# Global planner instance
grid_planner = GridPlanner()
