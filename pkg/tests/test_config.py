"""
Test suite for configuration loading and grid planning
"""
import pytest
from pydantic import ValidationError

from app.config import Config, config, load_config_file, parse_overrides, split_list
from app.models import Family, LinearSolver, SourceKind
from planner.grid_planner import DEFAULT_DURATION_S, grid_planner


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "experiment.env"
    path.write_text(
        "# indoor baseline\n"
        "experiment.environment=outdoor-los\n"
        "experiment.repeats=3\n"
        "window.input_len=25\n"
        "window.output_len=14\n"
        "model.family=lstm\n"
        "model.hidden_units=25\n"
        "train.epochs=40\n"
        "sweep.families=gru,linear\n",
        encoding="utf-8",
    )
    return path


class TestConfig:

    def test_defaults_validate(self):
        Config.validate()
        assert config.SPLIT_FRACTIONS == (0.7, 0.2, 0.1)
        assert config.INPUT_LENGTHS[-1] == 100

    def test_bad_split_fractions(self, monkeypatch):
        monkeypatch.setattr(Config, "SPLIT_FRACTIONS", (0.5, 0.2, 0.1))
        with pytest.raises(ValueError, match="SPLIT_FRACTIONS"):
            Config.validate()

    def test_unknown_preset(self):
        with pytest.raises(ValueError, match="Unknown environment 'moon'"):
            config.preset("moon")

    def test_parse_overrides(self):
        assert parse_overrides(["train.epochs=5", "model.family = gru"]) == {
            "train.epochs": "5", "model.family": "gru",
        }
        with pytest.raises(ValueError):
            parse_overrides(["train.epochs"])

    def test_load_config_file_sections(self, config_file):
        sections = load_config_file(str(config_file))
        assert sections["experiment"] == {"environment": "outdoor-los", "repeats": "3"}
        assert sections["model"]["family"] == "lstm"
        assert sections["shadow"] == {}

    def test_overrides_win(self, config_file):
        sections = load_config_file(str(config_file), {"train.epochs": "2"})
        assert sections["train"]["epochs"] == "2"

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config_file(str(tmp_path / "nope.env"))

    def test_key_without_section(self):
        with pytest.raises(ValueError, match="no section prefix"):
            load_config_file(None, {"epochs": "3"})

    def test_unknown_section(self):
        with pytest.raises(ValueError, match="Unknown config section"):
            load_config_file(None, {"optimizer.name": "sgd"})

    def test_split_list(self):
        assert split_list(" 4, 8,,11 ") == ["4", "8", "11"]
        assert split_list(None) == []


class TestGridPlanner:

    def test_defaults(self):
        experiment = grid_planner.experiment_from_sections(load_config_file(None))
        assert experiment.environment == "indoor-los"
        assert experiment.model.family == Family.GRU
        assert (experiment.window.input_len, experiment.window.output_len) == (25, 11)
        assert experiment.source.kind == SourceKind.SIMULATE
        assert experiment.source.clarke.doppler_hz == config.preset("indoor-los")["doppler_hz"]
        assert experiment.source.clarke.duration_s == DEFAULT_DURATION_S
        assert experiment.source.shadow is None
        assert experiment.train.linear_solver == LinearSolver.CLOSED_FORM

    def test_file_values(self, config_file):
        experiment = grid_planner.experiment_from_sections(load_config_file(str(config_file)), seed=7)
        assert experiment.seed == 7
        assert experiment.train.seed == 7
        assert experiment.seeds == [7, 8, 9]
        assert experiment.model.family == Family.LSTM
        assert experiment.model.output_len == 14
        assert experiment.train.epochs == 40
        assert experiment.source.clarke.doppler_hz == config.preset("outdoor-los")["doppler_hz"]

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="Unknown config key 'train.optimizer'"):
            grid_planner.experiment_from_sections(load_config_file(None, {"train.optimizer": "sgd"}))

    def test_shadow_section_enables_shadowing(self):
        sections = load_config_file(None, {"shadow.sigma_db": "4", "shadow.correlation_length_samples": "100"})
        experiment = grid_planner.experiment_from_sections(sections)
        assert experiment.source.shadow.sigma_db == 4.0
        assert experiment.source.shadow.correlation_length_samples == 100

    def test_csv_source_needs_path(self):
        with pytest.raises(ValidationError, match="csv_path"):
            grid_planner.experiment_from_sections(load_config_file(None, {"source.kind": "csv"}))

    def test_grid_and_plan_order(self, config_file):
        sections = load_config_file(str(config_file), {"sweep.input_lens": "8,25", "sweep.output_lens": "4,11"})
        base = grid_planner.experiment_from_sections(sections)
        grid = grid_planner.grid_from_sections(sections, base)
        assert grid.size == 8
        plan = grid_planner.generate_plan(base, grid)
        assert len(plan.steps) == 8
        assert [s.step_id for s in plan.steps] == list(range(1, 9))
        first, last = plan.steps[0].experiment, plan.steps[-1].experiment
        assert (first.model.family, first.window.input_len, first.window.output_len) == (Family.GRU, 8, 4)
        assert (last.model.family, last.window.input_len, last.window.output_len) == (Family.LINEAR, 25, 11)
        assert last.model.output_len == last.window.output_len

    def test_default_grid_axes(self):
        sections = load_config_file(None)
        base = grid_planner.experiment_from_sections(sections)
        grid = grid_planner.grid_from_sections(sections, base)
        assert grid.input_lens == list(config.INPUT_LENGTHS)
        assert grid.families == list(Family)
        assert grid.output_lens == [11]

    def test_preset_output_lengths(self):
        sections = load_config_file(None, {"experiment.environment": "outdoor-los", "sweep.output_lens": "preset"})
        base = grid_planner.experiment_from_sections(sections)
        grid = grid_planner.grid_from_sections(sections, base)
        assert grid.output_lens == [5, 10, 14, 19, 23]

    def test_profile_plan_covers_recurrent_families(self):
        base = grid_planner.experiment_from_sections(load_config_file(None))
        plan = grid_planner.profile_plan(base)
        families = {step.experiment.model.family for step in plan.steps}
        assert families == {Family.LSTM, Family.GRU}
        assert len(plan.steps) == 2 * 5
        assert all(step.experiment.window.input_len == 25 for step in plan.steps)
