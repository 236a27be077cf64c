"""
Test configuration
"""
import os
import sys

import numpy as np
import pytest

# Add the project root to the Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from app.models import (  # noqa: E402
    ClarkeConfig, ExperimentConfig, Family, ModelDescriptor, PreprocessConfig, SignalTrace,
    SourceConfig, TrainConfig, WindowConfig,
)


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance test (needs --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


# Mock configuration for tests
@pytest.fixture(autouse=True)
def mock_config(tmp_path):
    """Pin configuration for tests"""
    with pytest.MonkeyPatch().context() as m:
        m.setattr("app.config.config.ENV", "test")
        m.setattr("app.config.config.LOG_LEVEL", "debug")
        m.setattr("app.config.config.LOG_DIR", str(tmp_path / "logs"))
        m.setattr("app.config.config.OUTPUT_DIR", str(tmp_path / "results"))
        m.setattr("app.config.config.MAX_JOBS", 1)
        from app.logger import setup_logging

        setup_logging("warning")
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def ramp_trace():
    """1..200 at 1 kHz"""
    return SignalTrace(samples=np.arange(1.0, 201.0), sample_rate_hz=1000.0, label="ramp")


@pytest.fixture
def fading_trace():
    """Short simulated Rayleigh power trace at 1 kHz"""
    from tools.signal_source import simulate_clarke

    return simulate_clarke(ClarkeConfig(doppler_hz=16.29, duration_s=3.0, sample_rate_hz=1000.0, seed=3))


def small_experiment(family: Family = Family.GRU, input_len: int = 8, output_len: int = 3,
                     epochs: int = 3, repeats: int = 1, seed: int = 0, **descriptor) -> ExperimentConfig:
    """A pipeline config that runs in well under a second per seed"""
    return ExperimentConfig(
        environment="indoor-los",
        source=SourceConfig(
            sample_rate_hz=2000.0,
            clarke=ClarkeConfig(doppler_hz=16.29, duration_s=1.5, sample_rate_hz=2000.0, seed=seed),
        ),
        preprocess=PreprocessConfig(downsample_factor=2, local_mean_window=50),
        window=WindowConfig(input_len=input_len, output_len=output_len),
        model=ModelDescriptor(family=family, input_len=input_len, output_len=output_len,
                              **({"hidden_units": 4, "num_kernels": 4, "kernel_size": 3} | descriptor)),
        train=TrainConfig(epochs=epochs, batch_size=32, dropout_rate=0.1, patience=2, seed=seed),
        repeats=repeats,
        seed=seed,
    )


@pytest.fixture
def experiment_factory():
    return small_experiment
