"""
Configuration and environment setup
"""
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

from dotenv import dotenv_values, load_dotenv

load_dotenv()


def _floats(raw: str) -> Tuple[float, ...]:
    return tuple(float(v) for v in raw.split(",") if v.strip())


def _ints(raw: str) -> Tuple[int, ...]:
    return tuple(int(v) for v in raw.split(",") if v.strip())


class Config:
    """Application configuration"""

    # Environment
    ENV: str = os.getenv("ENV", "dev")
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "info")
    LOG_DIR: str = os.getenv("LOG_DIR", "logs")

    # Outputs
    OUTPUT_DIR: str = os.getenv("OUTPUT_DIR", "./results")
    DEFAULT_SEED: int = int(os.getenv("DEFAULT_SEED", "0"))
    MAX_JOBS: int = int(os.getenv("MAX_JOBS", "1"))

    # Training protocol
    EPOCHS: int = int(os.getenv("EPOCHS", "150"))
    BATCH_SIZE: int = int(os.getenv("BATCH_SIZE", "32"))
    DROPOUT_RATE: float = float(os.getenv("DROPOUT_RATE", "0.3"))
    PATIENCE: int = int(os.getenv("PATIENCE", "15"))
    STEP_SIZE: float = float(os.getenv("STEP_SIZE", "0.001"))

    # Measurement and preprocessing
    SOURCE_SAMPLE_RATE_HZ: float = float(os.getenv("SOURCE_SAMPLE_RATE_HZ", "10000"))
    DOWNSAMPLE_FACTOR: int = int(os.getenv("DOWNSAMPLE_FACTOR", "10"))
    LOCAL_MEAN_WINDOW: int = int(os.getenv("LOCAL_MEAN_WINDOW", "50"))
    SPLIT_FRACTIONS: Tuple[float, ...] = _floats(os.getenv("SPLIT_FRACTIONS", "0.7,0.2,0.1"))

    # Sweep grids
    INPUT_LENGTHS: Tuple[int, ...] = _ints(
        os.getenv("INPUT_LENGTHS", "1,4,8,11,14,17,23,25,35,50,75,100")
    )
    CORRELATION_THRESHOLDS: Tuple[float, ...] = _floats(
        os.getenv("CORRELATION_THRESHOLDS", "0.1,0.3,0.5,0.7,0.9")
    )

    # Simulator calibration. Doppler values put the 0.5-threshold coherence
    # time of the power ACF, J0(2*pi*fD*tau)**2, at the preset's value.
    ENVIRONMENT_PRESETS: Dict[str, Dict[str, Any]] = {
        "indoor-los": {
            "doppler_hz": 16.29,
            "rician_k": 0.0,
            "coherence_times_s": (0.017, 0.014, 0.011, 0.008, 0.004),
        },
        "indoor-nlos": {
            "doppler_hz": 14.93,
            "rician_k": 0.0,
            "coherence_times_s": (0.018, 0.015, 0.012, 0.008, 0.004),
        },
        "outdoor-los": {
            "doppler_hz": 12.80,
            "rician_k": 0.0,
            "coherence_times_s": (0.023, 0.019, 0.014, 0.010, 0.005),
        },
        "outdoor-nlos": {
            "doppler_hz": 16.29,
            "rician_k": 0.0,
            "coherence_times_s": (0.016, 0.014, 0.011, 0.008, 0.004),
        },
        "mobile": {
            "doppler_hz": 35.0,
            "rician_k": 0.0,
            "coherence_times_s": None,
        },
    }
    DEFAULT_ENVIRONMENT: str = os.getenv("DEFAULT_ENVIRONMENT", "indoor-los")

    @classmethod
    def validate(cls):
        """Validate configuration"""
        if abs(sum(cls.SPLIT_FRACTIONS) - 1.0) > 1e-9 or len(cls.SPLIT_FRACTIONS) != 3:
            raise ValueError("SPLIT_FRACTIONS must be three values summing to 1")
        if cls.MAX_JOBS < 1:
            raise ValueError("MAX_JOBS must be at least 1")
        if not 0.0 <= cls.DROPOUT_RATE < 1.0:
            raise ValueError("DROPOUT_RATE must be in [0, 1)")
        if cls.DEFAULT_ENVIRONMENT not in cls.ENVIRONMENT_PRESETS:
            raise ValueError(f"Unknown DEFAULT_ENVIRONMENT: {cls.DEFAULT_ENVIRONMENT}")

    @classmethod
    def preset(cls, environment: str) -> Dict[str, Any]:
        """Simulator calibration for a named environment"""
        if environment not in cls.ENVIRONMENT_PRESETS:
            known = ", ".join(sorted(cls.ENVIRONMENT_PRESETS))
            raise ValueError(f"Unknown environment '{environment}' (known: {known})")
        return cls.ENVIRONMENT_PRESETS[environment]


config = Config()


# Sections accepted in experiment config files, as dotted key prefixes.
CONFIG_SECTIONS = (
    "experiment", "source", "clarke", "shadow", "preprocess",
    "split", "window", "model", "train", "sweep",
)


def parse_overrides(pairs: Optional[Iterable[str]]) -> Dict[str, str]:
    """Parse ``key=value`` strings given on the command line"""
    overrides: Dict[str, str] = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ValueError(f"Override must look like key=value: {pair!r}")
        key, value = pair.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def load_config_file(path: Optional[str], overrides: Optional[Dict[str, str]] = None) -> Dict[str, Dict[str, str]]:
    """
    Read a flat key=value experiment file into per-section dictionaries.

    Keys are ``section.name``; command-line overrides win over file keys.
    """
    flat: Dict[str, Optional[str]] = {}
    if path:
        file_path = Path(path)
        if not file_path.exists():
            raise FileNotFoundError(f"Config file not found: {file_path}")
        flat.update(dotenv_values(file_path))
    flat.update(overrides or {})

    sections: Dict[str, Dict[str, str]] = {name: {} for name in CONFIG_SECTIONS}
    for key, value in flat.items():
        if "." not in key:
            raise ValueError(f"Config key '{key}' has no section prefix")
        section, name = key.split(".", 1)
        if section not in sections:
            raise ValueError(f"Unknown config section in key '{key}'")
        if value is None or value == "":
            continue
        sections[section][name] = value
    return sections


def split_list(raw: Optional[str]) -> List[str]:
    if not raw:
        return []
    return [item.strip() for item in raw.split(",") if item.strip()]
