"""
Logging setup and utilities
"""
import json
import sys
from pathlib import Path
from typing import Any, Dict, Optional

from loguru import logger

from app.config import config


def setup_logging(level: Optional[str] = None):
    """Setup structured logging"""
    logger.remove()
    # Console logging
    logger.add(
        sys.stderr,
        level=(level or config.LOG_LEVEL).upper(),
        format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | "
               "<level>{level: <8}</level> | "
               "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - "
               "<level>{message}</level>",
        colorize=True,
        filter=lambda record: record["extra"].get("log_type") != "experiment",
    )
    log_dir = Path(config.LOG_DIR)
    # File logging for production
    if config.ENV == "prod":
        logger.add(
            log_dir / "channelbench.log",
            level="INFO",
            format="{time:YYYY-MM-DD HH:mm:ss} | {level} | {name}:{function}:{line} - {message}",
            rotation="10 MB",
            retention="30 days",
            delay=True,
        )
    # Experiment records, one line each
    logger.add(
        log_dir / "experiments.log",
        level="INFO",
        format="{time:YYYY-MM-DD HH:mm:ss} | {level} | {message}",
        rotation="10 MB",
        retention="30 days",
        delay=True,
        filter=lambda record: record["extra"].get("log_type") == "experiment",
    )


def log_experiment_result(row: Dict[str, Any]):
    """Log one finished experiment as a JSON line"""
    log_data = {
        key: row.get(key)
        for key in (
            "environment", "family", "layers", "input_len", "output_len",
            "seed", "status", "rmse_mean", "mae_mean", "train_time_s",
        )
    }
    if row.get("error"):
        log_data["error"] = row["error"]
    logger.bind(log_type="experiment").info(json.dumps(log_data, default=str))


def experiment_logger_info(stage: str, status: str, error: Optional[str] = None, **details: Any):
    msg = f"STAGE stage={stage} status={status}"
    for key, value in details.items():
        msg += f" {key}={value}"
    if error:
        msg += f" error={error}"
    msg = msg.replace("\n", " ").replace("\r", " ")
    logger.bind(log_type="experiment").info(msg)


setup_logging()
