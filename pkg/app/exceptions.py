"""
Domain errors raised across the pipeline
"""
from typing import Optional


class ChannelBenchError(ValueError):
    """Base class for every domain error"""


class TraceError(ChannelBenchError):
    """A trace violates its invariants or cannot be ingested"""


class DegenerateRangeError(ChannelBenchError):
    """Constant data where a range or a variance is required"""


class CoherenceError(ChannelBenchError):
    """The correlation never drops below the threshold within max_lag"""


class ShapeError(ChannelBenchError):
    """Array shapes do not line up"""


class MissingCacheError(ChannelBenchError):
    """Backward pass requested before a forward pass"""


class NonFiniteGradientError(ChannelBenchError):
    def __init__(self, parameter: str):
        self.parameter = parameter
        super().__init__(f"Non-finite gradient for parameter '{parameter}'")


class DivergenceError(ChannelBenchError):
    def __init__(self, epoch: int, loss: float):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"Training diverged at epoch {epoch} (loss={loss})")


class RankDeficientError(ChannelBenchError):
    def __init__(self, condition: float):
        self.condition = condition
        super().__init__(f"Normal equations are rank deficient (condition estimate {condition:.3e})")


class StageError(ChannelBenchError):
    """Wraps any failure with the pipeline stage it came from"""

    def __init__(self, stage: str, cause: Optional[BaseException] = None, message: Optional[str] = None):
        self.stage = stage
        self.cause = cause
        detail = message or (f"{type(cause).__name__}: {cause}" if cause else "failed")
        super().__init__(f"[{stage}] {detail}")
