"""
Exception hierarchy for the InJecteD pipeline.

Every failure the pipeline raises on purpose derives from InjectedError so the
CLI can map it to an exit code. Input-validation errors also derive from
ValueError so plain library callers can catch them the usual way.
"""

from typing import Optional


class InjectedError(Exception):
    """Root of all pipeline errors"""


class DatasetError(InjectedError, ValueError):
    """Unreadable, malformed or degenerate point-cloud data"""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{location}{message}")


class ModelFormatError(InjectedError, ValueError):
    """Corrupt or unsupported model file"""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None,
                 tensor: Optional[str] = None):
        self.path = path
        self.line = line
        self.tensor = tensor
        parts = []
        if path is not None:
            parts.append(f"{path}:{line}" if line is not None else str(path))
        if tensor is not None:
            parts.append(f"tensor '{tensor}'")
        prefix = ", ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class ScheduleError(InjectedError, ValueError):
    """Invalid noise-schedule parameters"""


class TrainingError(InjectedError):
    """Training cannot proceed"""


class MetricsError(InjectedError, ValueError):
    """Trajectory metric inputs are inconsistent"""


class DriftFieldError(InjectedError, ValueError):
    """Invalid grid or missing drift fields"""


class PlotError(InjectedError, ValueError):
    """Plot spec or figure inputs are invalid"""


class ConfigError(InjectedError, ValueError):
    """Usage error: bad flags, settings or configuration names"""


class PipelineError(InjectedError):
    """A pipeline stage failed; wraps the underlying error"""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage} failed: {cause}")
