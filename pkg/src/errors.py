"""Exception hierarchy shared by every simulator module."""
from typing import Optional


class RadarSimError(Exception):
    """Base class for all simulator errors"""


class DomainError(RadarSimError, ValueError):
    """Raised when a physical input violates its domain (negative range, zero beamwidth, ...)"""


class OutOfRangeError(DomainError):
    """Target delay exceeds the ADC-limited maximum delay tau_max"""


class ModelViolationError(DomainError):
    """Target delay exceeds the OFDM cyclic prefix"""


class SpanTooWideError(DomainError):
    """Requested LUT velocity span is not one-to-one in angle"""
    def __init__(self, message: str, max_span: float):
        super().__init__(message)
        self.max_span = max_span


class AmbiguousVelocityError(RadarSimError):
    """Measured integral angle falls outside every available velocity channel"""
    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SingularFisherError(DomainError):
    """Fisher information matrix cannot be inverted"""


class CapacityError(DomainError):
    """More radars or vehicles requested than the resource grid can host"""


class DimensionMismatchError(RadarSimError, ValueError):
    """Array shapes disagree"""


class ConfigValidationError(RadarSimError):
    """
    Raised for malformed or inconsistent run configuration files.

    Args:
        message: Human readable description
        path: Config file path
        line: 1-based line number of the offending entry, when known
    """
    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line = line


class ExperimentError(RadarSimError):
    """An experiment failed while running; the message names the experiment"""
