"""Exception hierarchy shared by every vuln_predict module."""

from typing import Optional


class VulnPredictError(Exception):
    """Base class for domain errors raised by vuln_predict."""


class FeedParseError(VulnPredictError):
    def __init__(self, message: str, byte_offset: Optional[int] = None):
        self.byte_offset = byte_offset
        if byte_offset is not None:
            message = f"{message} (at byte offset {byte_offset})"
        super().__init__(message)


class InfeasibleSpecError(VulnPredictError):
    """A requested sample composition cannot be realized."""


class ExploitDateCoverageError(VulnPredictError):
    """Too few positives carry an exploit publication date."""


class SplitError(VulnPredictError):
    pass


class FeatureError(VulnPredictError):
    pass


class ModelError(VulnPredictError):
    pass


class TrainingError(ModelError):
    pass


class ModelFormatError(ModelError):
    pass


class MetricsError(VulnPredictError):
    pass


class ConfigError(VulnPredictError):
    pass
