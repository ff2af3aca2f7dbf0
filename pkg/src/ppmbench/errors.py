"""Exception hierarchy."""


class PpmBenchError(Exception):
    """Base class for all errors raised by this package."""


class LogFormatError(PpmBenchError):
    """Input file does not match the configured column mapping or formats."""


class EmptyLogError(PpmBenchError):
    """An operation removed (or was handed) every case of the log."""


class DebiasError(PpmBenchError):
    """End-of-dataset debiasing left no prefix at all."""

    def __init__(self, message: str, culprit_case: str | None = None, culprit_days: float | None = None):
        super().__init__(message)
        self.culprit_case = culprit_case
        self.culprit_days = culprit_days


class SplitError(PpmBenchError):
    """A split produced an empty side."""

    def __init__(self, message: str, side: str):
        super().__init__(message)
        self.side = side


class EmptyTrainingSetError(SplitError):
    def __init__(self, message: str):
        super().__init__(message, side="train")


class ConfigError(PpmBenchError):
    """Invalid or contradictory pipeline configuration."""


class PipelineError(PpmBenchError):
    """Wraps a failure inside one named pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
