"""
Cascade Lifecycle: exception hierarchy
Every error raised by the analysis modules derives from LifecycleError so the
command-line driver can tell per-cascade problems from corpus-level failures.
"""


class LifecycleError(Exception):
    """Base class for all cascade lifecycle errors."""


class ConfigError(LifecycleError):
    pass


class IngestError(LifecycleError):
    """A single malformed event-log record."""

    def __init__(self, row, reason):
        super().__init__(f"row {row}: {reason}")
        self.row = row
        self.reason = reason


class DegenerateCascadeError(LifecycleError):
    pass


class TooShortError(LifecycleError):
    pass


class CalibrationError(LifecycleError):
    pass


class ConvergenceError(LifecycleError):
    """Iteration stopped at max-iter; `last` holds the final iterate."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class CollinearityError(LifecycleError):
    pass


class DegenerateSeriesError(LifecycleError):
    pass


class SeriesTooShortError(LifecycleError):
    pass


class SpecError(LifecycleError):
    pass


class StageDependencyError(LifecycleError):
    def __init__(self, artifact):
        super().__init__(f"missing stage artifact: {artifact}")
        self.artifact = artifact


class CorpusError(LifecycleError):
    pass
