"""Exception classes. The CLI maps each class to its own exit code."""


class SymgroundError(Exception):
    exit_code = 1


class ScenarioError(SymgroundError):
    """Scenario file failed to parse or validate.

    ``field`` is the dotted path of the offending key when known.
    """

    exit_code = 2

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class CappedGrowthError(SymgroundError):
    """Population exceeded its hard cap; the run was aborted."""

    exit_code = 3

    def __init__(self, step: int, size: int, cap: int, series=None):
        self.step = step
        self.size = size
        self.cap = cap
        self.series = series
        super().__init__(f"population {size} exceeded hard cap {cap} at step {step}")


class InsufficientDataError(SymgroundError, ValueError):
    exit_code = 4


class MetricsIOError(SymgroundError, OSError):
    exit_code = 5
