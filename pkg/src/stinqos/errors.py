"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes, so every failure a batch run
can hit must come through one of these classes.
"""


class StinQosError(Exception):
    """Base class for all library errors."""


class ConfigError(StinQosError):
    """Malformed or inconsistent run configuration (exit code 2)."""


class DomainError(StinQosError, ValueError):
    """Parameter outside the mathematical domain of an operation (exit code 3)."""


class StabilityError(StinQosError):
    """Divergent kernel sum or violated queue stability condition (exit code 3).

    Carries the offending transform product in ``margin`` when known.
    """

    def __init__(self, message, margin=None):
        super().__init__(message)
        self.margin = margin


class NumericError(StinQosError):
    """Numerical procedure failed to converge (exit code 4).

    ``achieved`` records the tolerance actually reached, when available.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved
