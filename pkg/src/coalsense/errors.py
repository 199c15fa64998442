"""Exception types shared across the simulator."""


class ConfigError(ValueError):
    """Invalid configuration (bad key values, inconsistent sizes)."""


class EnumerationLimitError(RuntimeError):
    """A coalition's access-outcome space exceeds the enumeration cap.

    Callers in the formation layer treat the offending coalition as a
    vetoed destination rather than aborting the run.
    """

    def __init__(self, coalition, space_size, cap):
        self.coalition = tuple(sorted(coalition))
        self.space_size = space_size
        self.cap = cap
        super().__init__(
            f"coalition {self.coalition}: outcome space {space_size} exceeds cap {cap}")


class SizeLimitError(ValueError):
    """Exhaustive partition search requested beyond the tractable size."""


class NonConvergenceError(RuntimeError):
    """Coalition formation hit the pass guard without stabilizing.

    Carries the partial trace for diagnosis.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
