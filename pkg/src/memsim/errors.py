"""Exception types shared across the simulator."""


class MemsimError(Exception):
    """Base class for all simulator errors."""


class TraceParseError(MemsimError, ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class ConfigError(MemsimError, ValueError):
    """Configuration validation failure; ``problems`` lists (path, message)."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(f"{p}: {m}" for p, m in self.problems))


class ModelUnavailable(MemsimError):
    """A slowdown estimate cannot be produced for this interval/quantum."""


class NoHighPriorityEpochs(ModelUnavailable):
    pass


class NoEpochs(ModelUnavailable):
    pass


class DegenerateDenominator(ModelUnavailable):
    pass


class NoProgress(ModelUnavailable):
    pass
