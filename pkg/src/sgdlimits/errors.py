"""Exception hierarchy. The CLI maps ``ConfigError`` to exit code 2, everything else to 1."""


class SgdLimitsError(Exception):
    pass


class SchemaError(SgdLimitsError, ValueError):
    """Coordinate schemas or array dimensions disagree."""


class RangeError(SgdLimitsError, ValueError):
    """A query time or window lies outside the covered interval."""


class DomainError(SgdLimitsError, ValueError):
    """Input outside the admissible domain of a formula (negative r_perp^2, non-PSD Gram, ...)."""


class DivergenceError(SgdLimitsError, ArithmeticError):
    def __init__(self, message: str, step: int | None = None, time: float | None = None):
        super().__init__(message)
        self.step = step
        self.time = time


class ConfigError(SgdLimitsError, ValueError):
    pass


class DegenerateFitError(SgdLimitsError, ValueError):
    pass
