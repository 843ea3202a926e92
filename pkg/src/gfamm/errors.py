"""Exception and warning classes raised across the package."""


class GfammError(Exception):
    """Base class for all errors raised by gfamm."""


class NonPositivePart(GfammError, ValueError):
    def __init__(self, index, value=None):
        self.index = index
        self.value = value
        msg = f"part {index} is not strictly positive"
        if value is not None:
            msg += f" (value {value!r})"
        super().__init__(msg)


class DimensionMismatch(GfammError, ValueError):
    pass


class NotCentred(GfammError, ValueError):
    """A clr vector or curve deviates too far from the zero-sum plane."""


class NonIncreasingGrid(GfammError, ValueError):
    pass


class NonPositiveDensity(GfammError, ValueError):
    pass


class GridMismatch(GfammError, ValueError):
    pass


class OutOfDomain(GfammError, ValueError):
    def __init__(self, value):
        self.value = value
        super().__init__(f"value {value!r} lies outside the spline domain")


class OrderTooLarge(GfammError, ValueError):
    pass


class RowCountMismatch(GfammError, ValueError):
    pass


class RankDeficientConstraint(GfammError, ValueError):
    pass


class MissingCovariate(GfammError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "missing covariate"


class DegenerateCovariate(GfammError, ValueError):
    pass


class UnknownLevel(GfammError, ValueError):
    pass


class InvalidPrecision(GfammError, ValueError):
    pass


class DuplicatePoints(GfammError, ValueError):
    pass


class UnknownLabel(GfammError, ValueError):
    pass


class MalformedLine(GfammError, ValueError):
    def __init__(self, lineno, message, path=None):
        self.lineno = lineno
        self.path = path
        where = f"{path}:{lineno}" if path else f"line {lineno}"
        super().__init__(f"{where}: {message}")


class NonPositiveMean(GfammError, ValueError):
    pass


class Diverged(GfammError, RuntimeError):
    pass


class SingularSystem(GfammError, RuntimeError):
    pass


class UnknownTerm(GfammError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown term"


class TermError(GfammError):
    """Wraps an error raised while building or fitting a specific term."""

    def __init__(self, term, cause):
        self.term = term
        self.cause = cause
        super().__init__(f"term {term!r}: {type(cause).__name__}: {cause}")


class ConfigError(GfammError, ValueError):
    pass


class ConfoundingWarning(UserWarning):
    """A term's design is (nearly) collinear with the functional intercept."""


class SelectionWarning(UserWarning):
    """Smoothing parameter selection stopped at an endpoint of its grid."""
