"""Exception hierarchy shared by all layers."""


class FeigdimError(Exception):
    """Base class for every error raised by this package."""


# interval layer
class IntervalError(FeigdimError):
    pass


class DivisionByZeroInterval(IntervalError, ZeroDivisionError):
    pass


class IntervalOverflow(IntervalError, OverflowError):
    """An endpoint left the finite double range (never mapped to +-inf)."""


class DomainError(IntervalError, ValueError):
    pass


# function balls
class DomainExceeded(FeigdimError):
    """Evaluation argument outside the disk on which the ball is controlled."""


class ParseError(FeigdimError):
    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.field = field


class ChecksumMismatch(FeigdimError):
    pass


# renormalization
class CompositionDivergence(FeigdimError):
    pass


class NoConvergence(FeigdimError):
    def __init__(self, message, best_residual=float("nan")):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual


class SingularAlpha(FeigdimError):
    pass


# certificates
class Inconclusive(FeigdimError):
    def __init__(self, message, subinterval=None, depth=None):
        super().__init__(message)
        self.subinterval = subinterval
        self.depth = depth


class PositiveSignWitness(FeigdimError):
    def __init__(self, message, subinterval=None, enclosure=None):
        super().__init__(message)
        self.subinterval = subinterval
        self.enclosure = enclosure


class CertificateError(FeigdimError):
    """A certificate is missing, invalid, or belongs to another ball."""


# inversion
class ToleranceUnreachable(FeigdimError):
    pass


class RangeError(FeigdimError, ValueError):
    pass


class DerivativeContainsZero(FeigdimError):
    pass


# IFS / dimension
class NodeOrderViolation(FeigdimError):
    pass


class ContractionViolation(FeigdimError):
    pass


class WidthAbort(FeigdimError):
    """Endpoint enclosures grew past the configured width limit."""


class NoRoot(FeigdimError):
    pass


class ToleranceFloor(FeigdimError):
    pass
