class FanlabError(Exception):
    """Base class for every error raised by fanlab."""


class UnresolvedComparison(FanlabError):
    """Enclosures of two non-identical towers still overlap at the precision cap."""

    def __init__(self, left, right, precision):
        self.left = left
        self.right = right
        self.precision = precision
        if precision is None:
            super().__init__(f"{left} and {right} are structurally distinct but equal")
        else:
            super().__init__(f"cannot separate {left} and {right} at {precision} bits")


class TooLarge(FanlabError):
    """The value is too large for the requested exact or interval evaluation."""


class NumericModeRequired(FanlabError):
    """A tower-sized magnitude reached a numeric-only computation."""


class HorizonExceeded(FanlabError):
    pass


class DepthInsufficient(FanlabError):
    """The t_min enclosure at ``depth`` is still wider than ``tol``; ``record`` holds it when available."""

    def __init__(self, width, tol, depth, record=None):
        self.width = width
        self.tol = tol
        self.depth = depth
        self.record = record
        super().__init__(f"enclosure width {width} above tolerance {tol} at depth {depth}")


class CapExceeded(FanlabError):
    pass


class InvalidInstance(FanlabError):
    pass


class SpecError(FanlabError):
    """A sequence spec or tower text could not be parsed.

    The message always starts with the location of the problem.
    """

    def __init__(self, where, message):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


class CertificateFailure(FanlabError):
    """A certificate that the construction guarantees did not hold.

    Args:
        message (str): Short description
        record (dict): Structured counterexample record for the report
    """

    def __init__(self, message, record=None):
        self.record = record or {}
        super().__init__(message)
