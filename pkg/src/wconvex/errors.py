"""Exception types raised by wconvex."""


class WconvexError(Exception):
    """Base class for all library errors."""


class ParameterError(WconvexError, ValueError):
    """Invalid penalty, filter, or solver parameter."""


class ShapeError(WconvexError, ValueError):
    """Array or kernel shapes are incompatible."""


class NumericError(WconvexError, ArithmeticError):
    """A computation produced a non-finite value or failed to converge."""


class FormatError(WconvexError, ValueError):
    """Malformed image or filter-bank file.

    ``offset`` is where parsing failed, when known: a byte offset for images,
    a 1-based line number (``unit="line"``) for text formats.
    """

    def __init__(self, message, offset=None, unit="offset"):
        if offset is not None:
            message = f"{message} (at {unit} {offset})"
        super().__init__(message)
        self.offset = offset
        self.unit = unit
