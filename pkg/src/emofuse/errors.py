"""Exception hierarchy shared by every emofuse module.

The CLI maps these onto exit codes, so each class carries the code it
should surface with.
"""


class EmofuseError(Exception):
    """Base class for all errors raised by emofuse."""

    exit_code = 4


class InputError(EmofuseError):
    """Bad user-supplied input: unreadable file, wrong format, bad parameter."""

    exit_code = 2


class DecodeError(InputError):
    """A container (WAV, PNM, JSON) could not be parsed."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class UnsupportedFormatError(InputError):
    pass


class ParameterError(InputError, ValueError):
    pass


class SizeError(ParameterError):
    pass


class ShapeError(InputError, ValueError):
    pass


class ValidationError(InputError):
    """A model or config document failed schema validation."""


class InsufficientDataError(InputError, ValueError):
    pass


class DataError(InputError, ValueError):
    pass


class DegenerateGeometryError(InputError, ValueError):
    pass


class UnmappedEmotionError(InputError, ValueError):
    pass


class AlignmentError(EmofuseError):
    """Two streams that must share keys or windows do not line up."""

    exit_code = 3


class InvariantError(EmofuseError):
    exit_code = 4
