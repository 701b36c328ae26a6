"""Exception types shared across the package."""


class PjxError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(PjxError, ValueError):
    """Tensor shapes are incompatible for the requested operation."""


class ParameterError(PjxError, ValueError):
    """An argument is outside its documented range (e.g. dropout rate, beam width)."""


class ContractError(PjxError, ValueError):
    """A documented precondition or invariant was violated by the caller."""


class InputError(PjxError, ValueError):
    """User-supplied input (ids, sequences, labels) is invalid."""


class DatasetError(PjxError, ValueError):
    """A dataset file failed schema validation.

    Carries the offending field and 1-based line number when known.
    """

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        parts = [message]
        if field is not None:
            parts.append(f"field={field!r}")
        if line is not None:
            parts.append(f"line={line}")
        super().__init__("; ".join(parts))


class NumericalError(PjxError, RuntimeError):
    """Numerical failure (NaN/inf loss, solver breakdown)."""


class CheckpointError(PjxError, RuntimeError):
    """A checkpoint file is malformed or has an unsupported version."""
