"""Exception hierarchy for geodesic-dcd.

Every error raised on purpose by the library derives from GeodesicDCDError
and carries the process exit code the CLI should use for it:

    InputError (2)   malformed files, violated data invariants, bad configs
    MethodError (1)  the numerical method cannot run on the given data
"""

from typing import Optional


class GeodesicDCDError(Exception):
    """Base class for all geodesic-dcd errors."""

    exit_code = 1


class InputError(GeodesicDCDError):
    """Problem with user-supplied input (files, configs, data)."""

    exit_code = 2


class SequenceFormatError(InputError):
    """A container file does not parse in the expected format.

    Args:
        message: Human readable description
        location: Path to the offending field, e.g. ``snapshots[3][17][1]``
    """

    def __init__(self, message: str, location: Optional[str] = None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class InvariantViolation(InputError):
    """A data invariant does not hold (self-loop, asymmetric adjacency, ...)."""

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        message = invariant if not detail else f"{invariant}: {detail}"
        super().__init__(message)


class ConfigError(InputError):
    """An experiment config is not schema-valid."""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class MethodError(GeodesicDCDError):
    """The requested method cannot be applied."""

    exit_code = 1


class ModalityMismatchError(MethodError):
    """Method and graph modality are incompatible (e.g. NSC on a directed graph)."""


class DegenerateInputError(MethodError):
    """Data is degenerate for the operation (empty graph, zero norm, ...)."""


class RankError(MethodError):
    """Requested rank exceeds what the data or dimension supports."""
