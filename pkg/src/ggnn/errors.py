"""Exception hierarchy. The CLI maps exit codes off the `exit_code` attribute:
config errors exit 2, file format errors exit 3, any other failure exits 4.
"""


class GGNNError(Exception):
    exit_code = 4


class ConfigError(GGNNError):
    """Invalid hyperparameter, mode, or missing required input."""

    exit_code = 2


class FormatError(GGNNError):
    """Malformed input file (parse errors carry path and line number)."""

    exit_code = 3


class ValidationError(FormatError):
    """Well-formed file whose content violates a data invariant."""


class ShapeError(GGNNError):
    """Matrix dimension mismatch."""


class StateError(GGNNError):
    """Operation called out of order, e.g. backward before forward."""
