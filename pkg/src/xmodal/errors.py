"""Exception hierarchy shared by every module.

Each class maps to exactly one machine code in the HTTP layer, so keep the
set small and the meanings disjoint.
"""


class ExplorerError(Exception):
    """Base class for all package errors."""

    code = "internal"


class ArgumentError(ExplorerError):
    """A caller-supplied value violates a precondition."""

    code = "argument"


class DimensionError(ExplorerError):
    """Array shapes disagree with the declared contract."""

    code = "dimension"


class NumericError(ExplorerError):
    """A non-finite value appeared where finiteness is guaranteed."""

    code = "numeric"


class ContractError(ExplorerError):
    """Objects from different calls were mixed (e.g. a stale backprop cache)."""

    code = "contract"


class TrainingError(ExplorerError):
    """Optimization diverged; message carries epoch/batch indices."""

    code = "training"


class FormatError(ExplorerError):
    """A file on disk does not match its declared format."""

    code = "format"


class NotFoundError(ExplorerError):
    """An id (subject, group, modality) does not exist in the session."""

    code = "not_found"
