"""Exception hierarchy.

Every error carries a short machine-readable ``code`` that the CLI prints
as ``ERROR:<code>: <message>``.
"""


class PPDNError(Exception):
    code = "PPDN"


class InvalidParameterError(PPDNError, ValueError):
    code = "INVALID_PARAMETER"


class InfeasibleTransferError(PPDNError):
    """A connection cannot move energy in the requested direction."""

    code = "INFEASIBLE_TRANSFER"


class NetworkError(PPDNError, ValueError):
    code = "INVALID_NETWORK"


class StateError(PPDNError):
    code = "INVALID_STATE"


class DegenerateQueryError(PPDNError, ValueError):
    code = "DEGENERATE_QUERY"


class NoPathError(PPDNError):
    code = "NO_PATH"


class PathLimitExceeded(PPDNError):
    code = "PATH_LIMIT"


class InsufficientCapacityError(PPDNError):
    code = "INSUFFICIENT_CAPACITY"

    def __init__(self, message, edge=None):
        super().__init__(message)
        self.edge = edge


class ScenarioError(PPDNError, ValueError):
    code = "INVALID_SCENARIO"

    def __init__(self, message, issues=()):
        super().__init__(message)
        self.issues = list(issues)


class SlotError(PPDNError):
    """Wraps a failure inside one slot of a simulation run."""

    def __init__(self, slot, cause):
        super().__init__(f"slot {slot}: {cause}")
        self.slot = slot
        self.cause = cause
        self.code = getattr(cause, "code", "SLOT_FAILED")
