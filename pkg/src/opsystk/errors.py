"""Exception types. Each carries a stable ``code`` used in CLI reports."""


class OpsysError(Exception):
    code = "ERROR"

    def __init__(self, message="", **details):
        super().__init__(message)
        self.details = details


class ConvergenceFailure(OpsysError):
    code = "CONVERGENCE_FAILURE"


class EmptySpan(OpsysError):
    code = "EMPTY_SPAN"


class NotNull(OpsysError):
    """Raised when a subspace meant to be a null-subspace contains a positive element."""

    code = "NOT_NULL"


class DualityMismatch(OpsysError):
    code = "DUALITY_MISMATCH"


class CapExceeded(OpsysError):
    code = "CAP_EXCEEDED"


class UndecidedSpan(OpsysError):
    code = "UNDECIDED_SPAN"


class MalformedInput(OpsysError):
    code = "MALFORMED_INPUT"
