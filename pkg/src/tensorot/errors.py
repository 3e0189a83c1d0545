"""Exception types shared across the library."""


class ContractViolation(Exception):
    """An operation was called outside its documented contract."""


class DegenerateSliceError(ContractViolation):
    """A mode slice carries zero mass where a positive one is required."""


class NonConvergenceError(RuntimeError):
    """The iteration cap was hit before the stopping rule fired.

    Carries the partial iteration trace (and, for the end-to-end solver,
    the parameters that were in effect) so callers can inspect the run.
    """

    def __init__(self, message, trace=None, partial=None):
        super().__init__(message)
        self.trace = trace
        self.partial = partial
