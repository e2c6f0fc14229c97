"""Exception types shared by all modules.

The CLI maps these onto exit codes: ``DomainError`` and
``PreconditionError`` are validation failures (3), ``AlgorithmFailure`` is
an inner construction that could not certify its own output (4).
"""


class HLKitError(Exception):
    pass


class DomainError(HLKitError, ValueError):
    """An argument lies outside the domain of the operation."""


class PreconditionError(HLKitError, ValueError):
    """A structural precondition (e.g. a family covering its target) fails."""


class AlgorithmFailure(HLKitError, RuntimeError):
    """A construction finished but one of its certificates is violated.

    ``condition`` names the violated condition so callers can report it.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition
