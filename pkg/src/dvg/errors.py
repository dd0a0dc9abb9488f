"""Exception hierarchy shared by the dvg modules.

Every exception carries an ``exit_code`` so the command-line front end can map
failures onto its documented return codes (2 for bad input, 3 for numerical
failure) without inspecting messages.
"""


class DVGError(Exception):
    exit_code = 3


class ValidationError(DVGError, ValueError):
    """Malformed parameters or input files."""

    exit_code = 2

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = list(errors) if errors else [message]


class DomainError(DVGError, ValueError):
    """A moment generating function evaluated outside its existence domain."""


class BranchCutError(DomainError):
    """The argument of a complex logarithm/power came too close to the cut."""

    def __init__(self, message, step=None, argument=None):
        super().__init__(message)
        self.step = step
        self.argument = argument


class ConvergenceError(DVGError, RuntimeError):
    pass


class IntegrationError(DVGError, RuntimeError):
    pass


class MeasureChangeError(DVGError, ValueError):
    pass
