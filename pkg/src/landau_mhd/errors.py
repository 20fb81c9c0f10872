"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a closed-form map."""


class SingularPointError(ValueError):
    """Evaluation requested at the singular point of the background."""


class ConfigurationError(ValueError):
    """A configuration is inconsistent or under-resolved."""


class ContractError(ValueError):
    """An input violates a documented contract (e.g. not solenoidal)."""


class BlowUpError(RuntimeError):
    """A trajectory produced non-finite values or grew too fast.

    Attributes
    ----------
    record : dict
        Diagnostic record of the step that failed.
    """

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record or {}


class InsufficientRangeError(ValueError):
    """A fit window spans too short a range to be meaningful."""
