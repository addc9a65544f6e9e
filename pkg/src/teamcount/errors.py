"""Exception types shared across the package."""


class TeamCountError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(TeamCountError):
    def __init__(self, message, position):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class VocabularyError(TeamCountError):
    """Relation name or arity does not match a declared vocabulary."""


class NormalFormError(TeamCountError):
    """Formula is not in the required prenex/atom normal form."""

    def __init__(self, message, offending=None):
        super().__init__(message)
        self.offending = offending


class EncodingError(TeamCountError):
    """Input violates the preconditions of a structure encoding."""


class EvaluationError(TeamCountError):
    """Unbound variable, unregistered atom, or unsupported node during evaluation."""


class RegistryError(TeamCountError):
    """Generalized-atom registry misuse (duplicate or unknown name)."""


class BudgetExceededError(TeamCountError):
    """An enumeration exceeded the configured candidate budget."""


class OracleFaultError(TeamCountError):
    """An oracle returned a value the calling reduction proves impossible."""
