"""Exception hierarchy shared by all gramforge modules."""


class GramforgeError(Exception):
    """Base class for all errors raised by gramforge."""


class ParseError(GramforgeError):
    """Malformed input file or unknown graph name."""


class InvalidEdgeError(GramforgeError, ValueError):
    pass


class InfeasibleError(GramforgeError):
    """The requested object does not exist for the given input."""


class InfeasibleWidthError(InfeasibleError):
    pass


class InfeasibleDataError(InfeasibleError):
    """Partial matrix admits no psd completion."""


class InconsistentOverlapError(InfeasibleError):
    pass


class InvalidStretchError(GramforgeError, ValueError):
    pass


class InvalidEDMDataError(GramforgeError, ValueError):
    pass


class NumericalError(GramforgeError):
    """A numerical routine failed; ``diagnostics`` carries whatever is known."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NotPSDError(NumericalError):
    pass


class AlignmentError(NumericalError):
    pass


class RankStructureError(NumericalError):
    pass


class SearchBudgetExceeded(GramforgeError):
    """An exhaustive search hit its node budget before finishing."""
