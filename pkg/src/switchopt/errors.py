"""Exception types shared across the package."""


class SwitchoptError(Exception):
    """Base class for all errors raised by this package."""


class SimplexError(SwitchoptError, ValueError):
    """A weight vector violates the simplex constraints beyond tolerance."""


class GridMismatchError(SwitchoptError, ValueError):
    """Two signals or trajectories do not share the required grid/layout."""


class DimensionError(SwitchoptError, ValueError):
    """An array argument has the wrong shape for the problem at hand."""


class IntegrationBlowupError(SwitchoptError, ArithmeticError):
    """Forward or backward integration produced a non-finite value.

    ``cell`` is the index of the control cell where the blowup occurred.
    """

    def __init__(self, message, cell):
        super().__init__(message)
        self.cell = cell


class ProjectionResolutionError(SwitchoptError, ValueError):
    """The requested pulse frequency produces segments thinner than 1e-12."""


class AdaptKError(SwitchoptError, RuntimeError):
    """No frequency exponent within [k0, k_max] met the required bound.

    Carries the best candidate found so callers can log it and continue.
    """

    def __init__(self, message, best_k, best_q):
        super().__init__(message)
        self.best_k = best_k
        self.best_q = best_q


class EnumerationBudgetError(SwitchoptError, ValueError):
    """The requested exhaustive enumeration exceeds the candidate budget."""


class ConfigError(SwitchoptError, ValueError):
    """A run or problem configuration file is malformed or inconsistent."""


class CostKinkWarning(UserWarning):
    """The cost gradient was requested exactly at a non-differentiable point."""
