"""Exception types shared across modules."""


class GameError(Exception):
    pass


class InvalidMatrix(GameError, ValueError):
    pass


class NonUniqueEquilibrium(GameError):
    """Raised when the game has more than one equilibrium.

    ``witness`` holds a second equilibrium ``(x, y)`` when one was found, or
    None when non-uniqueness was detected from a tied exclusion inequality.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class DegenerateMatrix(GameError):
    pass


class InfeasibleAnchor(GameError, ValueError):
    pass


class ModeMismatch(GameError, ValueError):
    pass


class UnsampledCell(GameError):
    pass


class InconsistentObservation(GameError, ValueError):
    pass


class HorizonExhausted(GameError):
    pass


class RewardOutOfRange(GameError, ValueError):
    pass


class InvalidFamilyParams(GameError, ValueError):
    pass


class IndexOutOfRange(GameError, IndexError):
    pass


class SupportMismatch(GameError, ValueError):
    pass


class ConfigError(ValueError):
    """Raised with every validation problem found in a sweep config."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
