"""Exception hierarchy shared by all focklab modules."""

import numpy as np


class FockLabError(Exception):
    pass


class InvalidArgumentError(FockLabError, ValueError):
    pass


class InvalidWeightError(InvalidArgumentError):
    """A weight failed positivity or has a vanishing set mass."""


class NumericalDomainError(FockLabError, ArithmeticError):
    """A quantity evaluated to a non-finite value.

    ``point`` carries the offending evaluation point when one is known.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = None if point is None else np.asarray(point, dtype=float)


class DivergenceError(NumericalDomainError):
    """A truncated integral or lattice sum failed its refinement check."""


class ConfigError(InvalidArgumentError):
    """A configuration failed validation; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))
