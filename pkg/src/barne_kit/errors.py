"""Exception types shared across the package."""


class BudgetExceededError(RuntimeError):
    """An exhaustive enumeration would exceed its evaluation budget."""


class SymmetryRequiredError(ValueError):
    """A count-based check was invoked on a game not marked symmetric."""


class InvalidAssignmentError(ValueError):
    """Byzantine and rational index sets overlap or fall outside the game."""


class MismatchedPointsError(ValueError):
    """Simplex points being compared do not share the same population size."""


class MismatchedConfigError(ValueError):
    """A simulation result was compared against a different configuration."""


class InvalidConfigError(ValueError):
    """A configuration violates one or more invariants.

    Carries the full violation list so callers can report all of them at once.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class NoConvergenceError(RuntimeError):
    """The mixed-equilibrium search could not reach the requested tolerance.

    Carries the best iterate found and its regret.
    """

    def __init__(self, best_weights, best_regret):
        self.best_weights = best_weights
        self.best_regret = best_regret
        super().__init__(f"search stalled at regret {best_regret}")
