"""Exception and warning types raised across the package."""


class TSFDError(Exception):
    """Base class for all package errors."""


class ProblemError(TSFDError, ValueError):
    """A ranking problem or policy is structurally malformed."""


class DomainError(TSFDError, ValueError):
    """A concave function was evaluated outside its domain."""


class MeritNonPositive(TSFDError, ValueError):
    """An item group has zero or negative merit."""


class Infeasible(TSFDError):
    """The item-fairness constraints admit no doubly stochastic solution."""


class InstanceTooLarge(TSFDError, ValueError):
    """An exhaustive oracle was asked to handle an instance beyond its limits."""


class NoPerfectMatching(TSFDError):
    """The bipartite item/position graph has no perfect matching."""


class NoCompletion(NoPerfectMatching):
    """No partial top-l assignment could be completed to a perfect matching."""


class DecompositionStalled(TSFDError):
    """Birkhoff decomposition found no perfect matching in a non-negligible residual."""


class NotConvergedWarning(UserWarning):
    """The fairness solver stopped at max_iterations before reaching its gap tolerance."""
