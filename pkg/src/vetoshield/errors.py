"""Semantic exception hierarchy shared by all solver modules."""


class VetoshieldError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(VetoshieldError):
    """Objects defined over mismatched type or outcome spaces."""


class InvalidDistributionError(VetoshieldError):
    """A probability table is negative or fails to normalize."""


class InvalidWeightsError(VetoshieldError):
    """Mixture weight rows are negative or do not sum to one."""


class UndefinedConditionalError(VetoshieldError):
    """Conditioning on a zero-probability type."""


class ImpossibleSignalError(VetoshieldError):
    """Updating on a signal realization with zero probability."""


class BeliefSupportError(VetoshieldError):
    """A posterior escapes the support of its base structure."""


class InfeasibleSplittingError(VetoshieldError):
    """A posterior lottery is not Bayes plausible, so no device induces it."""


class DomainError(VetoshieldError):
    """A belief point lies outside the simplex."""


class ResolutionExhaustedError(VetoshieldError):
    """No equilibrium found at the enumeration resolution.

    ``max_support`` records the largest support size that was tried.
    """

    def __init__(self, message: str, max_support: int):
        super().__init__(message)
        self.max_support = max_support


class InfeasibleMechanismError(VetoshieldError):
    """The mechanism program is infeasible.

    ``relaxation`` is the smallest uniform amount by which every
    participation bound must be lowered to restore feasibility.
    """

    def __init__(self, message: str, relaxation: float):
        super().__init__(message)
        self.relaxation = relaxation


class ConstructionPreconditionError(VetoshieldError):
    """A veto equilibrium failed its internal consistency checks."""


class InstanceTooLargeError(VetoshieldError):
    """A brute-force enumeration would exceed the configured cap."""


class LPError(VetoshieldError):
    """Linear program could not be solved."""


class LPInfeasibleError(LPError):
    """Linear program has no feasible point."""


class LPUnboundedError(LPError):
    """Linear program objective is unbounded below."""
