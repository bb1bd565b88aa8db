"""Exception types shared across the package."""


class ConvexMCError(Exception):
    """Base class for all convexmc errors."""


# finite-chain analysis

class NotStochastic(ConvexMCError):
    """A kernel row has negative entries or does not sum to one."""


class NotReversible(ConvexMCError):
    """Detailed balance fails beyond tolerance."""


class Reducible(ConvexMCError):
    """The stationary distribution is not unique or not strictly positive."""


class TooManyStates(ConvexMCError):
    """State count exceeds the exact-enumeration limit."""


class DimensionMismatch(ConvexMCError):
    """Vectors or matrices live on different state spaces."""


class UnsupportedP(ConvexMCError):
    """Operator norm requested for an unsupported exponent."""


class ZeroGap(ConvexMCError):
    """Convergence-rate fit is undefined because the gap vanishes."""


# geometry

class InvalidShape(ConvexMCError):
    """Body does not contain the unit ball."""


class PointOutside(ConvexMCError):
    """A point expected inside the body or domain is not."""


class BadDirection(ConvexMCError):
    """Direction vector is not unit length."""


class RejectionBudgetExceeded(ConvexMCError):
    """Rejection sampler exhausted its proposal budget."""


# samplers

class DomainViolation(ConvexMCError):
    """Proposal sampler emitted a point where its density is zero."""


class NoAcceptedPoints(ConvexMCError):
    """Rejection baseline accepted nothing within the budget."""


# densities

class InvalidC(ConvexMCError):
    """Bounded-class constant below one."""


# bounds

class LambdaOutOfRange(ConvexMCError):
    """Spectral parameter must be below one."""


class PhiOutOfRange(ConvexMCError):
    """Conductance must lie in [0, 1]."""


class GammaDegenerate(UserWarning):
    """The uniform-ergodicity rate formula left [0, 1); the plan is clamped."""


class InvalidCnu(UserWarning):
    """Burn-in constant below one; no burn-in is needed."""


# estimator

class NotConverged(ConvexMCError):
    """Successive quadrature levels disagree beyond tolerance."""


class DimensionTooHigh(ConvexMCError):
    """Tensor quadrature is only available in low dimension."""


# cli

class ConfigError(ConvexMCError):
    """Experiment configuration is malformed or inconsistent."""


class InfeasibleBurnIn(ConvexMCError):
    """The certified burn-in exceeds the configured feasibility cap."""
