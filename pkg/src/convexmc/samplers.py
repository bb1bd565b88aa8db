"""Single-step Markov transitions over convex bodies and densities.

Each step consumes random draws in a fixed order (direction or proposal
first, acceptance uniform last) so that a trajectory is a pure function of
the generator state. Acceptance ratios are formed in the log domain and
clamped to [0, 1].
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .densities import TargetDensity
from .errors import DomainViolation, NoAcceptedPoints, PointOutside
from .geometry import ConvexBody, chord, sphere_direction, uniform_in_ball, uniform_in_body
from .spectral import FiniteChain


@dataclass(frozen=True)
class AcceptanceDecision:
    proposal: np.ndarray
    alpha: float
    accepted: bool


@dataclass(frozen=True)
class ProposalPair:
    """A proposal sampler together with its transition density.

    ``sample(x, rng)`` draws a proposal from the current point;
    ``log_density(x, y)`` is log q(x, y), with -inf where q vanishes.
    """

    sample: Callable[[np.ndarray, np.random.Generator], np.ndarray]
    log_density: Callable[[np.ndarray, np.ndarray], float]


def symmetric_pair(sample) -> ProposalPair:
    """Proposal with q(x, y) = q(y, x); the density cancels in the ratio."""
    return ProposalPair(sample=sample, log_density=lambda x, y: 0.0)


def independent_pair(sample, log_eta) -> ProposalPair:
    """Proposal with q(x, y) = eta(y), independent of the current point."""
    return ProposalPair(sample=sample, log_density=lambda x, y: log_eta(y))


def acceptance_probability(pair: ProposalPair, rho: TargetDensity, x, y) -> float:
    """alpha(x, y): 1 when q(x, y) rho(x) = 0, else the clamped ratio
    q(y, x) rho(y) / (q(x, y) rho(x))."""
    log_fwd = pair.log_density(x, y)
    if log_fwd == -math.inf:
        return 1.0
    log_acc = pair.log_density(y, x) - log_fwd + rho.log_ratio(y, x)
    return math.exp(min(0.0, log_acc))


def mh_step(
    pair: ProposalPair,
    rho: TargetDensity,
    x,
    rng: np.random.Generator,
) -> tuple[AcceptanceDecision, np.ndarray]:
    """One Metropolis-Hastings transition: propose, then accept or stay.

    Raises DomainViolation if the pair's own sampler emits a point where its
    density is zero (an inconsistent proposal pair). One acceptance uniform
    is always drawn, whatever alpha is.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(pair.sample(x, rng), dtype=float)
    if pair.log_density(x, y) == -math.inf:
        raise DomainViolation("proposal sampler emitted a point of zero proposal density")
    alpha = acceptance_probability(pair, rho, x, y)
    accepted = rng.random() < alpha
    decision = AcceptanceDecision(proposal=y, alpha=alpha, accepted=accepted)
    return decision, (y if accepted else x)


def hit_and_run_step(body: ConvexBody, x, rng: np.random.Generator) -> np.ndarray:
    """Uniform point on a uniformly-directed chord through x.

    Draw order: direction (dim normals), then one uniform for the line
    parameter. If the endpoint lands a floating-point hair outside, the
    parameter is pulled back into the verified interval.
    """
    x = np.asarray(x, dtype=float)
    if not body.membership(x):
        raise PointOutside("hit-and-run start is outside the body")
    theta = sphere_direction(body.dim, rng)
    t_min, t_max = chord(body, x, theta)
    t = rng.uniform(t_min, t_max)
    y = x + t * theta
    while not body.membership(y):
        t *= 1.0 - 1e-9  # boundary tie: shrink toward the interior point x
        y = x + t * theta
    return y


def independent_mh_step(
    body: ConvexBody, rho: TargetDensity, x, rng: np.random.Generator
) -> np.ndarray:
    """Uniform proposal over the body, accepted with min{1, rho(y)/rho(x)}."""
    x = np.asarray(x, dtype=float)
    y, _ = uniform_in_body(body, rng)
    alpha = math.exp(min(0.0, rho.log_ratio(y, x)))
    return y if rng.random() < alpha else x


def ball_walk_mh_step(
    rho: TargetDensity, delta: float, x, rng: np.random.Generator
) -> np.ndarray:
    """Ball-walk Metropolis step on the unit ball.

    Proposes uniformly in the radius-delta ball around x; proposals leaving
    the unit ball keep the chain in place, otherwise accept with
    min{1, rho(y)/rho(x)}. Consumes dim+1 draws for the proposal and one
    acceptance uniform regardless of the branch taken.
    """
    x = np.asarray(x, dtype=float)
    if float(x @ x) > 1.0:
        raise PointOutside("ball walk state left the unit ball")
    y = x + uniform_in_ball(x.shape[0], delta, rng)
    u = rng.random()
    if float(y @ y) > 1.0:
        return x
    alpha = math.exp(min(0.0, rho.log_ratio(y, x)))
    return y if u < alpha else x


def ball_walk_delta(alpha: float, dim: int) -> float:
    """Step radius min{1/sqrt(dim+1), 1/alpha} used by the certified plan."""
    return min(1.0 / math.sqrt(dim + 1), 1.0 / alpha)


def lazy_step(inner, x, rng: np.random.Generator):
    """Stay put with probability 1/2, else delegate one step to ``inner``."""
    if rng.random() < 0.5:
        return x
    return inner.step(x, rng)


@dataclass(frozen=True)
class BaselineResult:
    estimate: float
    n_proposals: int
    n_accepted: int
    acceptance_rate: float


def rejection_baseline(
    body: ConvexBody, f, n: int, rng: np.random.Generator
) -> BaselineResult:
    """Acceptance/rejection from the outer ball: keep members, average f.

    The acceptance rate is vol(G)/vol(rB), which collapses like r^{-dim}
    for thin bodies; NoAcceptedPoints is raised when the whole budget is
    rejected.
    """
    if n < 1:
        raise ValueError("need at least one proposal")
    accepted_sum = 0.0
    accepted = 0
    for _ in range(n):
        candidate = uniform_in_ball(body.dim, body.outer_radius, rng)
        if body.membership(candidate):
            accepted += 1
            accepted_sum += float(f(candidate))
    if accepted == 0:
        raise NoAcceptedPoints(
            f"all {n} proposals from the radius-{body.outer_radius} ball were rejected"
        )
    return BaselineResult(
        estimate=accepted_sum / accepted,
        n_proposals=n,
        n_accepted=accepted,
        acceptance_rate=accepted / n,
    )


# step-kernel wrappers


@dataclass(frozen=True)
class HitAndRunKernel:
    body: ConvexBody

    @property
    def descriptor(self) -> dict:
        return {"sampler": "hit_and_run", "body": self.body.descriptor}

    def step(self, x, rng):
        return hit_and_run_step(self.body, x, rng)


@dataclass(frozen=True)
class IndependentMHKernel:
    body: ConvexBody
    rho: TargetDensity

    @property
    def descriptor(self) -> dict:
        return {
            "sampler": "independent_mh",
            "body": self.body.descriptor,
            "density": self.rho.descriptor,
        }

    def step(self, x, rng):
        return independent_mh_step(self.body, self.rho, x, rng)


@dataclass(frozen=True)
class BallWalkKernel:
    rho: TargetDensity
    delta: float

    @property
    def descriptor(self) -> dict:
        return {
            "sampler": "ball_walk",
            "delta": self.delta,
            "density": self.rho.descriptor,
        }

    def step(self, x, rng):
        return ball_walk_mh_step(self.rho, self.delta, x, rng)


@dataclass(frozen=True)
class LazyKernel:
    inner: object

    @property
    def descriptor(self) -> dict:
        return {"sampler": "lazy", "inner": self.inner.descriptor}

    def step(self, x, rng):
        return lazy_step(self.inner, x, rng)


class FiniteChainKernel:
    """Finite-state chain embedded as a step kernel over integer states."""

    def __init__(self, chain: FiniteChain):
        self.chain = chain
        self._cumulative = np.cumsum(chain.kernel, axis=1)
        self._cumulative[:, -1] = 1.0

    @property
    def descriptor(self) -> dict:
        return {"sampler": "finite_chain", "m": self.chain.m}

    def step(self, state, rng):
        row = self._cumulative[int(state)]
        return int(np.searchsorted(row, rng.random(), side="right"))

    def stationary_init(self):
        """Initial sampler drawing from the stationary vector."""
        cum = np.cumsum(self.chain.pi)
        cum[-1] = 1.0
        return lambda rng: int(np.searchsorted(cum, rng.random(), side="right"))
