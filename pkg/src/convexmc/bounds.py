"""Closed-form error bounds, burn-in rules, and certified sampler plans.

Burn-in formulas mix decimal constants (4.51e15, 4.16, 5.92e6, ...) with a
few irrational factors. The decimal parts are evaluated as exact rationals;
log terms enter in double precision, and quotients within a relative 1e-9 of
an integer are snapped to it before the ceiling, so the published integer
constants reproduce exactly.
"""

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .errors import GammaDegenerate, InvalidCnu, LambdaOutOfRange, PhiOutOfRange

_SNAP_REL = 1e-9


def _ceil_snapped(value: Fraction) -> int:
    nearest = round(value)
    if abs(value - nearest) <= _SNAP_REL * max(1, abs(nearest)):
        return int(nearest)
    return math.ceil(value)


def stationary_mse_bound(n: int, lam: float) -> float:
    """Worst-case mean square error 2 / (n (1 - lam)) for a stationary start
    and unit-L2 integrands."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if lam >= 1.0:
        raise LambdaOutOfRange(f"lam = {lam} must be < 1")
    return 2.0 / (n * (1.0 - lam))


def mse_bound(n: int, n0: int, lam: float, gamma: float, c_nu: float) -> float:
    """Non-stationary mean square error bound:

        2 / (n (1 - lam))  +  2 c_nu gamma^n0 / (n^2 (1 - gamma)^2).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n0 < 0:
        raise ValueError("n0 must be >= 0")
    if lam >= 1.0:
        raise LambdaOutOfRange(f"lam = {lam} must be < 1")
    if not (0.0 <= gamma < 1.0):
        raise ValueError(f"gamma = {gamma} must lie in [0, 1)")
    if c_nu < 0:
        raise ValueError("c_nu must be >= 0")
    head = 2.0 / (n * (1.0 - lam))
    tail = 2.0 * c_nu * gamma**n0 / (n * n * (1.0 - gamma) ** 2)
    return head + tail


def c_nu_p2(m_const: float, sup_norm: float) -> float:
    """Initial-distribution constant M * ||d nu/d pi - 1||_inf (unit-L2
    integrands, geometric L1 decay with constant M)."""
    return m_const * sup_norm


def c_nu_p4(l2_norm: float) -> float:
    """Initial-distribution constant 64 * ||d nu/d pi - 1||_2 (unit-L4
    integrands, spectral-gap route)."""
    return 64.0 * l2_norm


def burn_in(c_nu: float, gamma: float) -> int:
    """Almost-optimal burn-in ceil(log(c_nu) / (1 - gamma)).

    Uses the natural logarithm (the optimality interval rests on
    log(1/gamma) >= 1 - gamma). c_nu below 1 warns and returns 0.
    """
    if not (0.0 <= gamma < 1.0):
        raise ValueError(f"gamma = {gamma} must lie in [0, 1)")
    if c_nu < 1.0:
        warnings.warn(
            f"c_nu = {c_nu} < 1 gives a negative log; no burn-in needed", InvalidCnu
        )
        return 0
    quotient = Fraction(math.log(c_nu)) / (1 - Fraction(gamma))
    return max(0, _ceil_snapped(quotient))


def cheeger_bracket(phi: float) -> tuple[float, float]:
    """Bracket (phi^2 / 2, 2 phi) that contains 1 - lam."""
    if not (0.0 <= phi <= 1.0):
        raise PhiOutOfRange(f"phi = {phi} must lie in [0, 1]")
    return phi * phi / 2.0, 2.0 * phi


@dataclass(frozen=True)
class SamplerPlan:
    """Certified sampling plan: rate parameter, burn-in, and an error bound
    as a function of the sample count.

    ``bound_kind`` tags whether bound(n) controls the error or the squared
    error. ``gamma`` is 1 minus the certified gap lower bound; ``c_nu`` is
    the initial-distribution constant when one is exposed.
    """

    provenance: str
    gamma: float
    c_nu: Optional[float]
    n0: int
    bound_kind: str
    params: dict
    notes: tuple = ()
    _bound: Callable[[int], float] = field(repr=False, compare=False, default=None)

    def bound(self, n: int) -> float:
        if n < 1:
            raise ValueError("n must be >= 1")
        return self._bound(n)

    def to_dict(self, n_values=()) -> dict:
        return {
            "provenance": self.provenance,
            "gamma": self.gamma,
            "c_nu": self.c_nu,
            "n0": self.n0,
            "bound_kind": self.bound_kind,
            "params": self.params,
            "notes": list(self.notes),
            "bound_at": {str(n): self.bound(n) for n in n_values},
        }


def har_plan(d: int, r: float) -> SamplerPlan:
    """Hit-and-run plan for a convex body between the unit ball and the
    radius-r ball, started uniformly on the unit ball.

    Conductance is at least 2^-25 / (d r); the operator is positive
    semidefinite, so the lower Cheeger branch certifies a gap of
    2^-51 / (d r)^2. Burn-in and the error bound carry the published
    constants; they are astronomically conservative.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if r < 1:
        raise ValueError("r must be >= 1")
    conductance_lb = 2.0**-25 / (d * r)
    gap_lb = 2.0**-51 / (d * r) ** 2

    log_r = Fraction(0) if r == 1 else Fraction(math.log(r))
    n0 = _ceil_snapped(
        Fraction(451, 100) * 10**15 * d * d * Fraction(r) ** 2
        * (d * log_r + Fraction(104, 25))
    )

    def bound(n: int) -> float:
        return 9.5e7 * d * r / math.sqrt(n) + 6.4e15 * d * d * r * r / n

    return SamplerPlan(
        provenance="hit_and_run",
        gamma=1.0 - gap_lb,
        c_nu=None,
        n0=n0,
        bound_kind="error",
        params={
            "d": d,
            "r": r,
            "conductance_lb": conductance_lb,
            "gap_lb": gap_lb,
            "initial_distribution": "uniform_on_unit_ball",
        },
        _bound=bound,
    )


def indep_mh_plan(c: float, vol: float) -> SamplerPlan:
    """Independent Metropolis plan with the uniform proposal over the body,
    for densities bounded between 1 and c, started from the proposal.

    The kernel is uniformly ergodic with rate gamma = 1 - 1/(c vol) and
    constant 1, hence geometrically L1-convergent with constant 2; the gap
    is at least 1/(c vol). c_nu = 4c feeds the squared-error bound
    2 c vol / n + 4 c^2 vol^2 / n^2.
    """
    if c < 1:
        raise ValueError("c must be >= 1")
    if vol <= 0:
        raise ValueError("vol must be positive")
    notes = ()
    gap_lb = 1.0 / (c * vol)
    if gap_lb > 1.0:
        warnings.warn(
            f"1/(c vol) = {gap_lb} exceeds 1 (vol < 1/c); clamping the gap",
            GammaDegenerate,
        )
        notes = (f"gamma formula degenerate: 1/(c*vol) = {gap_lb} clamped to 1",)
        gap_lb = 1.0
    gamma = 1.0 - gap_lb

    n0 = _ceil_snapped(Fraction(c) * Fraction(vol) * Fraction(math.log(2.0 * c)))

    def bound(n: int) -> float:
        return 2.0 * c * vol / n + 4.0 * c * c * vol * vol / (n * n)

    return SamplerPlan(
        provenance="independent_mh_uniform",
        gamma=gamma,
        c_nu=4.0 * c,
        n0=max(0, n0),
        bound_kind="squared_error",
        params={
            "c": c,
            "vol": vol,
            "gap_lb": gap_lb,
            "initial_distribution": "uniform_on_body",
        },
        notes=notes,
        _bound=bound,
    )


def ball_walk_plan(alpha: float, d: int) -> SamplerPlan:
    """Lazy ball-walk Metropolis plan on the unit ball for log-concave
    densities with alpha-Lipschitz logarithm, started uniformly.

    Step radius delta = min{1/sqrt(d+1), 1/alpha}; the conductance is at
    least 0.0025 delta / sqrt(d+1), and the lazy chain's gap at least a
    quarter of the squared conductance.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if d < 1:
        raise ValueError("d must be >= 1")
    delta = min(1.0 / math.sqrt(d + 1), 1.0 / alpha)
    conductance_lb = 0.0025 / math.sqrt(d + 1) * delta
    gap_lb = conductance_lb**2 / 4.0

    a = Fraction(alpha)
    n0 = _ceil_snapped(
        5_920_000 * (d + 1) * max(a * a, Fraction(d + 1)) * (2 * a + Fraction(104, 25))
    )

    dmax = max(alpha * alpha, float(d + 1))

    def bound(n: int) -> float:
        return (
            1089.0 * math.sqrt(d + 1) * max(alpha, math.sqrt(d + 1)) / math.sqrt(n)
            + 8.38e5 * (d + 1) * dmax / n
        )

    return SamplerPlan(
        provenance="lazy_ball_walk",
        gamma=1.0 - gap_lb,
        c_nu=None,
        n0=n0,
        bound_kind="error",
        params={
            "alpha": alpha,
            "d": d,
            "delta": delta,
            "conductance_lb": conductance_lb,
            "gap_lb": gap_lb,
            "initial_distribution": "uniform_on_unit_ball",
        },
        _bound=bound,
    )


def lower_bound(c: float, n: int) -> float:
    """Error every randomized method using n evaluations must incur on the
    bounded class: (sqrt(2)/6) * sqrt(c/(2n)) once 2n >= c - 1, else
    (sqrt(2)/6) * 3c / (c + 2n - 1)."""
    if c < 1:
        raise ValueError("c must be >= 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    scale = math.sqrt(2.0) / 6.0
    if 2 * n >= c - 1:
        return scale * math.sqrt(c / (2.0 * n))
    return scale * 3.0 * c / (c + 2.0 * n - 1.0)
