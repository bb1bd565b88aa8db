"""Convex bodies as membership oracles, chords, and uniform sampling.

Bodies are sandwiched between the unit ball and a ball of radius
``outer_radius``. Built-in shapes (ball, box, ellipsoid) carry analytic
chords, volumes, and exact samplers; arbitrary membership oracles fall back
to bisection chords and rejection sampling from the outer ball.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import (
    BadDirection,
    InvalidShape,
    PointOutside,
    RejectionBudgetExceeded,
)

_UNIT_TOL = 1e-12
_BISECTION_ITERATIONS = 60


class Interval(NamedTuple):
    """Chord parameter range: {t : x + t*theta inside the body}."""

    t_min: float
    t_max: float


@dataclass(frozen=True)
class ConvexBody:
    """Convex body with an inscribed unit ball.

    ``membership`` decides single points; ``membership_batch`` (optional)
    decides an (N, dim) array at once. ``chord_fn``, ``volume`` and
    ``exact_sampler`` are present for the analytic built-ins and absent for
    oracle-only bodies.
    """

    dim: int
    outer_radius: float
    membership: Callable[[np.ndarray], bool]
    descriptor: dict = field(default_factory=dict)
    membership_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    chord_fn: Optional[Callable[[np.ndarray, np.ndarray], Interval]] = None
    volume: Optional[float] = None
    exact_sampler: Optional[Callable[[np.random.Generator], np.ndarray]] = None

    def contains(self, x) -> bool:
        return bool(self.membership(np.asarray(x, dtype=float)))


def unit_ball_volume(dim: int) -> float:
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1)


def ball(radius: float, dim: int) -> ConvexBody:
    """Euclidean ball of the given radius; must contain the unit ball."""
    if radius < 1.0:
        raise InvalidShape(f"ball radius {radius} < 1 does not contain the unit ball")
    if dim < 1:
        raise InvalidShape("dimension must be >= 1")
    r2 = radius * radius

    def chord_fn(x, theta):
        q = float(x @ theta)
        disc = q * q + r2 - float(x @ x)
        root = math.sqrt(max(disc, 0.0))
        return Interval(-q - root, -q + root)

    return ConvexBody(
        dim=dim,
        outer_radius=radius,
        membership=lambda x: float(x @ x) <= r2,
        descriptor={"kind": "ball", "dim": dim, "param": radius},
        membership_batch=lambda pts: np.einsum("ij,ij->i", pts, pts) <= r2,
        chord_fn=chord_fn,
        volume=radius**dim * unit_ball_volume(dim),
        exact_sampler=lambda rng: uniform_in_ball(dim, radius, rng),
    )


def box(half_width: float, dim: int) -> ConvexBody:
    """Axis-aligned cube [-s, s]^dim; s >= 1 keeps the unit ball inside."""
    if half_width < 1.0:
        raise InvalidShape(f"box half width {half_width} < 1 does not contain the unit ball")
    if dim < 1:
        raise InvalidShape("dimension must be >= 1")
    s = half_width

    def chord_fn(x, theta):
        lo, hi = -math.inf, math.inf
        for i in range(dim):
            if theta[i] == 0.0:
                continue
            a = (-s - x[i]) / theta[i]
            b = (s - x[i]) / theta[i]
            lo = max(lo, min(a, b))
            hi = min(hi, max(a, b))
        return Interval(lo, hi)

    return ConvexBody(
        dim=dim,
        outer_radius=s * math.sqrt(dim),
        membership=lambda x: float(np.max(np.abs(x))) <= s,
        descriptor={"kind": "box", "dim": dim, "param": s},
        membership_batch=lambda pts: np.max(np.abs(pts), axis=1) <= s,
        chord_fn=chord_fn,
        volume=(2.0 * s) ** dim,
        exact_sampler=lambda rng: rng.uniform(-s, s, size=dim),
    )


def ellipsoid(semi_axes) -> ConvexBody:
    """Axis-aligned ellipsoid sum (x_i / a_i)^2 <= 1 with all a_i >= 1."""
    axes = np.asarray(semi_axes, dtype=float)
    if axes.ndim != 1 or axes.size < 1:
        raise InvalidShape("semi-axes must be a nonempty vector")
    if np.min(axes) < 1.0:
        raise InvalidShape("all semi-axes must be >= 1 to contain the unit ball")
    dim = axes.size
    inv = 1.0 / axes

    def chord_fn(x, theta):
        u = x * inv
        v = theta * inv
        a = float(v @ v)
        b = 2.0 * float(u @ v)
        c = float(u @ u) - 1.0
        disc = b * b - 4.0 * a * c
        root = math.sqrt(max(disc, 0.0))
        return Interval((-b - root) / (2.0 * a), (-b + root) / (2.0 * a))

    def sampler(rng):
        return axes * uniform_in_ball(dim, 1.0, rng)

    return ConvexBody(
        dim=dim,
        outer_radius=float(np.max(axes)),
        membership=lambda x: float(np.sum((x * inv) ** 2)) <= 1.0,
        descriptor={"kind": "ellipsoid", "dim": dim, "param": axes.tolist()},
        membership_batch=lambda pts: np.sum((pts * inv[None, :]) ** 2, axis=1) <= 1.0,
        chord_fn=chord_fn,
        volume=float(np.prod(axes)) * unit_ball_volume(dim),
        exact_sampler=sampler,
    )


def oracle_body(membership, dim: int, outer_radius: float, descriptor=None) -> ConvexBody:
    """Wrap a bare membership oracle; chords and sampling use fallbacks."""
    if outer_radius < 1.0:
        raise InvalidShape("outer radius must be >= 1")
    return ConvexBody(
        dim=dim,
        outer_radius=float(outer_radius),
        membership=membership,
        descriptor=descriptor or {"kind": "oracle", "dim": dim, "param": outer_radius},
    )


def make_body(kind: str, dim: int, param) -> ConvexBody:
    """Dispatch on the config triple {"kind", "dim", "param"}."""
    if kind == "ball":
        return ball(float(param), dim)
    if kind == "box":
        return box(float(param), dim)
    if kind == "ellipsoid":
        axes = np.asarray(param, dtype=float)
        if axes.size != dim:
            raise InvalidShape(f"need {dim} semi-axes, got {axes.size}")
        return ellipsoid(axes)
    raise InvalidShape(f"unknown body kind {kind!r}")


def chord(body: ConvexBody, x, theta) -> Interval:
    """Parameter interval of the line x + t*theta inside the body.

    Uses the analytic formula when the body has one, otherwise bisection on
    each side of x (convexity gives a single boundary crossing per ray).
    """
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if abs(float(np.linalg.norm(theta)) - 1.0) > _UNIT_TOL:
        raise BadDirection(f"|theta| = {np.linalg.norm(theta)} is not 1")
    if not body.membership(x):
        raise PointOutside("chord anchor is outside the body")
    if body.chord_fn is not None:
        return body.chord_fn(x, theta)
    t_max = _bisect_exit(body, x, theta)
    t_min = -_bisect_exit(body, x, -theta)
    return Interval(t_min, t_max)


def _bisect_exit(body: ConvexBody, x: np.ndarray, direction: np.ndarray) -> float:
    # anything past |x| + r is outside the outer ball, hence outside the body
    lo = 0.0
    hi = float(np.linalg.norm(x)) + body.outer_radius + 1e-6
    for _ in range(_BISECTION_ITERATIONS):
        mid = 0.5 * (lo + hi)
        if body.membership(x + mid * direction):
            lo = mid
        else:
            hi = mid
    return lo


def sphere_direction(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform unit vector, via a normalized standard Gaussian draw."""
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    while True:
        g = rng.standard_normal(dim)
        norm = float(np.linalg.norm(g))
        if norm > 1e-12:
            return g / norm


def uniform_in_ball(dim: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform point in the ball of the given radius (direction + radial CDF).

    Consumes exactly dim normal draws and one uniform draw.
    """
    direction = sphere_direction(dim, rng)
    u = rng.random()
    return radius * u ** (1.0 / dim) * direction


def uniform_in_body(
    body: ConvexBody, rng: np.random.Generator, max_trials: int = 100_000
) -> tuple[np.ndarray, int]:
    """Exact uniform sample from the body, plus the number of proposals used.

    Built-in bodies sample directly (one trial); oracle bodies reject from
    the outer ball until a member appears or the budget runs out.
    """
    if body.exact_sampler is not None:
        return body.exact_sampler(rng), 1
    for trial in range(1, max_trials + 1):
        candidate = uniform_in_ball(body.dim, body.outer_radius, rng)
        if body.membership(candidate):
            return candidate, trial
    raise RejectionBudgetExceeded(
        f"no member found in {max_trials} proposals from the outer ball; "
        "acceptance ~ vol(G)/vol(rB) may be collapsing"
    )
