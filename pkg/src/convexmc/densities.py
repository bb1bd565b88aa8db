"""Target densities: bounded-ratio and log-Lipschitz log-concave classes.

Densities are positive oracles evaluated in the log domain. A density can
declare which class it belongs to (bounded between 1 and C, or log-Lipschitz
with constant alpha on the unit ball); ``check_class`` probes the declared
class on sampled points and reports the worst violations.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import InvalidC


@dataclass(frozen=True)
class BoundedClass:
    """Declares 1 <= rho(x) <= c on the domain."""

    c: float


@dataclass(frozen=True)
class LogLipschitz:
    """Declares |log rho(x) - log rho(y)| <= alpha |x - y| and log-concavity
    on the unit ball."""

    alpha: float


ClassMeta = Union[BoundedClass, LogLipschitz]


@dataclass(frozen=True)
class TargetDensity:
    """Positive density oracle with log-domain evaluation.

    ``log_density`` maps points (last axis = coordinates) to log values and
    may be vectorized. ``log_ratio`` exists so that rescaled densities can
    cancel their scale factor exactly instead of through float addition.
    """

    dim: int
    log_density: Callable[[np.ndarray], np.ndarray]
    class_meta: Optional[ClassMeta] = None
    descriptor: dict = field(default_factory=dict)

    def log_eval(self, x) -> float:
        return float(self.log_density(np.asarray(x, dtype=float)))

    def eval(self, x) -> float:
        return math.exp(self.log_eval(x))

    def log_ratio(self, y, x) -> float:
        """log rho(y) - log rho(x); scale factors cancel bit for bit."""
        return self.log_eval(y) - self.log_eval(x)


@dataclass(frozen=True)
class _RescaledDensity(TargetDensity):
    base: TargetDensity = None

    def log_ratio(self, y, x) -> float:
        return self.base.log_ratio(y, x)


def constant_density(dim: int) -> TargetDensity:
    """rho identically 1; the bounded class with C = 1."""

    def log_density(pts):
        pts = np.asarray(pts, dtype=float)
        return np.zeros(pts.shape[:-1])

    return TargetDensity(
        dim=dim,
        log_density=log_density,
        class_meta=BoundedClass(1.0),
        descriptor={"kind": "constant"},
    )


def gaussian_density(alpha: float, dim: int) -> TargetDensity:
    """rho(x) = exp(-alpha |x|^2), unnormalized.

    On the unit ball the log gradient has norm 2*alpha*|x| <= 2*alpha, so the
    density is log-Lipschitz with constant 2*alpha; it is log-concave
    everywhere.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")

    def log_density(pts):
        pts = np.asarray(pts, dtype=float)
        return -alpha * np.sum(np.square(pts), axis=-1)

    return TargetDensity(
        dim=dim,
        log_density=log_density,
        class_meta=LogLipschitz(2.0 * alpha),
        descriptor={"kind": "gaussian", "alpha": alpha},
    )


def rescale_to_bounded(rho: TargetDensity, c: float, sup_norm: float) -> TargetDensity:
    """Return C * rho / sup_norm, declared as bounded between 1 and C.

    The caller asserts sup rho / inf rho <= C and supplies sup_norm = the
    supremum of rho on the domain. Acceptance ratios are untouched: the
    normalized measure does not see the scale factor.
    """
    if c < 1.0:
        raise InvalidC(f"bounded-class constant {c} < 1")
    if sup_norm <= 0:
        raise ValueError("sup_norm must be positive")
    log_scale = math.log(c) - math.log(sup_norm)
    base_log = rho.log_density

    def log_density(pts):
        return log_scale + base_log(pts)

    return _RescaledDensity(
        dim=rho.dim,
        log_density=log_density,
        class_meta=BoundedClass(c),
        descriptor={"kind": "rescaled", "c": c, "base": rho.descriptor},
        base=rho,
    )


@dataclass(frozen=True)
class ClassReport:
    """Worst observed violations of a density's declared class."""

    passed: bool
    worst_lipschitz_ratio: float = 0.0
    lipschitz_witness: Optional[tuple] = None
    worst_concavity_defect: float = 0.0
    concavity_witness: Optional[tuple] = None
    worst_bound_violation: float = 0.0
    bound_witness: Optional[np.ndarray] = None


def check_class(
    rho: TargetDensity,
    points: np.ndarray,
    n_pairs: int = 500,
    n_triples: int = 500,
    rng: Optional[np.random.Generator] = None,
    tol: float = 1e-9,
) -> ClassReport:
    """Probe the declared class on the given domain points.

    For a log-Lipschitz declaration, samples index pairs and checks the
    Lipschitz ratio, and samples triples (x, y, lambda) for log-concavity.
    For a bounded declaration, checks 1 <= rho <= C pointwise. The report
    passes iff all observed values stay within the declaration plus tol.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != rho.dim:
        raise ValueError(f"points must have shape (n, {rho.dim})")
    if rng is None:
        rng = np.random.default_rng(0)
    meta = rho.class_meta
    if meta is None:
        raise ValueError("density declares no class to check")

    logs = np.array([rho.log_eval(p) for p in points])

    if isinstance(meta, BoundedClass):
        worst = float(np.max(np.maximum(-logs, logs - math.log(meta.c))))
        violation = math.expm1(max(worst, 0.0)) if worst > 0 else 0.0
        witness = points[int(np.argmax(np.maximum(-logs, logs - math.log(meta.c))))]
        return ClassReport(
            passed=worst <= tol,
            worst_bound_violation=max(violation, 0.0),
            bound_witness=witness if worst > tol else None,
        )

    n = points.shape[0]
    worst_ratio = 0.0
    ratio_witness = None
    for _ in range(n_pairs):
        i, j = rng.integers(0, n, size=2)
        if i == j:
            continue
        dist = float(np.linalg.norm(points[i] - points[j]))
        if dist < 1e-12:
            continue
        ratio = abs(logs[i] - logs[j]) / dist
        if ratio > worst_ratio:
            worst_ratio = ratio
            ratio_witness = (points[i].copy(), points[j].copy())

    worst_defect = 0.0
    defect_witness = None
    for _ in range(n_triples):
        i, j = rng.integers(0, n, size=2)
        lam = float(rng.uniform(0.0, 1.0))
        mix = lam * points[i] + (1 - lam) * points[j]
        defect = lam * logs[i] + (1 - lam) * logs[j] - rho.log_eval(mix)
        if defect > worst_defect:
            worst_defect = defect
            defect_witness = (points[i].copy(), points[j].copy(), lam)

    passed = worst_ratio <= meta.alpha + tol and worst_defect <= tol
    return ClassReport(
        passed=passed,
        worst_lipschitz_ratio=worst_ratio,
        lipschitz_witness=ratio_witness if worst_ratio > meta.alpha + tol else None,
        worst_concavity_defect=worst_defect,
        concavity_witness=defect_witness if worst_defect > tol else None,
    )


def density_from_config(config: dict, dim: int) -> TargetDensity:
    """Build a density from {"kind": "gaussian", "alpha": a} or {"kind": "constant"}."""
    kind = config.get("kind")
    if kind == "constant":
        return constant_density(dim)
    if kind == "gaussian":
        return gaussian_density(float(config["alpha"]), dim)
    raise ValueError(f"unknown density kind {kind!r}")
