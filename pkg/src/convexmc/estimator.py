"""Markov chain averages, replicated error measurement, and a quadrature
reference oracle.

The estimator runs ``n0 + n`` chain steps, discards the first ``n0`` states,
and averages the integrand over the remaining ``n``; the integrand is
evaluated exactly ``n`` times. Replications draw from substreams derived
from ``(base_seed, replication)`` so records are reproducible bit for bit,
whatever the thread count.
"""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionTooHigh, NotConverged
from .geometry import ConvexBody

RNG_ID = "numpy-pcg64/SeedSequence((base_seed, replication))"

_DEFAULT_QUAD_LEVELS = {1: 14, 2: 9, 3: 6}


def replication_rng(base_seed: int, index: int) -> np.random.Generator:
    """Generator for one replication, split off (base_seed, index)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((base_seed, index))))


def replication_seed_key(base_seed: int, index: int) -> int:
    """64-bit audit label of a replication's substream."""
    seq = np.random.SeedSequence((base_seed, index))
    return int(seq.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to rerun an experiment: kernel, start law, integrand,
    chain lengths, replication count, and the base seed."""

    kernel: object
    init: Callable[[np.random.Generator], object]
    f: Callable
    integrand: str
    n: int
    n0: int
    replications: int
    base_seed: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.n0 < 0:
            raise ValueError("n0 must be >= 0")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")


@dataclass(frozen=True)
class RunRecord:
    """Replicated experiment output; serializes to canonical JSON and CSV."""

    sampler: dict
    integrand: str
    n: int
    n0: int
    replications: int
    base_seed: int
    estimates: tuple
    mean: float
    reference: Optional[float]
    mse: Optional[float]
    mse_stderr: Optional[float]
    rng: str = RNG_ID
    schema_version: int = 1
    config: Optional[dict] = field(default=None)

    def to_dict(self) -> dict:
        out = {
            "schema_version": self.schema_version,
            "kind": "run_record",
            "sampler": self.sampler,
            "integrand": self.integrand,
            "n": self.n,
            "n0": self.n0,
            "replications": self.replications,
            "base_seed": self.base_seed,
            "rng": self.rng,
            "estimates": list(self.estimates),
            "mean": self.mean,
            "reference": self.reference,
            "mse": self.mse,
            "mse_stderr": self.mse_stderr,
        }
        if self.config is not None:
            out["config"] = self.config
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def estimates_csv(self) -> str:
        lines = ["replication,seed,estimate"]
        for i, est in enumerate(self.estimates):
            lines.append(f"{i},{replication_seed_key(self.base_seed, i)},{est!r}")
        return "\n".join(lines) + "\n"


def run_chain(kernel, init, f, n: int, n0: int, rng: np.random.Generator) -> float:
    """Average f over steps n0+1 .. n0+n of the chain started at init(rng).

    The initial draw counts as step 1; f is evaluated exactly n times.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n0 < 0:
        raise ValueError("n0 must be >= 0")
    x = init(rng)
    total = 0.0
    for step in range(1, n0 + n + 1):
        if step > 1:
            x = kernel.step(x, rng)
        if step > n0:
            total += float(f(x))
    return total / n


def empirical_error(
    spec: ExperimentSpec, reference: Optional[float] = None, threads: int = 1
) -> RunRecord:
    """Replicate the chain average and measure squared error against a
    reference value.

    Replication i runs on the substream for (base_seed, i); results are
    aggregated in index order, so the record does not depend on the thread
    count.
    """

    def one(index: int) -> float:
        rng = replication_rng(spec.base_seed, index)
        return run_chain(spec.kernel, spec.init, spec.f, spec.n, spec.n0, rng)

    indices = range(spec.replications)
    if threads <= 1:
        estimates = [one(i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            estimates = list(pool.map(one, indices))

    arr = np.asarray(estimates)
    mean = float(np.mean(arr))
    mse = mse_stderr = None
    if reference is not None:
        sq = (arr - reference) ** 2
        mse = float(np.mean(sq))
        if spec.replications > 1:
            mse_stderr = float(np.std(sq, ddof=1) / math.sqrt(spec.replications))

    return RunRecord(
        sampler=dict(spec.kernel.descriptor),
        integrand=spec.integrand,
        n=spec.n,
        n0=spec.n0,
        replications=spec.replications,
        base_seed=spec.base_seed,
        estimates=tuple(float(e) for e in estimates),
        mean=mean,
        reference=reference if reference is None else float(reference),
        mse=mse,
        mse_stderr=mse_stderr,
    )


def _bounding_half_widths(body: ConvexBody) -> np.ndarray:
    kind = body.descriptor.get("kind")
    if kind in ("ball", "box"):
        return np.full(body.dim, float(body.descriptor["param"]))
    if kind == "ellipsoid":
        return np.asarray(body.descriptor["param"], dtype=float)
    return np.full(body.dim, body.outer_radius)


def _membership_mask(body: ConvexBody, pts: np.ndarray) -> np.ndarray:
    if body.membership_batch is not None:
        return np.asarray(body.membership_batch(pts), dtype=bool)
    return np.array([body.membership(p) for p in pts], dtype=bool)


def _masked_sums(body, f, rho, level: int) -> tuple[float, float]:
    """Midpoint-rule sums of f*w and w over the body, w = rho or 1."""
    k = 1 << level
    half = _bounding_half_widths(body)
    axes = [(-h + (2 * h) * (np.arange(k) + 0.5) / k) for h in half]
    sum_w = 0.0
    sum_fw = 0.0
    # slab over the first axis to bound memory
    slab = max(1, (1 << 21) // max(1, k ** (body.dim - 1)))
    for start in range(0, k, slab):
        first = axes[0][start : start + slab]
        grids = np.meshgrid(first, *axes[1:], indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        mask = _membership_mask(body, pts)
        if not np.any(mask):
            continue
        pts = pts[mask]
        weights = np.ones(pts.shape[0]) if rho is None else np.exp(rho.log_density(pts))
        sum_w += float(np.sum(weights))
        sum_fw += float(np.sum(np.asarray(f(pts), dtype=float) * weights))
    return sum_fw, sum_w


def reference_quadrature(
    body: ConvexBody,
    f,
    rho=None,
    level: Optional[int] = None,
    tol: float = 1e-3,
) -> float:
    """Deterministic reference for the expectation of f over the body.

    Tensor midpoint rule with membership-masked weights; with a density the
    result is sum(f*rho)/sum(rho), otherwise the plain average over member
    cells. The value at ``level`` must agree with the value at ``level + 1``
    within ``tol`` (masking at a curved boundary converges slowly, so keep
    tol honest); the finer value is returned.
    """
    if body.dim > 3:
        raise DimensionTooHigh(f"tensor quadrature supports dim <= 3, got {body.dim}")
    if level is None:
        level = _DEFAULT_QUAD_LEVELS[body.dim]

    values = []
    for lv in (level, level + 1):
        sum_fw, sum_w = _masked_sums(body, f, rho, lv)
        if sum_w == 0.0:
            raise NotConverged("no grid cell fell inside the body")
        values.append(sum_fw / sum_w)
    coarse, fine = values
    if abs(fine - coarse) > tol:
        raise NotConverged(
            f"levels {level} and {level + 1} differ by {abs(fine - coarse):.3e} > {tol:.3e}"
        )
    return fine
