"""Batch front end: certified plans, experiment runs, spectral reports, and
the rejection baseline.

Exit codes are a stable contract: 0 success, 2 invalid input or config,
3 infeasible certified burn-in. Every output document embeds the schema
version and the resolved inputs; run records also carry the seed and the
generator identifier.
"""

import argparse
import dataclasses
import json
import math
import re
import sys
from typing import Optional

import numpy as np

from . import bounds, densities, estimator, geometry, samplers, spectral
from .errors import ConfigError, ConvexMCError, InfeasibleBurnIn

SCHEMA_VERSION = 1
DEFAULT_FEASIBILITY_CAP = 10_000_000

_COORD_RE = re.compile(r"^x([1-9][0-9]*)$")


def integrand(name: str, dim: int):
    """Named integrands; all operate on the last axis so they serve both the
    chain (single points) and the quadrature grid."""
    if name == "one":
        return lambda x: np.ones(np.asarray(x).shape[:-1])
    if name == "norm_sq":
        return lambda x: np.sum(np.square(np.asarray(x)), axis=-1)
    match = _COORD_RE.match(name)
    if match:
        index = int(match.group(1)) - 1
        if index >= dim:
            raise ConfigError(f"integrand {name!r} needs dim > {index}")
        return lambda x: np.asarray(x)[..., index]
    raise ConfigError(f"unknown integrand {name!r}")


def bounded_constant(body: geometry.ConvexBody, rho: densities.TargetDensity) -> float:
    """Ratio bound sup rho / inf rho over the body for the known densities."""
    kind = rho.descriptor.get("kind")
    if kind == "constant":
        return 1.0
    if kind == "gaussian":
        # sup |x|^2 over the body equals the squared outer radius
        return math.exp(rho.descriptor["alpha"] * body.outer_radius**2)
    raise ConfigError(f"no bounded-class constant for density {kind!r}")


def _uniform_unit_ball_init(dim):
    return lambda rng: geometry.uniform_in_ball(dim, 1.0, rng)


def scenario_plan(scenario: dict, body, rho) -> bounds.SamplerPlan:
    kind = scenario["sampler"]["sampler"]
    if kind == "hit_and_run":
        return bounds.har_plan(body.dim, body.outer_radius)
    if kind == "independent_mh":
        if body.volume is None:
            raise ConfigError("independent_mh plan needs a body with analytic volume")
        return bounds.indep_mh_plan(bounded_constant(body, rho), body.volume)
    if kind == "lazy_ball_walk":
        if rho.descriptor.get("kind") != "gaussian":
            raise ConfigError("ball-walk plan needs a gaussian density (alpha > 0)")
        return bounds.ball_walk_plan(rho.descriptor["alpha"], body.dim)
    raise ConfigError(f"no certified plan for sampler {kind!r}")


def build_scenario(scenario: dict):
    """Resolve a scenario block into (body, density, kernel, init, f)."""
    try:
        body_cfg = scenario["body"]
        body = geometry.make_body(body_cfg["kind"], int(body_cfg["dim"]), body_cfg["param"])
        rho = densities.density_from_config(scenario["density"], body.dim)
        f = integrand(scenario["integrand"], body.dim)
        sampler_cfg = scenario["sampler"]
        kind = sampler_cfg["sampler"]
    except KeyError as missing:
        raise ConfigError(f"scenario is missing {missing}") from None

    if kind == "hit_and_run":
        if rho.descriptor.get("kind") != "constant":
            raise ConfigError("hit_and_run targets the uniform law; use a constant density")
        kernel = samplers.HitAndRunKernel(body)
        init = _uniform_unit_ball_init(body.dim)
    elif kind == "independent_mh":
        kernel = samplers.IndependentMHKernel(body, rho)
        init = lambda rng: geometry.uniform_in_body(body, rng)[0]
    elif kind in ("ball_walk", "lazy_ball_walk"):
        if body.descriptor != {"kind": "ball", "dim": body.dim, "param": 1.0}:
            raise ConfigError("ball walk runs on the unit ball only")
        delta = sampler_cfg.get("delta", "auto")
        if delta == "auto":
            if rho.descriptor.get("kind") != "gaussian":
                raise ConfigError("delta='auto' needs a gaussian density")
            delta = samplers.ball_walk_delta(rho.descriptor["alpha"], body.dim)
        inner = samplers.BallWalkKernel(rho, float(delta))
        kernel = samplers.LazyKernel(inner) if kind == "lazy_ball_walk" else inner
        init = _uniform_unit_ball_init(body.dim)
    else:
        raise ConfigError(f"unknown sampler {kind!r}")
    return body, rho, kernel, init, f


def resolve_run(config: dict, seed_override: Optional[int] = None):
    """Turn a config document into an ExperimentSpec plus the resolved echo."""
    if config.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(
            f"unrecognized schema_version {config.get('schema_version')!r}"
        )
    try:
        scenario = config["scenario"]
        run = config["run"]
        n = int(run["n"])
        replications = int(run["replications"])
        seed = int(run["seed"]) if seed_override is None else int(seed_override)
        n0_raw = run["n0"]
    except KeyError as missing:
        raise ConfigError(f"config is missing {missing}") from None

    body, rho, kernel, init, f = build_scenario(scenario)

    if n0_raw == "auto":
        plan = scenario_plan(scenario, body, rho)
        cap = int(run.get("feasibility_cap", DEFAULT_FEASIBILITY_CAP))
        if plan.n0 > cap:
            raise InfeasibleBurnIn(
                f"certified burn-in n0 = {plan.n0} exceeds the feasibility cap "
                f"{cap}; the {plan.provenance} certificate is not runnable at "
                "this budget"
            )
        n0 = plan.n0
    else:
        n0 = int(n0_raw)

    reference = config.get("reference")
    if reference == "quadrature":
        weight = None if rho.descriptor.get("kind") == "constant" else rho
        reference = estimator.reference_quadrature(body, f, rho=weight)
    elif reference is not None:
        reference = float(reference)

    spec = estimator.ExperimentSpec(
        kernel=kernel,
        init=init,
        f=f,
        integrand=scenario["integrand"],
        n=n,
        n0=n0,
        replications=replications,
        base_seed=seed,
    )

    resolved = json.loads(json.dumps(config, sort_keys=True))
    resolved["run"]["n0"] = n0
    resolved["run"]["seed"] = seed
    if reference is not None:
        resolved["reference"] = reference
    return spec, reference, resolved


def _emit(text: str, out_path: Optional[str]) -> None:
    if out_path:
        with open(out_path, "w", newline="\n") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def cmd_plan(args) -> int:
    if args.plan_kind == "har":
        plan = bounds.har_plan(args.d, args.r)
    elif args.plan_kind == "indep-mh":
        plan = bounds.indep_mh_plan(args.C, args.vol)
    else:
        plan = bounds.ball_walk_plan(args.alpha, args.d)
    doc = {"schema_version": SCHEMA_VERSION, "kind": "sampler_plan"}
    doc.update(plan.to_dict(n_values=args.n or ()))
    _emit(json.dumps(doc, sort_keys=True, indent=2) + "\n", args.out)
    return 0


def cmd_run(args) -> int:
    with open(args.config) as handle:
        config = json.load(handle)
    spec, reference, resolved = resolve_run(config, seed_override=args.seed)
    record = estimator.empirical_error(spec, reference=reference, threads=args.threads)
    record = dataclasses.replace(record, config=resolved)

    output_cfg = config.get("output", {})
    record_path = args.out or output_cfg.get("record")
    _emit(record.to_json(), record_path)

    csv_path = output_cfg.get("estimates_csv")
    if args.format == "csv" and not csv_path:
        if not record_path:
            raise ConfigError("--format csv needs --out or output.estimates_csv")
        csv_path = record_path + ".csv"
    if csv_path:
        _emit(record.estimates_csv(), csv_path)
    return 0


def _parse_matrix(path: str) -> np.ndarray:
    text = open(path).read().strip()
    if path.endswith(".json") or text.startswith("{"):
        kernel = json.loads(text)["kernel"]
        return np.asarray(kernel, dtype=float)
    rows = [line for line in text.replace(";", "\n").splitlines() if line.strip()]
    return np.asarray([[float(v) for v in row.split(",")] for row in rows])


def cmd_spectral(args) -> int:
    kernel = _parse_matrix(args.matrix)
    chain = spectral.build_chain(kernel)
    report = spectral.analyze(chain)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "spectral_report",
        "m": chain.m,
        "source": args.matrix,
    }
    doc.update(report.to_dict())
    _emit(json.dumps(doc, sort_keys=True, indent=2) + "\n", args.out)
    return 0


def cmd_baseline(args) -> int:
    inner = geometry.make_body(args.kind, args.d, args.param)
    if args.r < inner.outer_radius:
        raise ConfigError("--r must cover the body (r >= its outer radius)")
    body = geometry.oracle_body(
        inner.membership,
        dim=args.d,
        outer_radius=args.r,
        descriptor={"kind": args.kind, "dim": args.d, "param": args.param, "r": args.r},
    )
    rng = estimator.replication_rng(args.seed, 0)
    result = samplers.rejection_baseline(body, integrand("x1", args.d), args.n, rng)
    reference = None
    if inner.volume is not None:
        reference = inner.volume / (args.r**args.d * geometry.unit_ball_volume(args.d))
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "baseline",
        "body": body.descriptor,
        "n_proposals": result.n_proposals,
        "n_accepted": result.n_accepted,
        "acceptance_rate": result.acceptance_rate,
        "reference_rate": reference,
        "estimate": result.estimate,
        "seed": args.seed,
        "rng": estimator.RNG_ID,
    }
    _emit(json.dumps(doc, sort_keys=True, indent=2) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convexmc",
        description="MCMC expectations over convex bodies with certified error bounds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="emit a certified sampler plan as JSON")
    plan_sub = plan.add_subparsers(dest="plan_kind", required=True)
    har = plan_sub.add_parser("har", help="hit-and-run over a sandwiched body")
    har.add_argument("--d", type=int, required=True)
    har.add_argument("--r", type=float, required=True)
    imh = plan_sub.add_parser("indep-mh", help="independent Metropolis, uniform proposal")
    imh.add_argument("--C", type=float, required=True)
    imh.add_argument("--vol", type=float, required=True)
    bw = plan_sub.add_parser("ball-walk", help="lazy ball walk on the unit ball")
    bw.add_argument("--alpha", type=float, required=True)
    bw.add_argument("--d", type=int, required=True)
    for p in (har, imh, bw):
        p.add_argument("--n", type=int, action="append", help="evaluate bound(n)")
        p.add_argument("--out", type=str, default=None)

    run = sub.add_parser("run", help="run a configured experiment")
    run.add_argument("--config", type=str, required=True)
    run.add_argument("--seed", type=int, default=None, help="override run.seed")
    run.add_argument("--out", type=str, default=None, help="record path (default stdout)")
    run.add_argument("--threads", type=int, default=1)
    run.add_argument("--format", choices=("json", "csv"), default="json")

    spectral_cmd = sub.add_parser("spectral", help="analyze a transition matrix file")
    spectral_cmd.add_argument("--matrix", type=str, required=True)
    spectral_cmd.add_argument("--out", type=str, default=None)

    baseline = sub.add_parser("baseline", help="acceptance/rejection from the outer ball")
    baseline.add_argument("--d", type=int, required=True)
    baseline.add_argument("--r", type=float, required=True)
    baseline.add_argument("--kind", type=str, default="ball")
    baseline.add_argument("--param", type=float, default=1.0)
    baseline.add_argument("--n", type=int, default=10_000)
    baseline.add_argument("--seed", type=int, default=0)
    baseline.add_argument("--out", type=str, default=None)

    return parser


_HANDLERS = {
    "plan": cmd_plan,
    "run": cmd_run,
    "spectral": cmd_spectral,
    "baseline": cmd_baseline,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)
    try:
        return _HANDLERS[args.command](args)
    except InfeasibleBurnIn as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except (ConvexMCError, ValueError, KeyError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def console_main() -> None:
    sys.exit(main())
