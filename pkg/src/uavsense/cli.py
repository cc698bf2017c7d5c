"""Command-line front end: ``gen-maps``, ``plan``, ``sweep``, ``validate`` and ``replay``.

Every command writes a run manifest (JSON) listing the exact arguments,
so ``uavsense replay <manifest>`` regenerates the same outputs.

Randomness comes from one ``--seed``; each consumer gets its own stream
seeded with ``SeedSequence([seed, consumer_id])`` (ACO = 1, target
sampler = 2).

Exit codes: 0 success, 1 internal error, 2 usage error, 3 validation
error (bad scenario or trajectory), 4 infeasible instance.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .evaluation import build_instance, check_trajectory, monte_carlo_validate, run_solver, sweep
from .graph import InfeasibleError, check_feasibility
from .radio import build_snr_map, export_snr_map
from .reports import dumps, read_waypoints, report_to_dict
from .scenario import ScenarioConfig, ScenarioError, read_scenario_file
from .solvers import AcoParams, LagrangianParams
from .targetmap import blocked_mask, build_target_map, export_mask, export_target_map

log = logging.getLogger("uavsense")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_INFEASIBLE = 4

SCENARIO_DIR_ENV = "UAVSENSE_SCENARIO_DIR"
SEED_CONSUMERS = {"aco": 1, "sampler": 2}


class UsageError(Exception):
    pass


class TrajectoryInvalid(Exception):
    pass


def derive_seed(seed: int, consumer: str) -> int:
    return int(np.random.SeedSequence([seed, SEED_CONSUMERS[consumer]]).generate_state(1)[0])


def resolve_scenario(path: str) -> Path:
    p = Path(path)
    if not p.exists() and not p.is_absolute() and os.environ.get(SCENARIO_DIR_ENV):
        alt = Path(os.environ[SCENARIO_DIR_ENV]) / p
        if alt.exists():
            return alt
    return p


def _load(args) -> ScenarioConfig:
    path = resolve_scenario(args.scenario)
    try:
        return read_scenario_file(path)
    except FileNotFoundError as exc:
        raise UsageError(f"scenario file not found: {path}") from exc
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def _write(path: str, data: bytes) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)


def _write_manifest(args, argv: Sequence[str], outputs: dict, seeds: dict) -> None:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "manifest", "command")}
    doc = {
        "tool": "uavsense",
        "version": __version__,
        "command": args.command,
        "scenario": getattr(args, "scenario", None),
        "parameters": params,
        "seeds": seeds,
        "outputs": outputs,
        "argv": list(argv),
    }
    path = args.manifest or _default_manifest(outputs)
    _write(path, dumps(doc))


def _default_manifest(outputs: dict) -> str:
    first = next(iter(outputs.values()))
    return str(first) + ".manifest.json"


def _seed(args, cfg: ScenarioConfig) -> int:
    return cfg.rng_seed if args.seed is None else args.seed


def _canonical_argv(args, names: Sequence[str]) -> List[str]:
    """Explicit, post-default argument list for replay."""
    argv = [args.command]
    for name in names:
        value = getattr(args, name)
        flag = "--" + name.replace("_", "-")
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        elif value is not None:
            argv += [flag, ",".join(map(str, value)) if isinstance(value, list) else str(value)]
    return argv


# -- commands -----------------------------------------------------------------

def cmd_gen_maps(args) -> int:
    cfg = _load(args)
    snr = build_snr_map(cfg)
    blocked = blocked_mask(cfg)
    target = build_target_map(cfg, blocked)
    outputs = {}
    if args.snr_out:
        _write(args.snr_out, export_snr_map(snr))
        outputs["snr"] = args.snr_out
    if args.target_out:
        _write(args.target_out, export_target_map(target))
        outputs["target"] = args.target_out
    if args.mask_out:
        _write(args.mask_out, export_mask(blocked))
        outputs["mask"] = args.mask_out
    if not outputs:
        raise UsageError("gen-maps needs at least one of --snr-out, --target-out, --mask-out")
    _write_manifest(args, _canonical_argv(args, ["scenario", "snr_out", "target_out", "mask_out"]), outputs, {})
    return EXIT_OK


def _lagrangian(args) -> LagrangianParams:
    return LagrangianParams(K=args.K)


def _aco(args, seed: int) -> AcoParams:
    return AcoParams(ants=args.ants, iterations=args.iterations, rng_seed=derive_seed(seed, "aco"))


def cmd_plan(args) -> int:
    cfg = _load(args)
    dbar = cfg.distance_budget_m if args.dbar is None else args.dbar
    seed = _seed(args, cfg)
    inst = build_instance(cfg)
    feas = check_feasibility(inst.graph, dbar)
    if not feas.feasible:
        raise InfeasibleError(
            f"shortest feasible distance {feas.shortest_distance:.6g} m exceeds budget {dbar:.6g} m"
        )
    initial = None
    if args.solver in ("sol2", "sol3"):
        initial = run_solver(inst, args.initial, dbar, lagrangian=_lagrangian(args))
    report = run_solver(inst, args.solver, dbar, initial=initial, lagrangian=_lagrangian(args),
                        aco=_aco(args, seed), n_detour=args.ri, n_extra=args.rii)
    doc = report_to_dict(report, dbar)
    if args.no_timing:
        doc["wallclock_s"] = 0.0
    _write(args.out, dumps(doc))
    args.seed = seed
    args.dbar = dbar
    names = ["scenario", "solver", "initial", "dbar", "ri", "rii", "seed", "K", "ants", "iterations",
             "out", "no_timing"]
    _write_manifest(args, _canonical_argv(args, names), {"report": args.out},
                    {"seed": seed, "aco": derive_seed(seed, "aco")})
    log.info("%s: total_prob=%.6g f_D=%.6g m", args.solver, report.trajectory.total_prob, report.trajectory.distance)
    return EXIT_OK


def _dbar_list(args) -> List[float]:
    if args.dbar:
        return [float(x) for x in args.dbar.split(",") if x.strip()]
    if args.dbar_start is None or args.dbar_stop is None or args.dbar_step is None:
        raise UsageError("give --dbar LIST or all of --dbar-start/--dbar-stop/--dbar-step")
    if args.dbar_step <= 0:
        raise UsageError("--dbar-step must be positive")
    n = int(np.floor((args.dbar_stop - args.dbar_start) / args.dbar_step + 1e-9)) + 1
    return [args.dbar_start + k * args.dbar_step for k in range(max(n, 0))]


def cmd_sweep(args) -> int:
    solvers = [s for s in args.solvers.split(",") if s.strip()]
    if not solvers:
        raise UsageError("empty solver list")
    bad = set(solvers) - {"benchmark", "sol1", "sol2", "sol3"}
    if bad:
        raise UsageError(f"unknown solvers: {', '.join(sorted(bad))}")
    dbars = _dbar_list(args)
    if not dbars:
        raise UsageError("empty D-bar range")
    cfg = _load(args)
    seed = _seed(args, cfg)
    result = sweep(cfg, dbars, solvers, derive_seed(seed, "aco"), lagrangian=_lagrangian(args),
                   aco=AcoParams(ants=args.ants, iterations=args.iterations),
                   n_detour=args.ri, n_extra=args.rii, timing=not args.no_timing)
    _write(args.out, result.to_csv())
    args.seed = seed
    args.dbar = ",".join(repr(d) for d in dbars)
    args.dbar_start = args.dbar_stop = args.dbar_step = None
    names = ["scenario", "dbar", "solvers", "ri", "rii", "seed", "K", "ants", "iterations", "out", "no_timing"]
    _write_manifest(args, _canonical_argv(args, names), {"csv": args.out},
                    {"seed": seed, "aco": derive_seed(seed, "aco")})
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    cfg = _load(args)
    seed = _seed(args, cfg)
    inst = build_instance(cfg)
    try:
        with open(args.trajectory, "rb") as fh:
            waypoints = read_waypoints(fh)
    except FileNotFoundError as exc:
        raise UsageError(f"trajectory file not found: {args.trajectory}") from exc
    except ValueError as exc:
        raise TrajectoryInvalid(f"{args.trajectory}: {exc}") from exc
    if not all(inst.config.grid.in_bounds(w) for w in waypoints):
        raise TrajectoryInvalid(f"{args.trajectory}: waypoint outside the grid")
    t = inst.graph.trajectory(waypoints)
    dbar = cfg.distance_budget_m if args.dbar is None else args.dbar
    problems = check_trajectory(t, inst.graph, dbar)
    doc = {"trajectory": args.trajectory, "dbar_m": dbar, "violations": problems}
    status = EXIT_OK
    if problems:
        doc["verdict"] = "constraint violation"
        status = EXIT_VALIDATION
    else:
        mc = monte_carlo_validate(t, cfg, args.n, rng=derive_seed(seed, "sampler"), target=inst.target)
        doc.update({
            "analytic_total_prob": mc.analytic,
            "empirical_rate": mc.rate,
            "ci99_low": mc.ci_low,
            "ci99_high": mc.ci_high,
            "n_samples": mc.n_samples,
            "verdict": "analytic inside CI" if mc.analytic_inside else "analytic outside CI",
        })
    _write(args.out, dumps(doc))
    args.seed = seed
    args.dbar = dbar
    names = ["scenario", "trajectory", "n", "dbar", "seed", "out"]
    _write_manifest(args, _canonical_argv(args, names), {"report": args.out},
                    {"seed": seed, "sampler": derive_seed(seed, "sampler")})
    for p in problems:
        print(f"violation: {p}", file=sys.stderr)
    return status


def cmd_replay(args) -> int:
    with open(args.manifest_file) as fh:
        doc = json.load(fh)
    argv = list(doc["argv"])
    if args.manifest_out:
        argv += ["--manifest", args.manifest_out]
    return main(argv)


# -- parser -------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, seed: bool = True):
    p.add_argument("--scenario", required=True,
                   help=f"scenario YAML file (relative paths also tried under ${SCENARIO_DIR_ENV})")
    if seed:
        p.add_argument("--seed", type=int, default=None, help="master seed (default: scenario rng_seed)")
    p.add_argument("--manifest", default=None, help="run manifest path (default: <first output>.manifest.json)")


def _add_solver_params(p: argparse.ArgumentParser):
    p.add_argument("--ri", type=int, default=10, help="candidate cells for the single-detour planner (sol2)")
    p.add_argument("--rii", type=int, default=20, help="extra waypoints for the multi-waypoint planner (sol3)")
    p.add_argument("--K", type=int, default=100, help="K-shortest-path budget for sol1")
    p.add_argument("--ants", type=int, default=32, help="ACO ants per iteration")
    p.add_argument("--iterations", type=int, default=200, help="ACO iterations")
    p.add_argument("--no-timing", action="store_true", help="write wallclock as 0 for byte-reproducible output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavsense", description="Plan UAV trajectories that maximize target-sensing probability.",
                                     epilog="exit codes: 0 ok, 1 internal, 2 usage, 3 validation, 4 infeasible")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver results to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-maps", help="write expected-SNR, target-probability and blocked-grid maps")
    _add_common(p, seed=False)
    p.add_argument("--snr-out", help="CSV of expected SNR in dB (row = x index)")
    p.add_argument("--target-out", help="CSV of per-grid target probability")
    p.add_argument("--mask-out", help="CSV of blocked grids (1 = overlaps an obstacle)")
    p.set_defaults(func=cmd_gen_maps)

    p = sub.add_parser("plan", help="plan one trajectory")
    _add_common(p)
    p.add_argument("--solver", choices=["benchmark", "sol1", "sol2", "sol3"], required=True)
    p.add_argument("--initial", choices=["sol1", "benchmark"], default="sol1",
                   help="initial trajectory for sol2/sol3")
    p.add_argument("--dbar", type=float, default=None, help="distance budget in m (default: scenario)")
    p.add_argument("--out", required=True, help="report JSON path")
    _add_solver_params(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("sweep", help="sweep the distance budget for several solvers")
    _add_common(p)
    p.add_argument("--dbar", default=None, help="comma-separated budgets in m")
    p.add_argument("--dbar-start", type=float)
    p.add_argument("--dbar-stop", type=float)
    p.add_argument("--dbar-step", type=float)
    p.add_argument("--solvers", default="benchmark,sol1,sol2,sol3", help="comma-separated solver tags")
    p.add_argument("--out", required=True, help="CSV path")
    _add_solver_params(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check a trajectory and Monte Carlo its sensing probability")
    _add_common(p)
    p.add_argument("--trajectory", required=True, help="trajectory or report JSON")
    p.add_argument("--n", type=int, default=100_000, help="Monte Carlo samples")
    p.add_argument("--dbar", type=float, default=None, help="distance budget in m (default: scenario)")
    p.add_argument("--out", required=True, help="validation report JSON path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest_file")
    p.add_argument("--manifest-out", default=None, help="manifest path for the replayed run")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScenarioError, TrajectoryInvalid) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception as exc:  # pragma: no cover - last-resort reporting
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
