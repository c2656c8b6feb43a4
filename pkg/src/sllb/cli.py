"""Command-line entry point: ``sllb {simulate,cost,optimize,verify,convergence}``.

Exit codes: 0 success, 1 runtime failure, 2 usage or config error,
3 verification failure. Primary artifacts depend only on the config and
seed; wall time and thread count go to ``run_meta.json``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import verify
from .config import SCHEMA_VERSION, ConfigError, RunConfig, _FieldError, load_config, to_dict
from .control import YoungMeasure, monte_carlo_cost
from .integrator import simulate
from .optimize import cross_entropy_minimize

log = logging.getLogger("sllb")

COMMANDS = ("simulate", "cost", "optimize", "verify", "convergence")
EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2, 3


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(_jsonable(doc), indent=2) + "\n")


def _envelope(cfg: RunConfig, **body) -> dict:
    return {"schema_version": SCHEMA_VERSION, "seed": int(cfg.seed), **body, "config": to_dict(cfg)}


def _default_control(cfg: RunConfig):
    """Uniform Young measure over the configured grid and knots."""
    if not cfg.terms.control:
        return None
    return YoungMeasure.uniform(cfg.build_control_grid(), cfg.knots())


def write_trajectory_csv(path: Path, traj) -> None:
    centers = traj.grid.centers().reshape(-1, traj.grid.dimension)[:, 0]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "cell", "x", "mx", "my", "mz"])
        for t, state in zip(traj.times, traj.states):
            flat = state.reshape(-1, 3)
            ts = f"{t:.17g}"
            for c, (x, v) in enumerate(zip(centers, flat)):
                w.writerow([ts, c, f"{x:.17g}", f"{v[0]:.17g}", f"{v[1]:.17g}", f"{v[2]:.17g}"])


def cmd_simulate(cfg, args, out: Path) -> tuple[int, dict]:
    sim = cfg.build_sim()
    control = _load_measure(args.measure) if args.measure else _default_control(cfg)
    traj = simulate(sim, control, int(cfg.seed))
    write_trajectory_csv(out / "trajectory.csv", traj)
    g = sim.grid
    final = traj.states[-1]
    summary = _envelope(
        cfg,
        n_records=len(traj.times),
        n_jumps=len(traj.jumps),
        jumps=[[e.time, e.size] for e in traj.jumps],
        final_l2_sq=g.l2_sq(final),
        final_max_magnitude=float(np.max(np.linalg.norm(final, axis=-1))),
    )
    write_json(out / "summary.json", summary)
    return EXIT_OK, summary


def _load_measure(path) -> YoungMeasure:
    try:
        return YoungMeasure.from_dict(json.loads(Path(path).read_text()))
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read Young measure: {exc}", "measure", source=str(path)) from None


def cmd_cost(cfg, args, out: Path) -> tuple[int, dict]:
    problem = cfg.build_problem()
    lam = _load_measure(args.measure) if args.measure else YoungMeasure.uniform(cfg.build_control_grid(), cfg.knots())
    control = lam
    if args.ordinary:
        try:
            control = lam.to_ordinary()
        except ValueError as exc:
            raise ConfigError(str(exc), "measure") from None
    est, se = monte_carlo_cost(problem, control, int(cfg.paths), int(cfg.seed), threads=args.threads)
    doc = _envelope(cfg, estimate=est, stderr=se, n_paths=int(cfg.paths), route="ordinary" if args.ordinary else "relaxed",
                    measure=lam.to_dict())
    write_json(out / "cost.json", doc)
    return EXIT_OK, doc


def cmd_optimize(cfg, args, out: Path) -> tuple[int, dict]:
    problem = cfg.build_problem()
    opt = cfg.build_optimizer()
    res = cross_entropy_minimize(problem, cfg.build_control_grid(), cfg.knots(), opt, threads=args.threads)
    write_json(out / "best_measure.json", res.measure.to_dict())
    doc = _envelope(cfg, **res.to_dict())
    write_json(out / "optimization.json", doc)
    return EXIT_OK, doc


def cmd_verify(cfg, args, out: Path) -> tuple[int, dict]:
    reports = verify.run_suite(cfg, threads=args.threads, n_paths=args.paths)
    ok = all(r["pass"] for r in reports)
    doc = _envelope(cfg, all_pass=ok, checks=reports)
    write_json(out / "verify.json", doc)
    for r in reports:
        print(f"{r['name']}: {'pass' if r['pass'] else 'FAIL'}")
    return (EXIT_OK if ok else EXIT_VERIFY), doc


def cmd_convergence(cfg, args, out: Path) -> tuple[int, dict]:
    v = cfg.verify
    det = verify.check_deterministic_convergence(tuple(v.convergence_dts))
    trunc = verify.check_truncation_convergence(tuple(v.truncation_cutoffs), seed=int(cfg.seed))
    with (out / "convergence.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sweep", "step", "error"])
        for dt, err in zip(det["statistics"]["dts"], det["statistics"]["errors"]):
            w.writerow(["dt", f"{dt:.17g}", f"{err:.17g}"])
        cut = trunc["statistics"]["cutoffs"][1:]
        for eps, inc in zip(cut, trunc["statistics"]["increments"]):
            w.writerow(["epsilon", f"{eps:.17g}", f"{inc:.17g}"])
    doc = _envelope(
        cfg,
        dt_slope=det["statistics"]["slope"],
        dt_r2=det["statistics"]["r2"],
        epsilon_slope=trunc["statistics"]["rate"],
        epsilon_expected=trunc["statistics"]["expected_rate"],
        checks=[det, trunc],
    )
    write_json(out / "convergence.json", doc)
    return EXIT_OK, doc


HANDLERS = {
    "simulate": cmd_simulate,
    "cost": cmd_cost,
    "optimize": cmd_optimize,
    "verify": cmd_verify,
    "convergence": cmd_convergence,
}


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sllb", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="YAML run configuration (default: built-in reference)")
    p.add_argument("--seed", type=_u64, help="master seed; overrides the config")
    p.add_argument("--paths", type=_positive, help="Monte Carlo paths; overrides the config")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--threads", type=_positive, default=1, help="worker cap; results do not depend on it")
    p.add_argument("--measure", type=Path, help="Young measure JSON for simulate/cost")
    p.add_argument("--ordinary", action="store_true", help="cost: evaluate an all-Dirac measure as an ordinary control")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            cfg.seed = args.seed
        if args.paths is not None:
            cfg.paths = args.paths
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        code, _ = HANDLERS[args.command](cfg, args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _FieldError as exc:
        print(f"config error: field '{exc.path}': {exc.message}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        log.debug("runtime failure", exc_info=True)
        print(f"{args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    write_json(out / "run_meta.json", {"schema_version": SCHEMA_VERSION, "command": args.command,
                                       "wall_seconds": time.perf_counter() - start, "threads": args.threads})
    return code


if __name__ == "__main__":
    sys.exit(main())
