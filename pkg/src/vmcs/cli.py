"""``vmcs`` command-line interface.

Subcommands::

    vmcs simulate --config run.json [--out DIR]
    vmcs exact    --config run.json [--out DIR]
    vmcs sweep    --config run.json --param g --values 0.5 1 2 [--out DIR] [--engine exact]
    vmcs compare  A.csv B.csv [--tol 1e-2] [--out DIR]

Exit codes: 0 success, 1 configuration or input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import platform
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .ansatz import init_product_state, save_state
from .config import SWEEP_PARAMETERS, ConfigError, RunConfig, load_config
from .eom import EomConfig
from .exact import MAX_EXACT_SITES, run_exact
from .integrator import NumericalFailure, extract_steady_state, run_dynamics
from .io import SchemaError, TrajectoryWriter, read_trajectory, trajectory_to_dict, write_json
from .kernels import ModelParams
from .lattice import LatticeSpec, SymmetryGroup, build_lattice, identity_group, single_site, translation_group
from .trajectory import OBSERVABLES, Trajectory

logger = logging.getLogger("vmcs")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


@dataclass(frozen=True)
class Setup:
    lattice: LatticeSpec
    group: SymmetryGroup
    model: ModelParams
    eom: EomConfig


def build_setup(cfg: RunConfig) -> Setup:
    lc = cfg.lattice
    if lc.Lx * lc.Ly == 1:
        lattice = single_site()
    else:
        lattice = build_lattice(lc.Lx, lc.Ly, lc.periodic)
    if cfg.ansatz.symmetrize and lattice.n_sites > 1:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore" if lattice.periodic else "default")
            group = translation_group(lattice, point_group=cfg.ansatz.point_group)
    else:
        group = identity_group(lattice.n_sites)
    m = cfg.model
    model = ModelParams.for_lattice(m.g, m.V, m.gamma, lattice, v_eff=m.v_eff_override)
    eom = EomConfig(epsilon=cfg.eom.epsilon, gradient_mode=cfg.eom.gradient_mode)
    return Setup(lattice, group, model, eom)


def _initial_state(cfg: RunConfig, lattice: LatticeSpec):
    a = cfg.ansatz
    return init_product_state(lattice, a.N_c, a.direction, a.perturbation, a.seed)


def _manifest(cfg: RunConfig, command: str, wall: float, status: str, extra: dict | None = None) -> dict:
    return {
        "vmcs_manifest": 1,
        "command": command,
        "config": cfg.to_dict(),
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "wall_time_s": wall,
        "status": status,
        **(extra or {}),
    }


def _steady_dict(traj: Trajectory, tail_fraction: float) -> dict:
    try:
        ss = extract_steady_state(traj, tail_fraction)
    except ValueError as exc:
        return {"converged": False, "error": str(exc)}
    return ss.to_dict()


def _execute(cfg: RunConfig, out: Path, engine: str) -> tuple[int, dict]:
    """Run one configuration into ``out``; returns the exit code and the steady-state summary."""
    setup = build_setup(cfg)
    integ = cfg.integration
    out.mkdir(parents=True, exist_ok=True)
    initial = _initial_state(cfg, setup.lattice)
    csv_mode = cfg.output.format == "csv"
    writer = TrajectoryWriter(out / "trajectory.csv", setup.lattice.n_sites, cfg.output.site_resolved, engine) if csv_mode else None
    start = time.perf_counter()
    code, status, traj = EXIT_OK, "ok", None
    try:
        if engine == "exact":
            traj = run_exact(initial, setup.model, setup.lattice, integ.t_final, integ.dt, integ.record_every, setup.group, writer)
        else:
            traj = run_dynamics(
                initial,
                setup.model,
                setup.lattice,
                setup.group,
                integ.t_final,
                integ.dt,
                integ.record_every,
                setup.eom,
                on_record=writer,
                max_trace_drift=integ.max_trace_drift,
            )
    except NumericalFailure as exc:
        code, status, traj = EXIT_NUMERICAL, f"numerical failure: {exc}", exc.trajectory
        print(f"error: {exc}", file=sys.stderr)
    finally:
        if writer is not None:
            writer.close()
    wall = time.perf_counter() - start
    if not csv_mode and traj is not None:
        write_json(out / "trajectory.json", trajectory_to_dict(traj))
    summary = _steady_dict(traj, integ.tail_fraction) if code == EXIT_OK else {"converged": False, "error": status}
    write_json(out / "steady_state.json", summary)
    extra = {"engine": engine, "n_sites": setup.lattice.n_sites, "group_order": setup.group.order}
    if engine == "variational":
        extra["n_params"] = initial.n_params
        if code == EXIT_OK:
            save_state(out / "final_state.json", traj.metadata["final_state"], setup.lattice)
    write_json(out / "manifest.json", _manifest(cfg, engine, wall, status, extra))
    return code, summary


def _out_dir(cfg: RunConfig, args) -> Path:
    return Path(args.out) if args.out else Path(cfg.output.directory)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(cfg, args)
    code, summary = _execute(cfg, out, "variational")
    if code == EXIT_OK:
        _print_summary(summary, out)
    return code


def cmd_exact(args) -> int:
    cfg = load_config(args.config)
    n = cfg.lattice.Lx * cfg.lattice.Ly
    if n > MAX_EXACT_SITES:
        print(f"error: lattice.Lx*lattice.Ly = {n} exceeds the exact-oracle limit of {MAX_EXACT_SITES} sites", file=sys.stderr)
        return EXIT_CONFIG
    out = _out_dir(cfg, args)
    code, summary = _execute(cfg, out, "exact")
    if code == EXIT_OK:
        _print_summary(summary, out)
    return code


def _print_summary(summary: dict, out: Path) -> None:
    mean = summary.get("mean")
    if mean:
        vals = "  ".join(f"{k}={mean[k]:+.6f}" for k in OBSERVABLES)
        print(f"steady state: {vals}  converged={summary['converged']}")
    print(f"results written to {out}")


def _point_config(cfg: RunConfig, param: str, value, index: int) -> RunConfig:
    seed = cfg.ansatz.seed + index
    if param == "N_c":
        return cfg.replace("ansatz", N_c=int(value), seed=seed)
    cfg = cfg.replace("ansatz", seed=seed)
    return cfg.replace("model", **{param: float(value)})


def _sweep_point(job):
    cfg, out, engine = job
    logging.disable(logging.CRITICAL)
    try:
        code, summary = _execute(cfg, out, engine)
    except Exception as exc:  # recorded, the sweep carries on
        return EXIT_NUMERICAL, {"converged": False, "error": f"{type(exc).__name__}: {exc}"}
    return code, summary


def _workers(n_jobs: int) -> int:
    cap = os.environ.get("VMCS_THREADS")
    limit = os.cpu_count() or 1
    if cap:
        try:
            limit = max(1, int(cap))
        except ValueError:
            logger.warning("ignoring non-integer VMCS_THREADS=%r", cap)
    return max(1, min(limit, n_jobs))


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if not args.values:
        print("error: --values needs at least one value", file=sys.stderr)
        return EXIT_CONFIG
    if args.param == "N_c":
        try:
            values = [int(v) for v in args.values]
        except ValueError:
            print("error: N_c values must be integers", file=sys.stderr)
            return EXIT_CONFIG
    else:
        try:
            values = [float(v) for v in args.values]
        except ValueError:
            print("error: sweep values must be numbers", file=sys.stderr)
            return EXIT_CONFIG
    if args.engine == "exact" and cfg.lattice.Lx * cfg.lattice.Ly > MAX_EXACT_SITES:
        print(f"error: exact sweeps are limited to {MAX_EXACT_SITES} sites", file=sys.stderr)
        return EXIT_CONFIG
    out = _out_dir(cfg, args)
    out.mkdir(parents=True, exist_ok=True)
    try:
        jobs = [(_point_config(cfg, args.param, v, i), out / f"point_{i:03d}", args.engine) for i, v in enumerate(values)]
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    workers = _workers(len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]

    lines = ["value,sx_ss,sy_ss,sz_ss,converged,status"]
    for v, (code, summary) in zip(values, results):
        mean = summary.get("mean") or {}
        cells = [repr(v)] + [repr(mean[k]) if k in mean else "nan" for k in OBSERVABLES]
        status = "ok" if code == EXIT_OK else str(summary.get("error", "failed")).replace(",", ";").replace("\n", " ")
        lines.append(",".join(cells + [str(bool(summary.get("converged", False))).lower(), status]))
        print(lines[-1])
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    write_json(out / "manifest.json", _manifest(cfg, "sweep", 0.0, "ok", {"param": args.param, "values": values, "engine": args.engine}))
    print(f"sweep written to {out / 'sweep.csv'}")
    return EXIT_OK


def _coarse_grid(ta: np.ndarray, tb: np.ndarray) -> np.ndarray:
    lo, hi = max(ta[0], tb[0]), min(ta[-1], tb[-1])
    if not hi > lo:
        raise SchemaError("time ranges do not overlap")
    spacing = lambda t: np.median(np.diff(t)) if len(t) > 1 else np.inf  # noqa: E731
    grid = ta if spacing(ta) >= spacing(tb) else tb
    return grid[(grid >= lo - 1e-12) & (grid <= hi + 1e-12)]


def compare_trajectories(a: Trajectory, meta_a: dict, b: Trajectory, meta_b: dict) -> dict:
    """Max and RMS deviation per observable on the coarser of the two time grids.

    Raises:
        SchemaError: for different schema versions, site counts or disjoint
            time ranges.
    """
    if meta_a["version"] != meta_b["version"]:
        raise SchemaError("schema versions differ")
    names = [f"{o}_avg" for o in OBSERVABLES]
    if meta_a["site_resolved"] and meta_b["site_resolved"]:
        if a.n_sites != b.n_sites:
            raise SchemaError("trajectories have different site counts")
        names += [f"{o}_site_{i}" for o in OBSERVABLES for i in range(a.n_sites)]
    grid = _coarse_grid(a.times, b.times)

    def series(traj, name):
        obs, _, rest = name.partition("_")
        k = OBSERVABLES.index(obs)
        if rest == "avg":
            return traj.averages[:, k]
        return traj.sites[:, int(rest.split("_")[1]), k]

    report = {}
    for name in names:
        ya = np.interp(grid, a.times, series(a, name))
        yb = np.interp(grid, b.times, series(b, name))
        d = np.abs(ya - yb)
        report[name] = {"max": float(d.max()), "rms": float(np.sqrt(np.mean(d**2)))}
    return {"n_points": int(grid.size), "t_range": [float(grid[0]), float(grid[-1])], "observables": report}


def cmd_compare(args) -> int:
    try:
        a, ma = read_trajectory(args.traj_a)
        b, mb = read_trajectory(args.traj_b)
        result = compare_trajectories(a, ma, b, mb)
    except (OSError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    worst = max(v["max"] for v in result["observables"].values())
    result["tol"] = args.tol
    result["max_deviation"] = worst
    result["passed"] = bool(worst < args.tol)
    for name, v in result["observables"].items():
        if name.endswith("_avg") or args.verbose:
            print(f"{name:>14s}  max {v['max']:.3e}  rms {v['rms']:.3e}")
    print(f"max deviation {worst:.3e} ({'below' if result['passed'] else 'above'} tol {args.tol:g})")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        write_json(Path(args.out) / "compare.json", result)
    return EXIT_OK if result["passed"] else EXIT_CONFIG


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vmcs", description="Variational multi-coherent-state dynamics of open spin lattices.")
    p.add_argument("--version", action="version", version=f"vmcs {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="more log output")
    sub = p.add_subparsers(dest="command", required=True)

    for name, helptext in (("simulate", "run the variational dynamics"), ("exact", "run the exact master equation (<= 10 sites)")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", required=True, help="JSON configuration or manifest")
        s.add_argument("--out", help="output directory (overrides output.directory)")

    s = sub.add_parser("sweep", help="steady states over a list of parameter values")
    s.add_argument("--config", required=True)
    s.add_argument("--param", required=True, choices=SWEEP_PARAMETERS)
    s.add_argument("--values", nargs="*", default=[])
    s.add_argument("--engine", choices=("variational", "exact"), default="variational")
    s.add_argument("--out")

    s = sub.add_parser("compare", help="deviation between two trajectory files")
    s.add_argument("traj_a")
    s.add_argument("traj_b")
    s.add_argument("--tol", type=float, default=1e-2)
    s.add_argument("--out")
    return p


COMMANDS = {"simulate": cmd_simulate, "exact": cmd_exact, "sweep": cmd_sweep, "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
