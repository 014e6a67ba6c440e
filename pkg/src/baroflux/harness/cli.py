"""Command-line entry point ``baroflux``.

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

import numpy as np

from .. import diagnostics as dg
from ..equilibrium import EquilibriumError, equilibrium_residual
from ..geometry import CompatibilityError, check_compatibility
from ..solver.run import run
from ..solver.scheme import SolverError
from .build import build_problem, initial_state
from .config import ConfigError, ScenarioConfig, load_config
from .io import ensure_dir, write_json, write_series, write_snapshot, write_state
from .scenarios import FAMILIES, builtin_scenarios, family_members, get_scenario

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def resolve(ref: str) -> List[ScenarioConfig]:
    """A config path or a catalog name; families expand to their members."""
    if os.path.isfile(ref):
        return [load_config(ref)]
    if ref in FAMILIES:
        return family_members(ref)
    if ref in builtin_scenarios():
        return [get_scenario(ref)]
    raise UsageError(f"{ref!r} is neither a config file nor a built-in scenario (see `baroflux list`)")


def _apply_overrides(cfg: ScenarioConfig, args) -> ScenarioConfig:
    changes = {}
    if getattr(args, "cells", None):
        changes["grid__cells"] = list(args.cells)
    if getattr(args, "t_end", None) is not None:
        changes["t_end"] = args.t_end
        changes["record_interval"] = args.t_end / 200.0 if args.t_end > 0 else 1.0
    if getattr(args, "backend", None):
        changes["backend"] = args.backend
    if changes:
        if "grid__cells" in changes and len(changes["grid__cells"]) != cfg.dim:
            raise UsageError(f"--cells needs {cfg.dim} value(s)")
        cfg = cfg.with_updates(**changes)
    return cfg


def _out_dir(cfg: ScenarioConfig, args, multi: bool) -> str:
    base = args.out or cfg.output_dir()
    return ensure_dir(os.path.join(base, cfg.name) if multi else base)


# -------------------------------------------------------------------- commands


def cmd_list(args) -> int:
    for name, doc in builtin_scenarios().items():
        print(f"{name:24s} {doc}")
    return EXIT_OK


def cmd_check(args) -> int:
    status = EXIT_OK
    for cfg in resolve(args.config):
        cfg = _apply_overrides(cfg, args)
        problem = build_problem(cfg, strict=False)
        comp = problem.compatibility
        hyp = problem.hypotheses
        print(json.dumps({"name": cfg.name, "compatibility": comp.to_dict(),
                          "hypotheses": hyp.to_dict()}, indent=2, default=float))
        if not comp.passed:
            print(f"error: {cfg.name}: {comp.identity} violated", file=sys.stderr)
            status = EXIT_VALIDATION
        elif not hyp.passed:
            print(f"error: {cfg.name}: equilibrium hypotheses not satisfied", file=sys.stderr)
            status = EXIT_VALIDATION
    return status


def equilibrium_report(problem) -> dict:
    eq = problem.eq
    return {
        "name": problem.config.name,
        "C_E": eq.C_E,
        "mass": eq.mass,
        "source": eq.source,
        "vacuum_fraction": eq.vacuum_fraction,
        "components": problem.hypotheses.components,
        "hypotheses_passed": problem.hypotheses.passed,
        "inflow_min_density": problem.hypotheses.inflow_min_density,
        "residual": equilibrium_residual(eq, problem.law, problem.G, problem.motion, problem.grid),
        "boundary": problem.partition.summary(),
    }


def cmd_equilibrium(args) -> int:
    cfgs = resolve(args.config)
    reports = []
    for cfg in cfgs:
        cfg = _apply_overrides(cfg, args)
        problem = build_problem(cfg)
        rep = equilibrium_report(problem)
        out = _out_dir(cfg, args, len(cfgs) > 1)
        eq = problem.eq
        uE = problem.motion.velocity(problem.grid.centers())
        write_snapshot(os.path.join(out, "equilibrium.csv"), problem.grid, eq.rho_E, eq.rho_E[..., None] * uE)
        reports.append(rep)
    print(json.dumps(reports[0] if len(reports) == 1 else reports, indent=2, default=float))
    return EXIT_OK


def simulate_config(cfg: ScenarioConfig, out: str, observers=()):
    """Run one scenario and write ``series.csv``, snapshots and ``summary.json``."""
    problem = build_problem(cfg)
    disc = problem.discretization()
    state0 = initial_state(problem, disc)
    raw = cfg.raw
    failure = None
    try:
        traj = run(disc, state0, raw["t_end"], raw["record_interval"], observers=observers,
                   max_wall_seconds=raw["max_wall_seconds"], snapshot_interval=raw["snapshot_interval"])
    except SolverError as exc:
        traj = getattr(exc, "trajectory", None)
        failure = exc
    if traj is not None:
        write_series(os.path.join(out, "series.csv"), traj.records)
        for k, s in enumerate(traj.snapshots):
            write_state(os.path.join(out, f"snapshot_{k:04d}.csv"), problem.grid, s)
        if traj.final is not None:
            write_state(os.path.join(out, "final.csv"), problem.grid, traj.final)
    summary = {"name": cfg.name, "backend": disc.backend, "failed": failure is not None}
    if traj is not None and traj.records:
        r0, r1 = traj.records[0], traj.records[-1]
        summary.update({
            "steps": traj.steps, "truncated": traj.truncated, "t_final": r1.t,
            "E_rel_initial": r0.E_rel, "E_rel_final": r1.E_rel,
            "E_ratio": r1.E_rel / r0.E_rel if r0.E_rel > 0 else 0.0,
            "mass_balance_residual": dg.mass_balance_residual(traj.records) if len(traj.records) > 1 else 0.0,
            "energy_residual": dg.energy_inequality_residual(traj.records)[0] if len(traj.records) > 1 else 0.0,
            "wall_seconds": traj.wall_seconds,
        })
    if failure is not None:
        summary["error"] = str(failure)
    write_json(os.path.join(out, "summary.json"), summary)
    return problem, traj, failure


def cmd_simulate(args) -> int:
    cfgs = resolve(args.config)
    status = EXIT_OK
    for cfg in cfgs:
        cfg = _apply_overrides(cfg, args)
        out = _out_dir(cfg, args, len(cfgs) > 1)
        _, traj, failure = simulate_config(cfg, out)
        if failure is not None:
            print(f"error: {cfg.name}: {failure}", file=sys.stderr)
            status = EXIT_RUNTIME
            continue
        r0, r1 = traj.records[0], traj.records[-1]
        ratio = r1.E_rel / r0.E_rel if r0.E_rel > 0 else 0.0
        print(f"{cfg.name}: t={r1.t:g} steps={traj.steps} E_rel {r0.E_rel:.6e} -> {r1.E_rel:.6e} "
              f"(ratio {ratio:.3e}) -> {out}")
        if traj.truncated:
            print(f"warning: {cfg.name}: wall-clock budget exhausted, trajectory truncated", file=sys.stderr)
    return status


SWEEP_COLUMNS = ("level", "h", "cells", "steps", "E_initial", "E_final", "E_ratio", "err_rho_Lgamma",
                 "err_mom", "energy_residual", "max_window_residual", "mass_balance_residual",
                 "equilibrium_residual")


def cmd_sweep(args) -> int:
    if args.levels < 1:
        raise UsageError("--levels must be at least 1")
    cfgs = resolve(args.config)
    status = EXIT_OK
    for cfg in cfgs:
        cfg = _apply_overrides(cfg, args)
        out = _out_dir(cfg, args, len(cfgs) > 1)
        rows = []
        base_cells = cfg.raw["grid"]["cells"]
        for level in range(args.levels):
            cells = [c * 2 ** level for c in base_cells]
            lcfg = cfg.with_updates(grid__cells=cells, name=f"{cfg.name}-L{level}")
            ldir = ensure_dir(os.path.join(out, f"level{level}"))
            problem, traj, failure = simulate_config(lcfg, ldir)
            if failure is not None:
                print(f"error: {lcfg.name}: {failure}", file=sys.stderr)
                status = EXIT_RUNTIME
                break
            rec = traj.records
            R = dg.energy_inequality_residual(rec)[0] if len(rec) > 1 else 0.0
            win = float(np.max(dg.windowed_energy_residuals(rec))) if len(rec) > 1 else 0.0
            mb = dg.mass_balance_residual(rec) if len(rec) > 1 else 0.0
            res = equilibrium_residual(problem.eq, problem.law, problem.G, problem.motion, problem.grid)
            rows.append([level, problem.grid.h, "x".join(map(str, cells)), traj.steps, rec[0].E_rel,
                         rec[-1].E_rel, rec[-1].E_rel / rec[0].E_rel if rec[0].E_rel > 0 else 0.0,
                         rec[-1].err_rho_Lgamma, rec[-1].err_mom, R, win, mb, res])
            print(f"{lcfg.name}: h={problem.grid.h:.4g} E_final={rec[-1].E_rel:.4e} R={R:.3e}")
        with open(os.path.join(out, "convergence.csv"), "w") as fh:
            fh.write(",".join(SWEEP_COLUMNS) + "\n")
            for row in rows:
                fh.write(",".join(v if isinstance(v, str) else ("%d" % v if isinstance(v, int) else "%.17g" % v)
                                  for v in row) + "\n")
    return status


# ------------------------------------------------------------------------ main


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="baroflux", description="Equilibria and relative-energy decay for barotropic flow "
                                              "with in/out-flux boundaries.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.add_parser("list", help="show the built-in scenarios")

    def common(sp):
        sp.add_argument("config", help="JSON config file or built-in scenario name")
        sp.add_argument("--out", help="output directory (default: BAROFLUX_OUT or the config's output)")
        sp.add_argument("--cells", type=int, nargs="+", help="override the grid cell counts")
        sp.add_argument("--backend", choices=["auto", "compiled", "python"])

    common(sub.add_parser("check", help="validate a scenario without running it"))
    common(sub.add_parser("equilibrium", help="build the equilibrium and write a report and snapshot"))
    sp = sub.add_parser("simulate", help="run a scenario and write series.csv and snapshots")
    common(sp)
    sp.add_argument("--t-end", type=float, dest="t_end", help="override the final time")
    sp = sub.add_parser("sweep", help="refinement study; writes convergence.csv")
    common(sp)
    sp.add_argument("--levels", type=int, default=2, help="number of refinement levels")
    sp.add_argument("--t-end", type=float, dest="t_end", help="override the final time")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        if getattr(args, "out", None) is None and getattr(args, "config", None) is not None:
            args.out = os.environ.get("BAROFLUX_OUT") or None
        handler = {"list": cmd_list, "check": cmd_check, "equilibrium": cmd_equilibrium,
                   "simulate": cmd_simulate, "sweep": cmd_sweep}[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CompatibilityError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConfigError, EquilibriumError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
