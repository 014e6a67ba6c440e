"""Turn a validated configuration into grids, equilibria and initial states."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..eos import PressureLaw, law_from_dict
from ..equilibrium import (
    EquilibriumState,
    HypothesisReport,
    check_hypotheses,
    constant_from_inflow,
    constant_from_mass,
    density_from_constant,
    equilibrium_density_at,
)
from ..geometry import (
    BoundaryPartition,
    CompatibilityReport,
    Grid,
    PotentialField,
    RigidMotion,
    check_compatibility,
    classify_boundary,
    effective_potential,
    integrate_cells,
)
from ..solver.scheme import Discretization, FlowState, SolverParams
from .config import ConfigError, ScenarioConfig
from .io import load_snapshot


@dataclass
class Problem:
    config: ScenarioConfig
    grid: Grid
    law: PressureLaw
    G: PotentialField
    motion: RigidMotion
    partition: BoundaryPartition
    compatibility: CompatibilityReport
    eq: EquilibriumState
    hypotheses: HypothesisReport
    inflow_report: Optional[object] = None

    def discretization(self, backend: Optional[str] = None) -> Discretization:
        raw = self.config.raw
        params = SolverParams(raw["viscosity"]["mu"], raw["viscosity"]["lambda"], raw["cfl"],
                              raw["rho_floor_guard"])
        return Discretization(self.grid, self.law, self.G, self.motion, self.eq, self.partition, params,
                              backend=backend or raw["backend"])


def make_grid(raw) -> Grid:
    g = raw["grid"]
    return Grid(g["dim"], tuple(g["extent"]), tuple(g["cells"]), tuple(g["origin"]))


def make_motion(raw) -> RigidMotion:
    m = raw["motion"]
    center = tuple(m["center"]) if m["center"] is not None else None
    return RigidMotion(tuple(m["translation"]), m["omega"], center)


def make_potential(raw) -> PotentialField:
    p = raw["potential"]
    if p["kind"] == "constant":
        return PotentialField.constant(p["c"])
    if p["kind"] == "linear":
        return PotentialField.linear(p["g"])
    return PotentialField.radial(p["center"], p["coeffs"])


def inflow_densities(spec, law, G, motion, partition) -> np.ndarray:
    """Inflow face densities from a scalar, an explicit per-face list or a hydrostatic reference."""
    n_in = int(partition.inflow.sum())
    if isinstance(spec, dict):
        hs = spec["hydrostatic"]
        at = np.array(hs["at"], dtype=float)
        C = float(effective_potential(G, motion, at)) - float(law.potential_prime(hs["reference"]))
        return equilibrium_density_at(law, G, motion, C, partition.faces.points[partition.inflow])
    if isinstance(spec, list):
        if len(spec) != n_in:
            raise ConfigError(f"equilibrium.inflow_density lists {len(spec)} values but there are "
                              f"{n_in} inflow faces")
        return np.array(spec, dtype=float)
    return np.full(n_in, float(spec))


def build_problem(cfg: ScenarioConfig, strict: bool = True) -> Problem:
    """Assemble the scenario and run the compatibility and hypothesis checks.

    With ``strict`` a failing compatibility check raises ``CompatibilityError``
    and a failing hypothesis check raises ``ConfigError``.
    """
    raw = cfg.raw
    grid = make_grid(raw)
    law = law_from_dict(raw["law"])
    G = make_potential(raw)
    motion = make_motion(raw)
    compat = check_compatibility(motion, G, grid, raise_on_failure=strict)
    partition = classify_boundary(grid, motion)
    src = raw["equilibrium"]
    report = None
    if "mass" in src:
        if partition.has_inflow:
            raise ConfigError("equilibrium.mass given but the boundary has inflow faces; "
                              "use equilibrium.inflow_density")
        C = constant_from_mass(law, G, motion, grid, src["mass"])
        eq = density_from_constant(law, G, motion, grid, C, source="mass", M0=src["mass"])
    else:
        if not partition.has_inflow:
            raise ConfigError("equilibrium.inflow_density given but there are no inflow faces; "
                              "use equilibrium.mass")
        rho_b = inflow_densities(src["inflow_density"], law, G, motion, partition)
        C, report = constant_from_inflow(law, G, motion, grid, rho_b, partition)
        eq = density_from_constant(law, G, motion, grid, C, source="inflow")
    hyp = check_hypotheses(eq, partition)
    if strict and not hyp.passed:
        raise ConfigError(f"equilibrium violates the convergence hypotheses: {hyp.to_dict()}")
    return Problem(cfg, grid, law, G, motion, partition, compat, eq, hyp, report)


# ------------------------------------------------------------------ initial data


def _bump_center(p, grid, rng):
    if p["center"] is not None:
        return np.array(p["center"])
    lo = np.array(grid.origin) + 0.25 * np.array(grid.extent)
    return lo + 0.5 * np.array(grid.extent) * rng.random(grid.dim)


def _shear_velocity(p, grid, scale):
    """Divergence-free field from the stream function ``sin^2(k pi x) sin^2(k pi y)``.

    Both velocity components and their normal derivatives vanish at the walls.
    """
    x = grid.centers()
    xi = (x - np.array(grid.origin)) / np.array(grid.extent)
    k = p["mode"] * np.pi
    sx, sy = np.sin(k * xi[..., 0]), np.sin(k * xi[..., 1])
    dsx = 2.0 * k * sx * np.cos(k * xi[..., 0]) / grid.extent[0]
    dsy = 2.0 * k * sy * np.cos(k * xi[..., 1]) / grid.extent[1]
    u = np.stack([sx * sx * dsy, -dsx * sy * sy], axis=-1)
    peak = np.max(np.abs(u))
    return u * (scale / peak) if peak > 0 else u


def initial_state(problem: Problem, disc: Discretization) -> FlowState:
    raw = problem.config.raw
    init = raw["initial"]
    eq = problem.eq
    if "file" in init:
        return load_snapshot(init["file"], problem.grid)
    if "equilibrium" in init:
        rho = eq.rho_E.copy()
        if np.any(rho <= 0):
            raise ConfigError("equilibrium initial data contains vacuum; the scheme needs rho > 0 "
                              "(use a perturbation with rho_min)")
        return FlowState(0.0, rho, rho[..., None] * disc.uE)
    rng = np.random.default_rng(raw["seed"])
    grid = problem.grid
    x = grid.centers()
    rho = eq.rho_E.copy()
    du = np.zeros_like(disc.uE)
    ref = float(np.max(rho))
    closed = not problem.partition.has_inflow
    rho_min = min(p["rho_min"] for p in init["perturbation"])
    for p in init["perturbation"]:
        if p["kind"] == "density-bump":
            c = _bump_center(p, grid, rng)
            r2 = np.sum((x - c) ** 2, axis=-1)
            rho = rho + p["amplitude"] * ref * np.exp(-r2 / (2.0 * p["width"] ** 2))
        else:
            c_ref = float(np.sqrt(np.max(problem.law.sound_speed_sq(eq.rho_E[eq.rho_E > 0]))))
            du = du + _shear_velocity(p, grid, p["amplitude"] * max(c_ref, problem.motion.max_speed(grid)))
    rho = np.maximum(rho, rho_min * ref)
    if closed:
        rho *= (eq.M0 if eq.M0 is not None else eq.mass) / integrate_cells(grid, rho)
    return FlowState(0.0, rho, rho[..., None] * (disc.uE + du))
