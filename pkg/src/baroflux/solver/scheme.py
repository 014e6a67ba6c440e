"""Collocated finite-volume scheme for the barotropic Navier-Stokes system.

Unknowns are cell densities ``rho`` and momenta ``m = rho u``. Convection is
donor-cell upwind, the viscous stress uses compact face gradients, the
pressure gradient is centred and time stepping is two-stage SSP (Heun).

Boundary treatment, per face class:

* velocity: the deviation ``u - u_E`` is reflected oddly, so the
  face-interpolated velocity equals ``u_E`` at the face;
* convected density: ``rho_E`` on inflow faces, the interior value elsewhere;
* pressure: ``p(rho_E)`` on inflow faces; elsewhere the interior deviation
  from the equilibrium pressure is extrapolated to the face.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..equilibrium import EquilibriumState
from ..geometry import BoundaryPartition, Grid, PotentialField, RigidMotion
from . import _reference
from . import backend as _backend


class SolverError(RuntimeError):
    pass


class PositivityError(SolverError):
    """Density fell to or below the guard; the run cannot continue."""

    def __init__(self, cell, t, rho_value, cfl):
        self.cell = tuple(int(c) for c in np.atleast_1d(cell))
        self.t = float(t)
        self.rho_value = float(rho_value)
        self.suggested_cfl = 0.5 * cfl
        self.trajectory = None
        super().__init__(f"density {rho_value:.3e} at cell {self.cell}, t={t:.6g}; "
                         f"try cfl <= {self.suggested_cfl:g}")


@dataclass(frozen=True)
class SolverParams:
    mu: float
    lam: float = 0.0
    cfl: float = 0.4
    rho_floor_guard: float = 1e-10

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"shear viscosity mu must be positive, got {self.mu}")
        if not self.lam >= 0:
            raise ValueError(f"bulk coefficient lambda must be non-negative, got {self.lam}")
        if not 0 < self.cfl < 1:
            raise ValueError(f"cfl must lie in (0, 1), got {self.cfl}")

    def effective_viscosity(self, dim: int) -> float:
        return 2.0 * self.mu * (1.0 - 1.0 / dim) + self.lam

    def validate(self, dim: int) -> None:
        if not self.effective_viscosity(dim) > 0:
            raise ValueError("effective 1D viscosity must be positive (in 1D only lambda acts)")


@dataclass
class FlowState:
    t: float
    rho: np.ndarray
    m: np.ndarray

    def copy(self) -> "FlowState":
        return FlowState(self.t, self.rho.copy(), self.m.copy())

    @property
    def velocity(self) -> np.ndarray:
        return self.m / self.rho[..., None]


@dataclass
class _Side:
    axis: int
    high: bool
    faces: slice
    un: np.ndarray  # u_E . n (outward)
    inflow: np.ndarray
    outflow: np.ndarray
    rho_E: np.ndarray
    p_E: np.ndarray
    head: np.ndarray  # G + |u_E|^2/2 - C_E
    uE: np.ndarray  # (k, d)
    measure: np.ndarray
    cell: tuple  # index of adjacent interior cells
    p_E_cell: np.ndarray
    ghost: tuple = ()  # index of the ghost row/column in padded arrays
    p_E_shift: np.ndarray = None  # p_E(face) - p_E(adjacent cell)
    in_measure: np.ndarray = None
    out_measure: np.ndarray = None


class Discretization:
    """Everything about a scenario that stays fixed while time stepping."""

    def __init__(self, grid: Grid, law, G: PotentialField, motion: RigidMotion, eq: EquilibriumState,
                 partition: BoundaryPartition, params: SolverParams, backend: Optional[str] = None):
        params.validate(grid.dim)
        self.grid, self.law, self.G, self.motion = grid, law, G, motion
        self.eq, self.partition, self.params = eq, partition, params
        self.backend, self._rhs = _backend.get_rhs(backend)
        x = grid.centers()
        self.uE = motion.velocity(x)
        self.uE_pad = motion.velocity(grid.centers(ghosts=1))
        self.gradG = np.ascontiguousarray(G.gradient(x))
        self.spacing = grid.spacing
        p_E_cells = law.pressure(eq.rho_E)
        faces = partition.faces
        names = ["west", "east"] + (["south", "north"] if grid.dim == 2 else [])
        self.sides: List[_Side] = []
        for k, name in enumerate(names):
            axis, high = k // 2, bool(k % 2)
            sl = faces.side_slice(name)
            cell = [slice(None)] * grid.dim
            cell[axis] = grid.cells[axis] - 1 if high else 0
            cell = tuple(cell)
            rho_Ef = eq.boundary_rho[sl]
            self.sides.append(_Side(
                axis=axis, high=high, faces=sl,
                un=partition.normal_velocity[sl],
                inflow=partition.inflow[sl], outflow=partition.outflow[sl],
                rho_E=rho_Ef, p_E=law.pressure(rho_Ef), head=eq.boundary_head[sl],
                uE=motion.velocity(faces.points[sl]), measure=faces.measure[sl],
                cell=cell, p_E_cell=np.ravel(p_E_cells[cell]),
            ))
            side = self.sides[-1]
            ghost = [slice(1, -1)] * grid.dim
            ghost[axis] = -1 if high else 0
            if grid.dim == 1:
                ghost[axis] = slice(-1, None) if high else slice(0, 1)
            side.ghost = tuple(ghost)
            side.p_E_shift = side.p_E - side.p_E_cell
            side.in_measure = np.where(side.inflow, side.measure, 0.0)
            side.out_measure = np.where(side.inflow, 0.0, side.measure)
        # the same boundary data flattened in face order, for the fused kernels
        cat = np.concatenate
        self._b_un = cat([s.un for s in self.sides])
        self._b_in_measure = cat([s.in_measure for s in self.sides])
        self._b_out_measure = cat([s.out_measure for s in self.sides])
        self._fused = _backend.fused_kernels(self.backend)
        self._law_kind = {"gamma": 0, "isothermal": 1}.get(law.to_dict()["law"])
        if self._law_kind is None:
            self._fused = None
        if self._fused is not None:
            self._b_args = (
                np.ascontiguousarray(cat([s.inflow for s in self.sides]).astype(np.uint8)),
                np.ascontiguousarray(cat([s.rho_E for s in self.sides])),
                np.ascontiguousarray(cat([s.p_E for s in self.sides])),
                np.ascontiguousarray(cat([s.p_E_shift for s in self.sides])),
                np.ascontiguousarray(self._b_un),
                np.ascontiguousarray(cat([s.uE for s in self.sides])),
                self._law_kind, float(law.a), float(getattr(law, "gamma", 1.0)),
            )
            self._uE_pad_c = np.ascontiguousarray(self.uE_pad)

    @property
    def dim(self) -> int:
        return self.grid.dim

    def equilibrium_state(self, t: float = 0.0) -> FlowState:
        rho = self.eq.rho_E.copy()
        return FlowState(t, rho, rho[..., None] * self.uE)


@dataclass
class Ghosts:
    upad: np.ndarray
    ppad: np.ndarray
    face_rho: List[np.ndarray]  # per side, convected boundary density
    face_flux: List[np.ndarray]  # per side, outward normal mass flux density
    bmass: list
    bmom: list


def pad_deviation(w: np.ndarray, dim: int, out: Optional[np.ndarray] = None) -> np.ndarray:
    """Odd reflection of a vector field across every boundary face.

    Corners get the product of two reflections, i.e. an even copy.
    """
    shape = tuple(n + 2 for n in w.shape[:dim]) + w.shape[dim:]
    if out is None:
        out = np.empty(shape)
    inner = (slice(1, -1),) * dim
    out[inner] = w
    for a in range(dim):
        # after axis a-1 is filled, reflecting along a also fills the corners
        idx = [slice(None)] * dim
        src = [slice(None)] * dim
        for b in range(a + 1, dim):
            idx[b] = src[b] = slice(1, -1)
        idx[a], src[a] = 0, 1
        out[tuple(idx)] = -out[tuple(src)]
        idx[a], src[a] = -1, -2
        out[tuple(idx)] = -out[tuple(src)]
    return out


def apply_boundary(state: FlowState, disc: Discretization) -> Ghosts:
    dim = disc.dim
    rho = state.rho
    w = state.m / rho[..., None]
    w -= disc.uE
    upad = pad_deviation(w, dim)
    upad += disc.uE_pad
    # rho > 0 is guaranteed by the stepping guard, so skip the domain check
    p = disc.law._p(rho)
    ppad = np.empty(tuple(n + 2 for n in rho.shape))
    ppad[(slice(1, -1),) * dim] = p
    face_rho, face_flux = [], []
    bmass = [[None, None] for _ in range(dim)]
    bmom = [[None, None] for _ in range(dim)]
    for s in disc.sides:
        rho_int = rho[s.cell]
        p_int = p[s.cell]
        rf = np.where(s.inflow, s.rho_E, rho_int)
        pf = np.where(s.inflow, s.p_E, s.p_E_shift + p_int)
        q = s.un * rf
        F = q if s.high else -q
        bmass[s.axis][int(s.high)] = F
        bmom[s.axis][int(s.high)] = F[:, None] * s.uE
        ppad[s.ghost] = 2.0 * pf - p_int
        face_rho.append(rf)
        face_flux.append(q)
    return Ghosts(upad, ppad, face_rho, face_flux, bmass, bmom)


def convective_fluxes(state: FlowState, ghosts: Ghosts, disc: Discretization):
    """Per-axis ``(mass flux, momentum flux)`` face arrays."""
    return _reference.convective_fluxes(state.rho, ghosts.upad, ghosts.bmass, ghosts.bmom, disc.spacing)


def viscous_and_pressure(state: FlowState, ghosts: Ghosts, disc: Discretization) -> np.ndarray:
    """Cell force density ``div S(D u) - grad p``."""
    prm = disc.params
    return (_reference.viscous_force(ghosts.upad, disc.spacing, prm.mu, prm.lam)
            - _reference.pressure_gradient(ghosts.ppad, disc.spacing))


def face_divergence(ghosts: Ghosts, disc: Discretization) -> np.ndarray:
    """Discrete ``div u`` from the same face velocities the mass flux uses."""
    dim = disc.dim
    u = ghosts.upad[(slice(1, -1),) * dim]
    total = 0.0
    for a in range(dim):
        s_lo, s_hi = disc.sides[2 * a], disc.sides[2 * a + 1]
        n = u.shape[a]
        lo = [slice(None)] * dim
        hi = [slice(None)] * dim
        lo[a], hi[a] = slice(0, n - 1), slice(1, n)
        un = 0.5 * (u[tuple(lo)][..., a] + u[tuple(hi)][..., a])
        shape = list(u.shape[:-1])
        shape[a] = 1
        blo = (-s_lo.un).reshape(shape)
        bhi = s_hi.un.reshape(shape)
        face = np.concatenate([blo, un, bhi], axis=a)
        hi2 = [slice(None)] * dim
        lo2 = [slice(None)] * dim
        hi2[a], lo2[a] = slice(1, n + 1), slice(0, n)
        total = total + (face[tuple(hi2)] - face[tuple(lo2)]) / disc.spacing[a]
    return total


def boundary_mass_fluxes(ghosts: Ghosts, disc: Discretization) -> Tuple[float, float]:
    """``(inflow, outflow)`` integrals of the outward mass flux.

    The inflow part is non-positive; characteristic faces count as outflow.
    """
    fin = fout = 0.0
    for s, q in zip(disc.sides, ghosts.face_flux):
        fin += float(q @ s.in_measure)
        fout += float(q @ s.out_measure)
    return fin, fout


def stable_dt(state: FlowState, disc: Discretization) -> float:
    rho = state.rho
    prm, d = disc.params, disc.dim
    if disc._fused is not None:
        kind, a, gamma = disc._b_args[6:9]
        acoustic, rho_min = disc._fused.acoustic_bound(rho, state.m, kind, a, gamma, disc.spacing)
        if acoustic != acoustic:
            if np.all(np.isfinite(rho)) and np.all(np.isfinite(state.m)):
                raise SolverError("stable_dt needs a strictly positive density")
            raise SolverError(f"non-finite state at t={state.t}")
    else:
        if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(state.m))):
            raise SolverError(f"non-finite state at t={state.t}")
        if not np.all(rho > 0):
            raise SolverError("stable_dt needs a strictly positive density")
        c = np.sqrt(disc.law.sound_speed_sq(rho))
        u = state.m / rho[..., None]
        acoustic = np.inf
        for a in range(d):
            acoustic = min(acoustic, float(np.min(disc.spacing[a] / (np.abs(u[..., a]) + c))))
        rho_min = float(np.min(rho))
    h = min(disc.spacing)
    viscous = h * h * rho_min / (2.0 * d * (2.0 * prm.mu + prm.lam))
    return prm.cfl * min(acoustic, viscous)


class StageData:
    """Input of one Heun stage; ghost values are rebuilt on demand."""

    def __init__(self, t, rho, m, disc, ghosts=None):
        self.t, self.rho, self.m, self._disc = t, rho, m, disc
        self._ghosts = ghosts

    @property
    def ghosts(self) -> Ghosts:
        if self._ghosts is None:
            self._ghosts = apply_boundary(FlowState(self.t, self.rho, self.m), self._disc)
        return self._ghosts


@dataclass
class StepInfo:
    dt: float
    flux_in: float
    flux_out: float
    stages: List[StageData] = field(default_factory=list)


def _evaluate(rho, ghosts, disc):
    prm = disc.params
    return disc._rhs(rho, ghosts.upad, ghosts.ppad, disc.gradG, ghosts.bmass, ghosts.bmom,
                     disc.spacing, prm.mu, prm.lam)


def _stage(t, rho, m, disc):
    """Right-hand side plus the (inflow, outflow) boundary mass fluxes of one stage."""
    prm = disc.params
    if disc._fused is not None:
        kern = disc._fused.stage_1d if disc.dim == 1 else disc._fused.stage_2d
        drho, dm, rf = kern(np.ascontiguousarray(rho), np.ascontiguousarray(m), disc._uE_pad_c, disc.gradG, *disc._b_args,
                            *disc.spacing, prm.mu, prm.lam)
        q = disc._b_un * rf
        ghosts = None
    else:
        ghosts = apply_boundary(FlowState(t, rho, m), disc)
        drho, dm = _evaluate(rho, ghosts, disc)
        q = np.concatenate(ghosts.face_flux)
    return drho, dm, float(q @ disc._b_in_measure), float(q @ disc._b_out_measure), ghosts


def _guard(rho, t, disc):
    bad = rho <= disc.params.rho_floor_guard
    if np.any(bad) or not np.all(np.isfinite(rho)):
        bad |= ~np.isfinite(rho)
        idx = np.unravel_index(int(np.argmax(bad)), rho.shape)
        raise PositivityError(idx, t, rho[idx], disc.params.cfl)


def step(state: FlowState, disc: Discretization, dt: float) -> Tuple[FlowState, StepInfo]:
    """One Heun step; returns the new state and the exact boundary mass fluxes used."""
    t0 = state.t
    dr0, dm0, in0, out0, g0 = _stage(t0, state.rho, state.m, disc)
    rho1 = state.rho + dt * dr0
    m1 = state.m + dt * dm0
    _guard(rho1, t0 + dt, disc)
    dr1, dm1, in1, out1, g1 = _stage(t0 + dt, rho1, m1, disc)
    rho2 = rho1 + dt * dr1
    rho2 += state.rho
    rho2 *= 0.5
    m2 = m1 + dt * dm1
    m2 += state.m
    m2 *= 0.5
    _guard(rho2, t0 + dt, disc)
    info = StepInfo(dt, 0.5 * dt * (in0 + in1), 0.5 * dt * (out0 + out1),
                    [StageData(t0, state.rho, state.m, disc, g0), StageData(t0 + dt, rho1, m1, disc, g1)])
    return FlowState(t0 + dt, rho2, m2), info


def periodic_rhs(state: FlowState, disc: Discretization):
    """Right-hand side on a periodic copy of the grid (no walls, no pressure ghosts).

    Used to check translation equivariance of the stencils.
    """
    dim = disc.dim
    u = state.m / state.rho[..., None]
    upad = np.pad(u, [(1, 1)] * dim + [(0, 0)], mode="wrap")
    rpad = np.pad(state.rho, [(1, 1)] * dim, mode="wrap")
    ppad = disc.law.pressure(rpad)
    bmass, bmom = [], []
    for a in range(dim):
        # periodic seam flux between the last and the first cell
        lastc = [slice(1, -1)] * dim
        firstc = [slice(1, -1)] * dim
        lastc[a], firstc[a] = -2, 1
        uL, uR = upad[tuple(lastc)], upad[tuple(firstc)]
        rL, rR = rpad[tuple(lastc)], rpad[tuple(firstc)]
        un = 0.5 * (uL[..., a] + uR[..., a])
        pos = un > 0
        F = un * np.where(pos, rL, rR)
        Fm = F[..., None] * np.where(pos[..., None], uL, uR)
        bmass.append([np.ravel(F), np.ravel(F)])
        bmom.append([Fm.reshape(-1, dim), Fm.reshape(-1, dim)])
    prm = disc.params
    return disc._rhs(np.ascontiguousarray(state.rho), np.ascontiguousarray(upad), np.ascontiguousarray(ppad),
                     disc.gradG, bmass, bmom, disc.spacing, prm.mu, prm.lam)
