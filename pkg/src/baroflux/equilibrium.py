"""Stationary states ``rho_E`` for a rigid motion ``u_E`` and potential ``G``.

The stationary density is determined pointwise by the effective potential
``Phi = G + |u_E|^2/2``::

    rho_E = (P')^{-1}[Phi - C_E]^+        (laws with P'(0+) = 0)
    rho_E = (P')^{-1}(Phi - C_E)          (laws with P'(0+) = -inf)

The constant ``C_E`` comes either from the density prescribed on inflow faces
or, for closed domains, from the total mass.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage

from .eos import PressureLaw
from .geometry import (
    BoundaryPartition,
    Grid,
    PotentialField,
    RigidMotion,
    classify_boundary,
    effective_potential,
    integrate_cells,
)


class EquilibriumError(ValueError):
    pass


class InflowDataError(EquilibriumError):
    """Inflow densities cannot come from a single stationary state."""


class HypothesisViolation(EquilibriumError):
    pass


class BracketError(EquilibriumError):
    pass


@dataclass(frozen=True)
class EquilibriumState:
    rho_E: np.ndarray
    C_E: float
    vacuum_mask: np.ndarray
    source: str  # "inflow" or "mass"
    boundary_rho: np.ndarray
    boundary_head: np.ndarray  # Phi - C_E on boundary faces
    head_minus_CE: np.ndarray  # Phi - C_E at cell centres
    mass: float
    M0: Optional[float] = None

    @property
    def vacuum_fraction(self) -> float:
        return float(np.mean(self.vacuum_mask))


def _density(law: PressureLaw, arg):
    return law.potential_prime_inverse(arg)


def density_from_constant(law: PressureLaw, G: PotentialField, motion: RigidMotion, grid: Grid,
                          C_E: float, source: str = "constant", M0: Optional[float] = None) -> EquilibriumState:
    x = grid.centers()
    arg = effective_potential(G, motion, x) - C_E
    rho = _density(law, arg)
    faces = grid.boundary_faces()
    barg = effective_potential(G, motion, faces.points) - C_E
    return EquilibriumState(
        rho_E=rho,
        C_E=float(C_E),
        vacuum_mask=rho <= 0.0,
        source=source,
        boundary_rho=_density(law, barg),
        boundary_head=barg,
        head_minus_CE=arg,
        mass=integrate_cells(grid, rho),
        M0=M0,
    )


def equilibrium_density_at(law: PressureLaw, G: PotentialField, motion: RigidMotion, C_E: float, x) -> np.ndarray:
    """Evaluate the stationary density at arbitrary points (e.g. ghost centres)."""
    return _density(law, effective_potential(G, motion, x) - C_E)


@dataclass
class InflowConsistency:
    C_E: float
    max_deviation: float
    tolerance: float
    n_faces: int

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance


def constant_from_inflow(law: PressureLaw, G: PotentialField, motion: RigidMotion, grid: Grid, rho_b,
                         partition: Optional[BoundaryPartition] = None,
                         rel_tol: float = 1e-8) -> Tuple[float, InflowConsistency]:
    """Recover ``C_E`` from inflow densities.

    ``rho_b`` is a scalar or one value per inflow face (in boundary-face order).
    Each face gives ``Phi(x_f) - P'(rho_b)``; the mean is returned and faces
    disagreeing by more than ``rel_tol * (1 + |C_E|)`` raise.
    """
    if partition is None:
        partition = classify_boundary(grid, motion)
    mask = partition.inflow
    if not np.any(mask):
        raise EquilibriumError("no inflow faces: C_E must come from the total mass")
    pts = partition.faces.points[mask]
    rb = np.broadcast_to(np.asarray(rho_b, dtype=float), (int(mask.sum()),))
    if not np.all(rb > 0.0):
        raise HypothesisViolation("inflow density must be strictly positive on every inflow face "
                                  f"(min {float(np.min(rb)):.3e})")
    per_face = effective_potential(G, motion, pts) - law.potential_prime(rb)
    C_E = float(np.mean(per_face))
    dev = float(np.max(np.abs(per_face - C_E)))
    tol = rel_tol * (1.0 + abs(C_E))
    report = InflowConsistency(C_E, dev, tol, int(mask.sum()))
    if not report.passed:
        raise InflowDataError(f"boundary data not equilibrium-compatible: per-face constants spread "
                              f"{dev:.3e} > {tol:.3e}")
    return C_E, report


def mass_map(law: PressureLaw, G: PotentialField, motion: RigidMotion, grid: Grid, C_E: float) -> float:
    x = grid.centers()
    return integrate_cells(grid, _density(law, effective_potential(G, motion, x) - C_E))


def constant_from_mass(law: PressureLaw, G: PotentialField, motion: RigidMotion, grid: Grid, M0: float,
                       rel_tol: float = 1e-10, max_iter: int = 200, max_doublings: int = 60) -> float:
    """Solve ``mass_map(C) = M0`` by bracket doubling and bisection.

    The mass map is non-increasing in ``C`` and only piecewise smooth where the
    vacuum boundary moves, so no derivative information is used.
    """
    if not M0 > 0:
        raise EquilibriumError(f"target mass must be positive, got {M0}")
    phi = effective_potential(G, motion, grid.centers())
    vol = grid.cell_volume

    def mass(c):
        return float(np.sum(_density(law, phi - c)) * vol)

    # start from the constant that spreads M0 uniformly at the mean potential
    measure = vol * phi.size
    mid = float(np.mean(phi)) - float(law.potential_prime(M0 / measure))
    lo, hi, step = mid - 1.0, mid + 1.0, 1.0
    for _ in range(max_doublings):
        if mass(lo) >= M0:
            break
        step *= 2.0
        lo = mid - step
    else:
        raise BracketError("could not bracket C_E from below")
    step = 1.0
    for _ in range(max_doublings):
        if mass(hi) <= M0:
            break
        step *= 2.0
        hi = mid + step
    else:
        raise BracketError("could not bracket C_E from above")

    tol = rel_tol * M0
    c = 0.5 * (lo + hi)
    for _ in range(max_iter):
        c = 0.5 * (lo + hi)
        m = mass(c)
        if abs(m - M0) <= tol or hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(c)):
            break
        if m > M0:
            lo = c
        else:
            hi = c
    return c


# ------------------------------------------------------------------- hypotheses


@dataclass
class HypothesisReport:
    components: int
    nonempty: bool
    inflow_min_density: Optional[float]
    strictly_positive: bool

    @property
    def passed(self) -> bool:
        inflow_ok = self.inflow_min_density is None or self.inflow_min_density > 0.0
        return self.nonempty and self.components == 1 and inflow_ok

    def to_dict(self) -> dict:
        return {
            "components": self.components,
            "nonempty": self.nonempty,
            "inflow_min_density": self.inflow_min_density,
            "strictly_positive": self.strictly_positive,
            "passed": self.passed,
        }


def count_components(positive: np.ndarray) -> int:
    """Connected components of a boolean cell mask under edge adjacency."""
    _, n = ndimage.label(positive)
    return int(n)


def check_hypotheses(eq: EquilibriumState, partition: BoundaryPartition) -> HypothesisReport:
    positive = ~eq.vacuum_mask
    inflow = partition.inflow
    inflow_min = float(np.min(eq.boundary_rho[inflow])) if np.any(inflow) else None
    return HypothesisReport(
        components=count_components(positive),
        nonempty=bool(np.any(positive)),
        inflow_min_density=inflow_min,
        strictly_positive=bool(np.all(positive)),
    )


# ---------------------------------------------------------------------- residual


def equilibrium_residual(eq: EquilibriumState, law: PressureLaw, G: PotentialField, motion: RigidMotion,
                         grid: Grid) -> float:
    """Max-norm of ``grad p(rho_E) - rho_E grad(G + |u_E|^2/2)`` at cell centres.

    Centred differences of ``p(rho_E)`` use the closed-form density at ghost
    centres; cells whose stencil touches vacuum are skipped.
    """
    xg = grid.centers(ghosts=1)
    rho_pad = equilibrium_density_at(law, G, motion, eq.C_E, xg)
    p_pad = law.pressure(rho_pad)
    x = grid.centers()
    grad_phi = G.gradient(x) + (motion.velocity(x) @ motion.gradient())
    rho = rho_pad[(slice(1, -1),) * grid.dim]
    keep = rho > 0.0
    worst = 0.0
    for ax in range(grid.dim):
        h = grid.spacing[ax]
        fwd = [slice(1, -1)] * grid.dim
        bwd = [slice(1, -1)] * grid.dim
        fwd[ax], bwd[ax] = slice(2, None), slice(None, -2)
        dp = (p_pad[tuple(fwd)] - p_pad[tuple(bwd)]) / (2.0 * h)
        keep &= (rho_pad[tuple(fwd)] > 0.0) & (rho_pad[tuple(bwd)] > 0.0)
        worst = np.maximum(worst, np.abs(dp - rho * grad_phi[..., ax]))
    worst = np.where(keep, worst, 0.0)
    return float(np.max(worst)) if np.any(keep) else 0.0
