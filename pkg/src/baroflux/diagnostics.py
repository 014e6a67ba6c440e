"""Scalar functionals along a trajectory.

The central quantity is the relative energy

    E(t) = int  rho |u - u_E|^2 / 2 + P(rho) - (rho - rho_E)(Phi - C_E) - P(rho_E)

with ``Phi = G + |u_E|^2/2``; for exact finite-energy solutions it is
non-increasing and its windowed balance against the viscous dissipation and
the outflow Bregman flux is non-positive.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .eos import PressureLaw, bregman
from .geometry import integrate_cells
from .solver import _reference
from .solver.scheme import Discretization, FlowState, Ghosts, apply_boundary, boundary_mass_fluxes, face_divergence

RHO_TINY = 1e-12
M_TINY = 1e-12

SERIES_COLUMNS = (
    "t", "mass", "E_rel", "dissipation_rate", "outflow_term", "mass_flux_in", "mass_flux_out",
    "err_rho_Lgamma", "err_mom", "dt_used",
)


class InfiniteEnergyError(ValueError):
    """Vacuum cell carrying momentum: the relative energy is infinite."""


class WindowError(ValueError):
    pass


@dataclass
class DiagnosticsRecord:
    t: float
    mass: float
    E_rel: float
    dissipation_rate: float
    outflow_term: float
    mass_flux_in: float
    mass_flux_out: float
    err_rho_Lgamma: float
    err_mom: float
    dt_used: float
    # time integrals of the boundary mass fluxes since t = 0, accumulated
    # from the stage fluxes of the scheme; not part of the CSV series
    cum_flux_in: float = 0.0
    cum_flux_out: float = 0.0

    def row(self) -> List[float]:
        return [getattr(self, c) for c in SERIES_COLUMNS]


# ----------------------------------------------------------------- energy density


def relative_energy_density(rho, m, uE, law: PressureLaw, rho_E, head_minus_CE,
                            rho_tiny: float = RHO_TINY, m_tiny: float = M_TINY):
    rho = np.asarray(rho, dtype=float)
    m = np.asarray(m, dtype=float)
    uE = np.asarray(uE, dtype=float)
    if np.any(rho < 0):
        raise ValueError(f"negative density {float(np.min(rho))}")
    vac = rho <= rho_tiny
    mnorm = np.linalg.norm(m, axis=-1) if m.ndim else np.abs(m)
    if np.any(vac & (mnorm > m_tiny)):
        raise InfiniteEnergyError("vacuum cell with non-zero momentum has infinite energy")
    dev = m - rho[..., None] * uE if m.ndim == rho.ndim + 1 else m - rho * uE
    dev2 = np.sum(dev * dev, axis=-1) if m.ndim == rho.ndim + 1 else dev * dev
    safe = np.where(vac, 1.0, rho)
    kinetic = np.where(vac, 0.0, dev2 / (2.0 * safe))
    out = kinetic + bregman(law, rho, rho_E, head_minus_CE)
    return float(out) if np.ndim(out) == 0 else out


def relative_energy(state: FlowState, disc: Discretization) -> float:
    eq = disc.eq
    dens = relative_energy_density(state.rho, state.m, disc.uE, disc.law, eq.rho_E, eq.head_minus_CE)
    return integrate_cells(disc.grid, dens)


def energy_parts(state: FlowState, disc: Discretization) -> Dict[str, float]:
    eq = disc.eq
    u = state.m / state.rho[..., None]
    kin = 0.5 * state.rho * np.sum((u - disc.uE) ** 2, axis=-1)
    pot = bregman(disc.law, state.rho, eq.rho_E, eq.head_minus_CE)
    return {"kinetic": integrate_cells(disc.grid, kin), "potential": integrate_cells(disc.grid, pot)}


# ---------------------------------------------------------------------- dissipation


def _face_dissipation(upad, spacing, mu, lam) -> float:
    """``int S(Du):Du`` from the face gradients the viscous operator uses.

    Each face family (normal to x, normal to y) gives a rule with half weights
    on boundary faces; the families are averaged.
    """
    dim = upad.ndim - 1
    vol = float(np.prod(spacing))
    total = 0.0
    for a, G in enumerate(_reference.face_velocity_gradients(upad, spacing)):
        D = 0.5 * (G + np.swapaxes(G, -1, -2))
        div = np.trace(D, axis1=-2, axis2=-1)
        dev = D - (div / dim)[..., None, None] * np.eye(dim)
        f = 2.0 * mu * np.sum(dev * dev, axis=(-2, -1)) + lam * div * div
        w = np.ones(f.shape[a])
        w[0] = w[-1] = 0.5
        shape = [1] * f.ndim
        shape[a] = -1
        total += float(np.sum(f * w.reshape(shape))) * vol
    return total / dim


def dissipation_rate(state: FlowState, disc: Discretization, ghosts: Optional[Ghosts] = None,
                     check_identity: bool = True) -> float:
    """Viscous dissipation; also evaluated from ``u - u_E`` and required to agree."""
    if ghosts is None:
        ghosts = apply_boundary(state, disc)
    prm = disc.params
    from_u = _face_dissipation(ghosts.upad, disc.spacing, prm.mu, prm.lam)
    if check_identity:
        from_w = _face_dissipation(ghosts.upad - disc.uE_pad, disc.spacing, prm.mu, prm.lam)
        grad = disc.motion.gradient()
        floor = 1e-12 * (2 * prm.mu + prm.lam) * (1.0 + float(np.sum(grad * grad))) * float(np.prod(disc.grid.extent))
        dev = abs(from_u - from_w)
        if dev > 1e-10 * max(from_u, from_w) + floor:
            raise AssertionError(f"dissipation differs between u and u - u_E: {from_u!r} vs {from_w!r}")
    return from_u


def dissipation_from_padded(upad, spacing, mu, lam) -> float:
    return _face_dissipation(np.asarray(upad, dtype=float), tuple(spacing), mu, lam)


# ------------------------------------------------------------------ boundary terms


def outflow_term(state: FlowState, disc: Discretization) -> float:
    """Outflow integral of the Bregman integrand times ``u_E . n``."""
    total = 0.0
    for s in disc.sides:
        if not np.any(s.outflow):
            continue
        rho_int = np.ravel(state.rho[s.cell])[s.outflow]
        b = bregman(disc.law, rho_int, s.rho_E[s.outflow], s.head[s.outflow])
        total += float(np.sum(b * s.un[s.outflow] * s.measure[s.outflow]))
    return total


# -------------------------------------------------------------------- convergence


def convergence_metrics(state: FlowState, disc: Discretization):
    """``(||rho - rho_E||_{L^g}, ||rho (u - u_E)||_{L^{2g/(g+1)}})``."""
    g = disc.law.metric_exponent
    vol = disc.grid.cell_volume
    drho = np.abs(state.rho - disc.eq.rho_E)
    err_rho = float(np.sum(drho**g) * vol) ** (1.0 / g)
    q = 2.0 * g / (g + 1.0)
    dm = np.linalg.norm(state.m - state.rho[..., None] * disc.uE, axis=-1)
    err_mom = float(np.sum(dm**q) * vol) ** (1.0 / q)
    return err_rho, err_mom


# ------------------------------------------------------------------------ records


def make_record(state: FlowState, disc: Discretization, dt_used: float = 0.0,
                cum_flux_in: float = 0.0, cum_flux_out: float = 0.0) -> DiagnosticsRecord:
    ghosts = apply_boundary(state, disc)
    fin, fout = boundary_mass_fluxes(ghosts, disc)
    err_rho, err_mom = convergence_metrics(state, disc)
    return DiagnosticsRecord(
        t=float(state.t),
        mass=integrate_cells(disc.grid, state.rho),
        E_rel=relative_energy(state, disc),
        dissipation_rate=dissipation_rate(state, disc, ghosts),
        outflow_term=outflow_term(state, disc),
        mass_flux_in=fin,
        mass_flux_out=fout,
        err_rho_Lgamma=err_rho,
        err_mom=err_mom,
        dt_used=float(dt_used),
        cum_flux_in=cum_flux_in,
        cum_flux_out=cum_flux_out,
    )


def _window(records: Sequence[DiagnosticsRecord], t1, t2, equidistant=True):
    if len(records) < 2:
        raise WindowError("need at least two records")
    ts = np.array([r.t for r in records])
    t1 = ts[0] if t1 is None else t1
    t2 = ts[-1] if t2 is None else t2
    scale = max(1.0, abs(ts[-1]))
    i1 = np.flatnonzero(np.abs(ts - t1) <= 1e-9 * scale)
    i2 = np.flatnonzero(np.abs(ts - t2) <= 1e-9 * scale)
    if not len(i1) or not len(i2) or i2[0] <= i1[0]:
        raise WindowError(f"window [{t1}, {t2}] does not align with record times")
    sel = list(records[i1[0]: i2[0] + 1])
    if equidistant and len(sel) > 2:
        dts = np.diff([r.t for r in sel])
        if np.max(dts) - np.min(dts) > 1e-6 * np.max(dts):
            raise WindowError("records in the window are not equidistant in time")
    return sel


def energy_inequality_residual(records: Sequence[DiagnosticsRecord], t1=None, t2=None,
                               eps_den: float = 1e-300):
    """Windowed energy balance ``R = E(t2) - E(t1) + int (dissipation + outflow) dt``.

    Time integral by the trapezoidal rule over the records. Returns
    ``(R, max(R, 0) / (E(t1) + eps_den))``; exact solutions have ``R <= 0``.
    """
    sel = _window(records, t1, t2)
    t = np.array([r.t for r in sel])
    rate = np.array([r.dissipation_rate + r.outflow_term for r in sel])
    R = sel[-1].E_rel - sel[0].E_rel + float(trapezoid(rate, t))
    return R, max(R, 0.0) / (sel[0].E_rel + eps_den)


ENERGY_TOL_CONSTANT = 50.0


def energy_tolerance(records: Sequence[DiagnosticsRecord], h: float, t1=None, t2=None,
                     constant: float = ENERGY_TOL_CONSTANT) -> float:
    """Admissible energy residual for a first-order scheme on spacing ``h``.

    ``constant * h * (E(t1) + int (dissipation + outflow) dt)``: the discrete
    balance may exceed the exact one by an O(h) fraction of the energy that
    enters the window.
    """
    sel = _window(records, t1, t2)
    t = np.array([r.t for r in sel])
    rate = np.array([r.dissipation_rate + r.outflow_term for r in sel])
    return constant * h * (sel[0].E_rel + float(trapezoid(rate, t)))


def windowed_energy_residuals(records: Sequence[DiagnosticsRecord]) -> np.ndarray:
    """Energy residual of every pair of consecutive records."""
    return np.array([energy_inequality_residual(records[k:k + 2])[0] for k in range(len(records) - 1)])


def mass_balance_residual(records: Sequence[DiagnosticsRecord], t1=None, t2=None) -> float:
    """``Delta mass + int (outflow + inflow flux) dt`` over a window.

    Uses the accumulated stage fluxes of the scheme, so for conservative
    stepping it vanishes to round-off.
    """
    sel = _window(records, t1, t2, equidistant=False)
    a, b = sel[0], sel[-1]
    return (b.mass - a.mass) + (b.cum_flux_out - a.cum_flux_out) + (b.cum_flux_in - a.cum_flux_in)


# ------------------------------------------------------------ renormalized balance


def cutoff_function(K: float):
    """``b_K`` and ``b_K'``: identity below ``K``, constant above ``2K``.

    On ``[K, 2K]`` the derivative follows the cubic Hermite step from 1 to 0,
    so ``b_K`` is C^2 with compactly supported derivative.
    """
    if not K > 0:
        raise ValueError(f"cutoff K must be positive, got {K}")

    def b(r):
        r = np.asarray(r, dtype=float)
        s = np.clip((r - K) / K, 0.0, 1.0)
        mid = K + K * (s - s**3 + 0.5 * s**4)
        return np.where(r <= K, r, mid)

    def db(r):
        r = np.asarray(r, dtype=float)
        s = np.clip((r - K) / K, 0.0, 1.0)
        return np.where(r <= K, 1.0, 1.0 - 3.0 * s**2 + 2.0 * s**3)

    return b, db


@dataclass
class RenormRecord:
    t: float
    int_b: float
    cum_flux: float
    cum_div: float


class RenormalizationAudit:
    """Accumulates the renormalized continuity balance for one cutoff ``K``.

    Boundary ``b``-fluxes use ``b(rho_E)`` on inflow faces and the interior
    trace elsewhere; the ``(b'(rho) rho - b(rho)) div u`` term uses the face
    divergence of the mass flux. Stage terms are combined with the Heun weights.
    """

    def __init__(self, K: float):
        self.K = float(K)
        self.b, self.db = cutoff_function(self.K)
        self.records: List[RenormRecord] = []
        self._flux = 0.0
        self._div = 0.0

    def _stage_terms(self, rho, ghosts, disc):
        flux = 0.0
        for s, rf in zip(disc.sides, ghosts.face_rho):
            flux += float(np.sum(self.b(rf) * s.un * s.measure))
        div = face_divergence(ghosts, disc)
        dens = (self.db(rho) * rho - self.b(rho)) * div
        return flux, integrate_cells(disc.grid, dens)

    def on_step(self, info, disc):
        f0, d0 = self._stage_terms(info.stages[0].rho, info.stages[0].ghosts, disc)
        f1, d1 = self._stage_terms(info.stages[1].rho, info.stages[1].ghosts, disc)
        self._flux += 0.5 * info.dt * (f0 + f1)
        self._div += 0.5 * info.dt * (d0 + d1)

    def on_record(self, state, disc):
        self.records.append(RenormRecord(state.t, integrate_cells(disc.grid, self.b(state.rho)),
                                         self._flux, self._div))


def renormalized_continuity_residual(audit: RenormalizationAudit, t1=None, t2=None) -> float:
    recs = audit.records
    if len(recs) < 2:
        raise WindowError("need at least two renormalization records")
    ts = np.array([r.t for r in recs])
    i1 = 0 if t1 is None else int(np.argmin(np.abs(ts - t1)))
    i2 = len(recs) - 1 if t2 is None else int(np.argmin(np.abs(ts - t2)))
    a, b = recs[i1], recs[i2]
    return (b.int_b - a.int_b) + (b.cum_flux - a.cum_flux) + (b.cum_div - a.cum_div)


# ------------------------------------------------------------------ trajectory checks


def monotonicity_violations(records: Sequence[DiagnosticsRecord], t_end: float, rel: float = 1e-3):
    """Indices ``k`` where ``E(t_{k+1}) - E(t_k)`` exceeds ``rel * E(0) * dt_k / t_end``."""
    E0 = records[0].E_rel
    bad = []
    for k in range(len(records) - 1):
        dt = records[k + 1].t - records[k].t
        if records[k + 1].E_rel - records[k].E_rel > rel * E0 * dt / t_end:
            bad.append(k)
    return bad


def hitting_time(records: Sequence[DiagnosticsRecord], fraction: float = 0.1, quantity: str = "norms"):
    """First record time after which the quantity stays below ``fraction`` of its initial value."""
    if quantity == "norms":
        vals = np.array([r.err_rho_Lgamma + r.err_mom for r in records])
    else:
        vals = np.array([getattr(r, quantity) for r in records])
    thr = fraction * vals[0]
    above = np.flatnonzero(vals > thr)
    if not len(above):
        return records[0].t
    k = above[-1] + 1
    return records[k].t if k < len(records) else float("inf")
