import numpy as np
import pytest

from baroflux.eos import GammaLaw, Isothermal
from baroflux.equilibrium import constant_from_mass, density_from_constant
from baroflux.geometry import Grid, PotentialField, RigidMotion, classify_boundary
from baroflux.solver import (
    COMPILED_AVAILABLE,
    Discretization,
    FlowState,
    PositivityError,
    SolverError,
    SolverParams,
    apply_boundary,
    convective_fluxes,
    periodic_rhs,
    stable_dt,
    step,
    viscous_and_pressure,
)
from baroflux.solver.backend import get_rhs
from baroflux.solver.run import run, run_steps

from conftest import scenario_state

BACKENDS = ["python"] + (["compiled"] if COMPILED_AVAILABLE else [])


def make_disc(grid, law, G, motion, C, params, backend=None):
    eq = density_from_constant(law, G, motion, grid, C)
    return Discretization(grid, law, G, motion, eq, classify_boundary(grid, motion), params, backend=backend)


def uniform_state(disc, rho, u):
    r = np.full(disc.grid.shape, float(rho))
    return FlowState(0.0, r, r[..., None] * np.broadcast_to(np.asarray(u, float), disc.uE.shape))


def test_params_validation():
    with pytest.raises(ValueError):
        SolverParams(0.0)
    with pytest.raises(ValueError):
        SolverParams(1.0, -0.1)
    with pytest.raises(ValueError):
        SolverParams(1.0, cfl=1.0)
    with pytest.raises(ValueError, match="effective 1D viscosity must be positive"):
        SolverParams(1.0, 0.0).validate(1)
    assert SolverParams(0.5, 0.2).effective_viscosity(2) == pytest.approx(0.7)


def test_ghosts_reproduce_affine_motion():
    grid = Grid(2, (1.0, 1.0), (8, 8))
    motion = RigidMotion((0.3, -0.2), 1.3, (0.4, 0.6))
    disc = make_disc(grid, GammaLaw(), PotentialField.constant(0.0), motion, -1.0, SolverParams(0.1))
    rho = np.random.default_rng(0).uniform(0.5, 2.0, grid.shape)
    g = apply_boundary(FlowState(0.0, rho, rho[..., None] * disc.uE), disc)
    inner = (slice(1, -1), slice(1, -1))
    uE_pad = motion.velocity(grid.centers(ghosts=1))
    for idx in [(0, inner[1]), (-1, inner[1]), (inner[0], 0), (inner[0], -1)]:
        assert np.allclose(g.upad[idx], uE_pad[idx], atol=1e-14)
    # face interpolation of interior and ghost velocity equals u_E(face)
    west = 0.5 * (g.upad[0, 1:-1] + g.upad[1, 1:-1])
    assert np.allclose(west, motion.velocity(disc.partition.faces.points[disc.sides[0].faces]), atol=1e-14)


def test_boundary_densities():
    grid = Grid(1, (1.0,), (8,))
    disc = make_disc(grid, GammaLaw(1, 2), PotentialField.constant(0.0), RigidMotion((1.0,)), -1.5, SolverParams(1e-3, 0.1))
    rho = np.full(8, 2.7)
    g = apply_boundary(FlowState(0.0, rho, rho[:, None] * 1.0), disc)
    assert g.face_rho[0][0] == pytest.approx(1.0)  # inflow: rho_E(face)
    assert g.face_rho[1][0] == 2.7  # outflow: interior value
    assert g.face_flux[0][0] == pytest.approx(-1.0) and g.face_flux[1][0] == pytest.approx(2.7)


def test_convective_flux_examples():
    grid = Grid(2, (1.0, 1.0), (6, 5))
    disc = make_disc(grid, GammaLaw(), PotentialField.constant(0.0), RigidMotion((1.0, 0.0)), -1.5, SolverParams(0.1))
    s = uniform_state(disc, 1.0, (1.0, 0.0))
    (Fx, Fmx), (Fy, Fmy) = convective_fluxes(s, apply_boundary(s, disc), disc)
    assert np.all(Fx == 1.0) and np.all(Fy == 0.0) and np.all(Fmy == 0.0)
    assert np.all(np.diff(Fx, axis=0) == 0.0)

    line = Grid(1, (1.0,), (4,))
    d1 = make_disc(line, GammaLaw(), PotentialField.constant(0.0), RigidMotion((1.0,)), -1.5, SolverParams(1e-3, 0.1))
    rho = np.array([1.0, 3.0, 3.0, 3.0])
    st1 = FlowState(0.0, rho, rho[:, None] * 1.0)
    ((F, Fm),) = convective_fluxes(st1, apply_boundary(st1, d1), d1)
    assert F[1] == 1.0 and F[2] == 3.0 and Fm[1, 0] == 1.0


def test_viscous_and_pressure_examples():
    grid = Grid(2, (1.0, 1.0), (16, 16))
    disc = make_disc(grid, Isothermal(1), PotentialField.constant(0.0), RigidMotion.zero(2), -1.0, SolverParams(1.0))
    x = grid.centers()
    u = np.zeros_like(x)
    u[..., 0] = x[..., 1]
    s = FlowState(0.0, np.ones(grid.shape), u.copy())
    f = viscous_and_pressure(s, apply_boundary(s, disc), disc)
    assert np.max(np.abs(f[1:-1, 1:-1])) <= 1e-12
    # rigid motion produces no stress
    rot = RigidMotion((0.2, 0.0), 0.8, (0.5, 0.5))
    d2 = make_disc(grid, GammaLaw(), PotentialField.radial([0.5, 0.5], [0.0, 0.0, -1.0]), rot, -2.0, SolverParams(1.0, 0.5))
    rho = np.random.default_rng(1).uniform(1.0, 1.1, grid.shape)
    s2 = FlowState(0.0, rho, rho[..., None] * d2.uE)
    g2 = apply_boundary(s2, d2)
    from baroflux.solver import _reference
    visc = _reference.viscous_force(g2.upad, d2.spacing, 1.0, 0.5)
    assert np.max(np.abs(visc)) <= 1e-10
    # uniform density: no pressure force
    s3 = uniform_state(disc, 1.7, (0.0, 0.0))
    assert np.all(viscous_and_pressure(s3, apply_boundary(s3, disc), disc) == 0.0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_stable_dt_formula(backend):
    grid = Grid(1, (1.0,), (100,))
    law = GammaLaw(1, 2)
    for mu in (1.0, 1e-12):
        prm = SolverParams(mu, 0.1 if mu == 1.0 else 1e-12, cfl=0.4)
        disc = make_disc(grid, law, PotentialField.constant(0.0), RigidMotion((1.0,)), -1.5, prm, backend)
        s = uniform_state(disc, 1.0, (1.0,))
        acoustic = 0.01 / (1.0 + np.sqrt(2.0))
        viscous = 0.01**2 * 1.0 / (2 * 1 * (2 * prm.mu + prm.lam))
        assert stable_dt(s, disc) == pytest.approx(0.4 * min(acoustic, viscous), rel=1e-14)
    assert 0.4 * acoustic == pytest.approx(1.657e-3, rel=1e-3)
    assert stable_dt(s, disc) == pytest.approx(0.4 * acoustic, rel=1e-14)
    fine = make_disc(grid.refined(), law, PotentialField.constant(0.0), RigidMotion((1.0,)), -1.5, SolverParams(1.0, 0.1), backend)
    coarse = make_disc(grid, law, PotentialField.constant(0.0), RigidMotion((1.0,)), -1.5, SolverParams(1.0, 0.1), backend)
    assert stable_dt(uniform_state(fine, 1.0, (1.0,)), fine) <= 0.5 * stable_dt(uniform_state(coarse, 1.0, (1.0,)), coarse)
    bad = uniform_state(coarse, 1.0, (1.0,))
    bad.m[3] = np.nan
    with pytest.raises(SolverError, match="non-finite"):
        stable_dt(bad, coarse)


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("dim", [1, 2])
def test_constant_state_is_fixed_point(backend, dim):
    grid = Grid(dim, (1.0,) * dim, (12,) * dim)
    U = (0.7,) if dim == 1 else (0.7, -0.4)
    law = GammaLaw(1, 1.4)
    disc = make_disc(grid, law, PotentialField.constant(0.3), RigidMotion(U), 0.3 - law.potential_prime(1.3) + 0.5 * np.dot(U, U),
                     SolverParams(0.05, 0.1), backend)
    assert np.allclose(disc.eq.rho_E, 1.3)
    s0 = uniform_state(disc, 1.3, U)
    s = s0
    for _ in range(25):
        s, info = step(s, disc, stable_dt(s, disc))
    assert np.max(np.abs(s.rho - s0.rho)) <= 1e-14
    assert np.max(np.abs(s.m - s0.m)) <= 1e-14


@pytest.mark.parametrize("backend", BACKENDS)
def test_closed_box_conserves_mass(backend):
    problem, disc, s0 = scenario_state("closed-box-gravity", backend, grid__cells=[24, 24])
    M0 = float(np.sum(s0.rho) * problem.grid.cell_volume)
    s, fin, fout = run_steps(disc, s0, 300)
    M = float(np.sum(s.rho) * problem.grid.cell_volume)
    assert abs(M - M0) <= 1e-12 * M0
    assert fin == 0.0 and fout == 0.0


@pytest.mark.parametrize("backend", BACKENDS)
def test_inflow_equilibrium_fluxes_balance(backend):
    problem, disc, _ = scenario_state("channel-inflow", backend, grid__cells=[64])
    s0 = disc.equilibrium_state()
    s, fin, fout = run_steps(disc, s0, 200)
    assert fin + fout == pytest.approx(0.0, abs=1e-13)
    assert np.sum(s.rho) == pytest.approx(np.sum(s0.rho), rel=1e-14)


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("name", ["channel-inflow", "channel-inflow-2d", "rotating-square"])
def test_discrete_mass_identity(backend, name):
    cells = [64] if name == "channel-inflow" else [16, 16]
    problem, disc, s0 = scenario_state(name, backend, grid__cells=cells)
    vol = problem.grid.cell_volume
    s, fin, fout = run_steps(disc, s0, 100)
    change = (np.sum(s.rho) - np.sum(s0.rho)) * vol
    assert abs(change + fin + fout) <= 1e-12 * np.sum(s0.rho) * vol


def test_positivity_failure_is_reported():
    problem, disc, s0 = scenario_state("vacuum-wedge")
    s0.rho[7] = 1e-11  # below the guard: the first stage must refuse it
    s0.m[7] = 0.0
    with pytest.raises(PositivityError) as exc:
        step(s0, disc, 1e-9)
    err = exc.value
    assert err.suggested_cfl == pytest.approx(0.5 * disc.params.cfl)
    assert err.cell == (7,) and err.t == pytest.approx(1e-9)
    assert err.rho_value <= disc.params.rho_floor_guard
    assert "try cfl" in str(err)


def test_translation_equivariance_periodic():
    grid = Grid(2, (1.0, 1.0), (10, 8))
    disc = make_disc(grid, GammaLaw(1, 2), PotentialField.constant(0.0), RigidMotion.zero(2), -2.0, SolverParams(0.05, 0.02))
    rng = np.random.default_rng(3)
    rho = rng.uniform(0.8, 1.2, grid.shape)
    m = rng.normal(0, 0.1, grid.shape + (2,))
    base = periodic_rhs(FlowState(0.0, rho, m), disc)
    for axis in (0, 1):
        shifted = periodic_rhs(FlowState(0.0, np.roll(rho, 1, axis), np.roll(m, 1, axis)), disc)
        assert np.max(np.abs(shifted[0] - np.roll(base[0], 1, axis))) <= 1e-12
        assert np.max(np.abs(shifted[1] - np.roll(base[1], 1, axis))) <= 1e-12


def _channel_solution(n, t=0.2):
    problem, disc, s0 = scenario_state(
        "channel-inflow", grid__cells=[n], viscosity__lambda=0.05,
        initial__perturbation=[{"kind": "density-bump", "amplitude": 0.2, "width": 0.1, "center": [0.4]}])
    return run(disc, s0, t, record_interval=t).final


def test_refinement_convergence_first_order():
    ref = _channel_solution(1024)
    errs = []
    for n in (64, 128):
        s = _channel_solution(n)
        k = 1024 // n
        errs.append(np.mean(np.abs(s.rho - ref.rho.reshape(n, k).mean(1)))
                    + np.mean(np.abs(s.m[:, 0] - ref.m[:, 0].reshape(n, k).mean(1))))
    assert errs[0] / errs[1] >= 1.7


@pytest.mark.skipif(not COMPILED_AVAILABLE, reason="compiled kernels not built")
@pytest.mark.parametrize("name", ["closed-box-gravity", "closed-box-gravity-1d", "channel-inflow",
                                  "channel-inflow-2d", "rotating-square", "vacuum-wedge"])
def test_backend_parity(name):
    out = {}
    for backend in ("python", "compiled"):
        problem, disc, s0 = scenario_state(name, backend)
        out[backend] = run_steps(disc, s0, 30)
    (sp, ip, op), (sc, ic, oc) = out["python"], out["compiled"]
    scale = np.max(np.abs(sp.m)) + 1.0
    assert np.max(np.abs(sp.rho - sc.rho)) <= 1e-12 * np.max(sp.rho)
    assert np.max(np.abs(sp.m - sc.m)) <= 1e-12 * scale
    assert ip == pytest.approx(ic, abs=1e-14) and op == pytest.approx(oc, abs=1e-14)


def test_backend_selection(monkeypatch):
    assert get_rhs("python")[0] == "python"
    with pytest.raises(ValueError):
        get_rhs("fortran")
    monkeypatch.setenv("BAROFLUX_BACKEND", "python")
    assert get_rhs()[0] == "python"
    if not COMPILED_AVAILABLE:
        with pytest.raises(RuntimeError):
            get_rhs("compiled")


def test_run_cadence_and_truncation():
    problem, disc, s0 = scenario_state("closed-box-gravity-1d")
    traj = run(disc, s0, 0.0)
    assert len(traj.records) == 1 and traj.records[0].t == 0.0 and traj.steps == 0
    traj = run(disc, s0, 0.05, record_interval=0.01)
    assert np.allclose(traj.series("t"), np.linspace(0, 0.05, 6), atol=1e-15)
    assert traj.final.t == 0.05
    cut = run(disc, s0, 10.0, max_steps=20)
    assert cut.truncated and cut.steps == 20
    with pytest.raises(ValueError):
        run(disc, s0, -1.0)


def test_run_is_deterministic():
    problem, disc, s0 = scenario_state("closed-box-gravity", grid__cells=[16, 16])
    a = run(disc, s0, 0.02, record_interval=0.01)
    b = run(disc, s0, 0.02, record_interval=0.01)
    assert [r.row() for r in a.records] == [r.row() for r in b.records]
