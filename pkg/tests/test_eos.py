import pickle

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from baroflux.eos import (
    MINUS_INFINITY,
    DensityDomainError,
    GammaLaw,
    Isothermal,
    SingularBranchError,
    bregman,
    law_from_dict,
)

LAWS = [GammaLaw(1.0, 2.0), GammaLaw(2.5, 1.4), GammaLaw(0.7, 5.0 / 3.0), Isothermal(1.0), Isothermal(3.0)]
densities = st.floats(min_value=1e-6, max_value=100.0, allow_nan=False)


def test_pressure_examples():
    assert GammaLaw(1, 2).pressure(2.0) == 4.0
    assert Isothermal(1).pressure(1.0) == 1.0
    for law in LAWS:
        assert law.pressure(0.0) == 0.0
        assert law.potential(0.0) == 0.0


def test_potential_examples():
    g = GammaLaw(1, 2)
    assert g.potential(2.0) == 4.0
    assert g.potential_prime(2.0) * 2.0 - g.potential(2.0) == g.pressure(2.0)
    assert Isothermal(1).potential(1.0) == 0.0
    assert g.potential_prime(2.0) == 4.0
    assert g.potential_prime(0.0) == 0.0
    assert Isothermal(1).potential_prime(1.0) == 1.0


def test_inverse_examples():
    g = GammaLaw(1, 2)
    assert g.potential_prime_inverse(4.0) == pytest.approx(2.0, rel=1e-15)
    assert g.potential_prime_inverse(-3.0) == 0.0
    assert Isothermal(1).potential_prime_inverse(1.0) == 1.0


def test_minus_infinity_sentinel():
    iso = Isothermal(1)
    assert iso.potential_prime(0.0) is MINUS_INFINITY
    assert not isinstance(MINUS_INFINITY, float)
    assert pickle.loads(pickle.dumps(MINUS_INFINITY)) is MINUS_INFINITY
    with pytest.raises(SingularBranchError):
        iso.potential_prime(np.array([0.0, 1.0]))


@pytest.mark.parametrize("method", ["pressure", "potential", "potential_prime", "pressure_derivative"])
def test_negative_density_rejected(method):
    with pytest.raises(DensityDomainError) as exc:
        getattr(GammaLaw(), method)(np.array([1.0, -0.25]))
    assert exc.value.value == -0.25


def test_bregman_examples():
    g = GammaLaw(1, 2)
    assert bregman(g, 3.0, 1.0) == pytest.approx(4.0, rel=1e-14)
    for law in LAWS:
        assert bregman(law, 2.0, 2.0) == pytest.approx(0.0, abs=1e-14)
    assert bregman(g, 1.0, 0.0, -0.5) == pytest.approx(1.5, rel=1e-14)
    scan = np.arange(0.0, 10.0 + 1e-9, 0.01)
    assert np.all(bregman(g, scan, 0.0, -0.5) >= 0.0)
    with pytest.raises(DensityDomainError):
        bregman(g, -1.0, 1.0)
    with pytest.raises(DensityDomainError):
        bregman(g, 1.0, -1.0)


@pytest.mark.parametrize("law", LAWS, ids=repr)
def test_defining_identity_random(law, rng):
    rho = rng.uniform(0.0, 100.0, 10_000) + 1e-12
    lhs = law.potential_prime(rho) * rho - law.potential(rho)
    assert np.max(np.abs(lhs - law.pressure(rho)) / law.pressure(rho)) <= 1e-12


@pytest.mark.parametrize("law", LAWS, ids=repr)
def test_potential_prime_matches_finite_difference(law):
    rho = np.linspace(0.1, 50.0, 2000)
    h = 1e-6 * rho
    fd = (law.potential(rho + h) - law.potential(rho - h)) / (2 * h)
    assert np.max(np.abs(fd - law.potential_prime(rho)) / np.abs(law.potential_prime(rho)).clip(1e-3)) <= 1e-6


@pytest.mark.parametrize("law", LAWS, ids=repr)
def test_second_derivative_identity(law):
    # P'' = p'/rho, checked by a central difference of P'
    rho = np.linspace(0.1, 50.0, 2000)
    h = 1e-5 * rho
    fd = (law.potential_prime(rho + h) - law.potential_prime(rho - h)) / (2 * h)
    exact = law.pressure_derivative(rho) / rho
    assert np.max(np.abs(fd - exact) / exact) <= 1e-6


def test_gamma_growth_asymptotics():
    law = GammaLaw(1.3, 1.6)
    rho = np.linspace(1.0, 1e4, 500)
    ratio = law.pressure_derivative(rho) / rho ** (law.gamma - 1)
    assert np.allclose(ratio, law.a * law.gamma, rtol=1e-12)


def test_isothermal_metric_convention():
    assert Isothermal().metric_exponent == 2.0
    assert GammaLaw(1, 1.4).metric_exponent == 1.4


@settings(max_examples=200, deadline=None)
@given(r1=densities, r2=densities, theta=st.floats(0.01, 0.99), idx=st.integers(0, len(LAWS) - 1))
def test_strict_convexity(r1, r2, theta, idx):
    law = LAWS[idx]
    if abs(r1 - r2) < 1e-3 * max(r1, r2):
        return
    mid = law.potential(theta * r1 + (1 - theta) * r2)
    chord = theta * law.potential(r1) + (1 - theta) * law.potential(r2)
    assert mid < chord


@settings(max_examples=200, deadline=None)
@given(r=densities, rE=densities, idx=st.integers(0, len(LAWS) - 1))
def test_bregman_nonnegative_and_zero_on_diagonal(r, rE, idx):
    law = LAWS[idx]
    b = bregman(law, r, rE)
    scale = abs(law.potential(r)) + abs(law.potential(rE)) + abs(law.potential_prime(rE) * r) + 1.0
    assert b >= -1e-12 * scale
    if abs(r - rE) > 1e-3 * rE:
        assert b > 0
    assert abs(bregman(law, rE, rE)) <= 1e-12 * scale


@settings(max_examples=200, deadline=None)
@given(r=densities, idx=st.integers(0, len(LAWS) - 1))
def test_inverse_round_trip(r, idx):
    law = LAWS[idx]
    assert law.potential_prime_inverse(law.potential_prime(r)) == pytest.approx(r, rel=1e-10)


def test_law_from_dict():
    assert law_from_dict({"law": "gamma", "a": 1, "gamma": 2}) == GammaLaw(1.0, 2.0)
    assert law_from_dict({"law": "isothermal", "a": 2}) == Isothermal(2.0)
    with pytest.raises(ValueError, match="unknown pressure law"):
        law_from_dict({"law": "polytrope"})
    with pytest.raises(ValueError, match="unknown keys"):
        law_from_dict({"law": "isothermal", "gamma": 2})
    with pytest.raises(ValueError):
        GammaLaw(1.0, 1.0)
    with pytest.raises(ValueError):
        Isothermal(0.0)
