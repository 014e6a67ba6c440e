"""Barotropic pressure laws and their pressure potentials.

A law provides ``p(rho)``, the potential ``P`` with ``P'(rho) rho - P(rho) = p(rho)``
and ``P(0) = 0``, the marginal potential ``P'`` and its (positive-part) inverse.
Two laws are shipped:

``GammaLaw``
    ``p = a rho**gamma``, ``P'(0+) = 0``. Admits vacuum in equilibria.
``Isothermal``
    ``p = a rho``, ``P = a rho log(rho)``, ``P'(0+) = -inf``. Satisfies
    monotonicity but not the ``gamma > 1`` growth condition; equilibria are
    vacuum free.

All methods accept scalars or numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]


class DensityDomainError(ValueError):
    """Raised for negative densities; ``value`` holds the offending entry."""

    def __init__(self, value, what: str = "density"):
        self.value = value
        super().__init__(f"{what} must be non-negative, got {value!r}")


class _MinusInfinity:
    """Marker for the ``P'(0+) = -inf`` branch.

    Deliberately not a float: ordering against it must be spelled out.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "MINUS_INFINITY"

    def __reduce__(self):
        return (_MinusInfinity, ())


MINUS_INFINITY = _MinusInfinity()


class SingularBranchError(ArithmeticError):
    """Array evaluation hit the ``P'(0+) = -inf`` branch."""


def _check_nonneg(rho, what="density"):
    arr = np.asarray(rho, dtype=float)
    if arr.ndim == 0:
        if not arr >= 0.0:
            raise DensityDomainError(float(arr), what)
    elif arr.size and not np.all(arr >= 0.0):
        bad = arr[~(arr >= 0.0)].flat[0]
        raise DensityDomainError(float(bad), what)
    return arr


def _out(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


@dataclass(frozen=True)
class PressureLaw:
    """Common interface; use :class:`GammaLaw` or :class:`Isothermal`."""

    a: float = 1.0

    kind = "abstract"
    vacuum_admitting = False

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"pressure scale a must be positive, got {self.a}")

    # subclasses implement the _raw variants on validated float arrays
    def pressure(self, rho: ArrayLike) -> ArrayLike:
        r = _check_nonneg(rho)
        return _out(self._p(r), rho)

    def pressure_derivative(self, rho: ArrayLike) -> ArrayLike:
        r = _check_nonneg(rho)
        return _out(self._dp(r), rho)

    def sound_speed_sq(self, rho: ArrayLike) -> ArrayLike:
        return self.pressure_derivative(rho)

    def potential(self, rho: ArrayLike) -> ArrayLike:
        r = _check_nonneg(rho)
        return _out(self._P(r), rho)

    def potential_prime(self, rho: ArrayLike):
        r = _check_nonneg(rho)
        return self._dP(r, rho)

    def potential_prime_inverse(self, y: ArrayLike) -> ArrayLike:
        yy = np.asarray(y, dtype=float)
        return _out(self._dP_inv(yy), y)

    @property
    def metric_exponent(self) -> float:
        """Exponent ``gamma`` used by the convergence norms."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class GammaLaw(PressureLaw):
    gamma: float = 2.0

    kind = "gamma"
    vacuum_admitting = True

    def __post_init__(self):
        super().__post_init__()
        if not self.gamma > 1:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")

    def _p(self, r):
        return self.a * r**self.gamma

    def _dp(self, r):
        return self.a * self.gamma * r ** (self.gamma - 1.0)

    def _P(self, r):
        return self.a * r**self.gamma / (self.gamma - 1.0)

    def _dP(self, r, like):
        val = self.a * self.gamma / (self.gamma - 1.0) * r ** (self.gamma - 1.0)
        return _out(val, like)

    def _dP_inv(self, y):
        g = self.gamma
        return ((g - 1.0) * np.maximum(y, 0.0) / (self.a * g)) ** (1.0 / (g - 1.0))

    @property
    def metric_exponent(self) -> float:
        return self.gamma

    def to_dict(self) -> dict:
        return {"law": "gamma", "a": self.a, "gamma": self.gamma}


@dataclass(frozen=True)
class Isothermal(PressureLaw):
    kind = "isothermal"
    vacuum_admitting = False

    def _p(self, r):
        return self.a * r

    def _dp(self, r):
        return self.a * np.ones_like(r)

    def _P(self, r):
        with np.errstate(divide="ignore", invalid="ignore"):
            val = self.a * r * np.log(r)
        return np.where(r > 0.0, val, 0.0)

    def _dP(self, r, like):
        if np.ndim(like) == 0:
            if r == 0.0:
                return MINUS_INFINITY
            return float(self.a * (np.log(r) + 1.0))
        if np.any(r == 0.0):
            raise SingularBranchError("marginal potential is -inf at zero density")
        return self.a * (np.log(r) + 1.0)

    def _dP_inv(self, y):
        return np.exp(y / self.a - 1.0)

    @property
    def metric_exponent(self) -> float:
        # outside the gamma > 1 hypothesis; fixed convention
        return 2.0

    def to_dict(self) -> dict:
        return {"law": "isothermal", "a": self.a}


def law_from_dict(spec: dict) -> PressureLaw:
    """Build a law from ``{"law": "gamma", "a": 1, "gamma": 2}`` style specs."""
    spec = dict(spec)
    kind = spec.pop("law", None)
    if kind == "gamma":
        allowed = {"a", "gamma"}
        cls = GammaLaw
    elif kind == "isothermal":
        allowed = {"a"}
        cls = Isothermal
    else:
        raise ValueError(f"unknown pressure law {kind!r}; expected 'gamma' or 'isothermal'")
    extra = set(spec) - allowed
    if extra:
        raise ValueError(f"unknown keys for law {kind!r}: {sorted(extra)}")
    return cls(**{k: float(v) for k, v in spec.items()})


def bregman(law: PressureLaw, rho: ArrayLike, rho_E: ArrayLike, head_minus_CE: ArrayLike = 0.0):
    """Relative pressure potential of ``rho`` with respect to ``rho_E``.

    Where ``rho_E > 0`` this is ``P(rho) - (rho - rho_E) P'(rho_E) - P(rho_E)``.
    On the vacuum set (``rho_E == 0``) the marginal potential is replaced by the
    caller-supplied effective potential ``G + |u_E|^2/2 - C_E``, giving
    ``P(rho) - rho * head_minus_CE``, which is non-negative as long as
    ``head_minus_CE <= P'(0+)`` there.
    """
    r = _check_nonneg(rho)
    rE = _check_nonneg(rho_E, "equilibrium density")
    r, rE, hc = np.broadcast_arrays(r, rE, np.asarray(head_minus_CE, dtype=float))
    pos = rE > 0.0
    out = law._P(r) - r * hc
    if np.any(pos):
        rp = rE[pos]
        dP = law._dP(rp, rp)
        out = np.array(out, dtype=float)
        out[pos] = law._P(r[pos]) - (r[pos] - rp) * dP - law._P(rp)
    scalar = np.ndim(rho) == 0 and np.ndim(rho_E) == 0 and np.ndim(head_minus_CE) == 0
    return float(out) if scalar else out
