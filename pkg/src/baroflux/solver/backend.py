"""Pick the compiled kernels when importable, otherwise the numpy reference.

Set ``BAROFLUX_BACKEND=python`` to force the fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _reference

try:  # pragma: no cover - depends on the build
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover
    _compiled = None

COMPILED_AVAILABLE = _compiled is not None


def _python_rhs(rho, upad, ppad, gradG, bmass, bmom, spacing, mu, lam):
    return _reference.rhs(rho, upad, ppad, gradG, bmass, bmom, spacing, mu, lam)


def _compiled_rhs(rho, upad, ppad, gradG, bmass, bmom, spacing, mu, lam):
    if rho.ndim == 1:
        (flo, fhi), (mlo, mhi) = bmass[0], bmom[0]
        return _compiled.rhs_1d(
            rho, upad, ppad, gradG,
            float(flo), float(fhi), float(np.ravel(mlo)[0]), float(np.ravel(mhi)[0]),
            spacing[0], mu, lam,
        )
    (fW, fE), (fS, fN) = bmass
    (mW, mE), (mS, mN) = bmom
    return _compiled.rhs_2d(
        rho, upad, ppad, gradG,
        fW, fE, fS, fN,
        np.ascontiguousarray(mW), np.ascontiguousarray(mE),
        np.ascontiguousarray(mS), np.ascontiguousarray(mN),
        spacing[0], spacing[1], mu, lam,
    )


def get_rhs(name: str | None = None):
    """Return ``(name, rhs)`` for ``name`` in {"compiled", "python", None=auto}."""
    if name is None:
        name = os.environ.get("BAROFLUX_BACKEND", "auto")
    if name == "auto":
        name = "compiled" if COMPILED_AVAILABLE else "python"
    if name == "compiled":
        if not COMPILED_AVAILABLE:
            raise RuntimeError("compiled kernels are not built; reinstall with Cython available")
        return "compiled", _compiled_rhs
    if name == "python":
        return "python", _python_rhs
    raise ValueError(f"unknown backend {name!r}")


def fused_kernels(name: str):
    """The compiled module when ``name`` is "compiled", else ``None``.

    Besides ``rhs_*`` it provides ``stage_1d``/``stage_2d`` (ghost fill and
    boundary fluxes fused with the right-hand side) and ``acoustic_bound``.
    """
    return _compiled if name == "compiled" else None


BACKEND, rhs = get_rhs()
