"""Pure numpy stencil kernels (the fallback backend).

Conventions shared with the compiled backend:

* ``rho`` has the grid shape ``S``; padded arrays carry one ghost layer on
  every side, shape ``S + 2``; vector fields have the component axis last.
* Boundary fluxes are supplied per axis as ``(low, high)`` pairs holding the
  flux in the positive axis direction through the first and last face, with
  the transverse cross-section shape.
"""
from __future__ import annotations

import numpy as np


def _sl(dim, axis, s, interior=True):
    idx = [slice(1, -1) if interior else slice(None)] * dim
    idx[axis] = s
    return tuple(idx)


def convective_fluxes(rho, upad, bmass, bmom, spacing):
    """Donor-cell face fluxes.

    Face velocity is the mean of the two adjacent cell velocities; density and
    transported velocity come from the upwind cell. Returns, per axis, the mass
    flux array (``n_a + 1`` faces along the axis) and the momentum flux array.
    """
    dim = rho.ndim
    u = upad[(slice(1, -1),) * dim]
    out = []
    for a in range(dim):
        n = rho.shape[a]
        lo = [slice(None)] * dim
        hi = [slice(None)] * dim
        lo[a], hi[a] = slice(0, n - 1), slice(1, n)
        lo, hi = tuple(lo), tuple(hi)
        un = 0.5 * (u[lo][..., a] + u[hi][..., a])
        pos = un > 0.0
        rho_up = np.where(pos, rho[lo], rho[hi])
        u_up = np.where(pos[..., None], u[lo], u[hi])
        F_int = un * rho_up
        Fm_int = F_int[..., None] * u_up
        cross = list(rho.shape)
        cross[a] = 1
        blo, bhi = (np.reshape(v, cross) for v in bmass[a])
        mlo, mhi = (np.reshape(v, cross + [dim]) for v in bmom[a])
        F = np.concatenate([blo, F_int, bhi], axis=a)
        Fm = np.concatenate([mlo, Fm_int, mhi], axis=a)
        out.append((F, Fm))
    return out


def flux_divergence(fluxes, spacing):
    """Cell divergence of per-axis face fluxes (scalar or vector)."""
    total = None
    for a, F in enumerate(fluxes):
        n = F.shape[a] - 1
        hi = [slice(None)] * F.ndim
        lo = [slice(None)] * F.ndim
        hi[a], lo[a] = slice(1, n + 1), slice(0, n)
        d = (F[tuple(hi)] - F[tuple(lo)]) / spacing[a]
        total = d if total is None else total + d
    return total


def face_velocity_gradients(upad, spacing):
    """Full velocity gradient ``du_i/dx_j`` on the faces normal to each axis.

    The normal derivative is compact across the face; tangential derivatives
    average the centred differences of the two adjacent cells. Entry ``a`` has
    shape ``S`` with ``n_a + 1`` along axis ``a`` and trailing ``(d, d)``.
    """
    dim = upad.ndim - 1
    grads = []
    for a in range(dim):
        n = upad.shape[a] - 2
        left = _sl(dim, a, slice(0, n + 1))
        right = _sl(dim, a, slice(1, n + 2))
        G = np.empty(upad[left].shape[:-1] + (dim, dim))
        G[..., :, a] = (upad[right] - upad[left]) / spacing[a]
        for b in range(dim):
            if b == a:
                continue
            # centred derivative along b for every padded position along a
            fwd = [slice(1, -1)] * dim
            bwd = [slice(1, -1)] * dim
            fwd[a] = bwd[a] = slice(None)
            fwd[b], bwd[b] = slice(2, None), slice(None, -2)
            dc = (upad[tuple(fwd)] - upad[tuple(bwd)]) / (2.0 * spacing[b])
            sel_l = [slice(None)] * dim
            sel_r = [slice(None)] * dim
            sel_l[a], sel_r[a] = slice(0, n + 1), slice(1, n + 2)
            G[..., :, b] = 0.5 * (dc[tuple(sel_l)] + dc[tuple(sel_r)])
        grads.append(G)
    return grads


def stress(G, mu, lam):
    """``S = mu (grad u + grad u^T - (2/d) div u I) + lam div u I``."""
    dim = G.shape[-1]
    div = np.trace(G, axis1=-2, axis2=-1)
    S = mu * (G + np.swapaxes(G, -1, -2))
    eye = np.eye(dim)
    S = S + ((lam - 2.0 * mu / dim) * div)[..., None, None] * eye
    return S


def viscous_force(upad, spacing, mu, lam):
    grads = face_velocity_gradients(upad, spacing)
    fluxes = [stress(G, mu, lam)[..., :, a] for a, G in enumerate(grads)]
    return flux_divergence(fluxes, spacing)


def pressure_gradient(ppad, spacing):
    dim = ppad.ndim
    out = np.empty(tuple(n - 2 for n in ppad.shape) + (dim,))
    for a in range(dim):
        fwd = _sl(dim, a, slice(2, None))
        bwd = _sl(dim, a, slice(None, -2))
        out[..., a] = (ppad[fwd] - ppad[bwd]) / (2.0 * spacing[a])
    return out


def rhs(rho, upad, ppad, gradG, bmass, bmom, spacing, mu, lam):
    """Semi-discrete right-hand side ``(d rho/dt, d m/dt)``."""
    fl = convective_fluxes(rho, upad, bmass, bmom, spacing)
    drho = -flux_divergence([F for F, _ in fl], spacing)
    dm = -flux_divergence([Fm for _, Fm in fl], spacing)
    dm += viscous_force(upad, spacing, mu, lam)
    dm -= pressure_gradient(ppad, spacing)
    dm += rho[..., None] * gradG
    return drho, dm
