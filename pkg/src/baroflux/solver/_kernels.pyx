# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled right-hand-side kernels; same contract as ``_reference.rhs``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def rhs_1d(double[::1] rho, double[:, ::1] upad, double[::1] ppad, double[:, ::1] gradG,
           double flo, double fhi, double mlo, double mhi,
           double h, double mu, double lam):
    cdef Py_ssize_t n = rho.shape[0]
    cdef Py_ssize_t i
    cdef double un, F, Fm, du, S
    drho_a = np.zeros(n)
    dm_a = np.zeros((n, 1))
    cdef double[::1] drho = drho_a
    cdef double[:, ::1] dm = dm_a
    cdef double inv_h = 1.0 / h
    # 1D: deviatoric part of the stress vanishes identically
    cdef double coef = mu * 2.0 + (lam - 2.0 * mu)
    # faces f = 0..n, between padded cells f and f+1
    for i in range(n + 1):
        if i == 0:
            F = flo
            Fm = mlo
        elif i == n:
            F = fhi
            Fm = mhi
        else:
            un = 0.5 * (upad[i, 0] + upad[i + 1, 0])
            if un > 0.0:
                F = un * rho[i - 1]
                Fm = F * upad[i, 0]
            else:
                F = un * rho[i]
                Fm = F * upad[i + 1, 0]
        du = (upad[i + 1, 0] - upad[i, 0]) * inv_h
        S = coef * du
        if i > 0:
            drho[i - 1] -= F * inv_h
            dm[i - 1, 0] += (S - Fm) * inv_h
        if i < n:
            drho[i] += F * inv_h
            dm[i, 0] -= (S - Fm) * inv_h
    for i in range(n):
        dm[i, 0] += -(ppad[i + 2] - ppad[i]) * 0.5 * inv_h + rho[i] * gradG[i, 0]
    return drho_a, dm_a


def rhs_2d(double[:, ::1] rho, double[:, :, ::1] upad, double[:, ::1] ppad, double[:, :, ::1] gradG,
           double[::1] fW, double[::1] fE, double[::1] fS, double[::1] fN,
           double[:, ::1] mW, double[:, ::1] mE, double[:, ::1] mS, double[:, ::1] mN,
           double hx, double hy, double mu, double lam):
    cdef Py_ssize_t nx = rho.shape[0]
    cdef Py_ssize_t ny = rho.shape[1]
    cdef Py_ssize_t i, j, I, J
    cdef double un, F, Fmx, Fmy
    cdef double dxux, dxuy, dyux, dyuy, div, Sxx, Sxy, Syy, Syx
    cdef double ihx = 1.0 / hx
    cdef double ihy = 1.0 / hy
    cdef double bulk = lam - mu  # lam - 2 mu / d with d = 2
    drho_a = np.zeros((nx, ny))
    dm_a = np.zeros((nx, ny, 2))
    cdef double[:, ::1] drho = drho_a
    cdef double[:, :, ::1] dm = dm_a

    # x-faces: face i sits between padded columns i and i+1 (cells i-1, i)
    for i in range(nx + 1):
        for j in range(ny):
            J = j + 1
            if i == 0:
                F = fW[j]
                Fmx = mW[j, 0]
                Fmy = mW[j, 1]
            elif i == nx:
                F = fE[j]
                Fmx = mE[j, 0]
                Fmy = mE[j, 1]
            else:
                un = 0.5 * (upad[i, J, 0] + upad[i + 1, J, 0])
                if un > 0.0:
                    F = un * rho[i - 1, j]
                    Fmx = F * upad[i, J, 0]
                    Fmy = F * upad[i, J, 1]
                else:
                    F = un * rho[i, j]
                    Fmx = F * upad[i + 1, J, 0]
                    Fmy = F * upad[i + 1, J, 1]
            dxux = (upad[i + 1, J, 0] - upad[i, J, 0]) * ihx
            dxuy = (upad[i + 1, J, 1] - upad[i, J, 1]) * ihx
            dyux = 0.5 * ((upad[i, J + 1, 0] - upad[i, J - 1, 0]) * 0.5 * ihy
                          + (upad[i + 1, J + 1, 0] - upad[i + 1, J - 1, 0]) * 0.5 * ihy)
            dyuy = 0.5 * ((upad[i, J + 1, 1] - upad[i, J - 1, 1]) * 0.5 * ihy
                          + (upad[i + 1, J + 1, 1] - upad[i + 1, J - 1, 1]) * 0.5 * ihy)
            div = dxux + dyuy
            Sxx = mu * (dxux + dxux) + bulk * div
            Sxy = mu * (dxuy + dyux)
            if i > 0:
                drho[i - 1, j] -= F * ihx
                dm[i - 1, j, 0] += (Sxx - Fmx) * ihx
                dm[i - 1, j, 1] += (Sxy - Fmy) * ihx
            if i < nx:
                drho[i, j] += F * ihx
                dm[i, j, 0] -= (Sxx - Fmx) * ihx
                dm[i, j, 1] -= (Sxy - Fmy) * ihx

    # y-faces: face j sits between padded rows j and j+1 (cells j-1, j)
    for i in range(nx):
        I = i + 1
        for j in range(ny + 1):
            if j == 0:
                F = fS[i]
                Fmx = mS[i, 0]
                Fmy = mS[i, 1]
            elif j == ny:
                F = fN[i]
                Fmx = mN[i, 0]
                Fmy = mN[i, 1]
            else:
                un = 0.5 * (upad[I, j, 1] + upad[I, j + 1, 1])
                if un > 0.0:
                    F = un * rho[i, j - 1]
                    Fmx = F * upad[I, j, 0]
                    Fmy = F * upad[I, j, 1]
                else:
                    F = un * rho[i, j]
                    Fmx = F * upad[I, j + 1, 0]
                    Fmy = F * upad[I, j + 1, 1]
            dyux = (upad[I, j + 1, 0] - upad[I, j, 0]) * ihy
            dyuy = (upad[I, j + 1, 1] - upad[I, j, 1]) * ihy
            dxux = 0.5 * ((upad[I + 1, j, 0] - upad[I - 1, j, 0]) * 0.5 * ihx
                          + (upad[I + 1, j + 1, 0] - upad[I - 1, j + 1, 0]) * 0.5 * ihx)
            dxuy = 0.5 * ((upad[I + 1, j, 1] - upad[I - 1, j, 1]) * 0.5 * ihx
                          + (upad[I + 1, j + 1, 1] - upad[I - 1, j + 1, 1]) * 0.5 * ihx)
            div = dxux + dyuy
            Syy = mu * (dyuy + dyuy) + bulk * div
            Syx = mu * (dyux + dxuy)
            if j > 0:
                drho[i, j - 1] -= F * ihy
                dm[i, j - 1, 0] += (Syx - Fmx) * ihy
                dm[i, j - 1, 1] += (Syy - Fmy) * ihy
            if j < ny:
                drho[i, j] += F * ihy
                dm[i, j, 0] -= (Syx - Fmx) * ihy
                dm[i, j, 1] -= (Syy - Fmy) * ihy

    for i in range(nx):
        I = i + 1
        for j in range(ny):
            J = j + 1
            dm[i, j, 0] += -(ppad[I + 1, J] - ppad[I - 1, J]) * 0.5 * ihx + rho[i, j] * gradG[i, j, 0]
            dm[i, j, 1] += -(ppad[I, J + 1] - ppad[I, J - 1]) * 0.5 * ihy + rho[i, j] * gradG[i, j, 1]
    return drho_a, dm_a


cdef inline double _pressure(int kind, double a, double gamma, double r) nogil:
    if kind == 0:
        return a * r ** gamma
    return a * r


def stage_1d(double[::1] rho, double[:, ::1] m, double[:, ::1] uE_pad, double[:, ::1] gradG,
             unsigned char[::1] inflow, double[::1] rhoEf, double[::1] pEf, double[::1] pEshift,
             double[::1] un, double[:, ::1] uEf, int kind, double a, double gamma,
             double h, double mu, double lam):
    """Ghost fill, boundary fluxes and right-hand side in one call (1D)."""
    cdef Py_ssize_t n = rho.shape[0]
    cdef Py_ssize_t i
    upad_a = np.empty((n + 2, 1))
    ppad_a = np.zeros(n + 2)
    rf_a = np.empty(2)
    cdef double[:, ::1] upad = upad_a
    cdef double[::1] ppad = ppad_a
    cdef double[::1] rf = rf_a
    cdef double pint, pf, F, flo, fhi, mlo, mhi
    for i in range(n):
        upad[i + 1, 0] = m[i, 0] / rho[i] - uE_pad[i + 1, 0]
        ppad[i + 1] = _pressure(kind, a, gamma, rho[i])
    upad[0, 0] = -upad[1, 0]
    upad[n + 1, 0] = -upad[n, 0]
    for i in range(n + 2):
        upad[i, 0] += uE_pad[i, 0]
    # west face (k = 0) next to cell 0, east face (k = 1) next to cell n-1
    pint = ppad[1]
    rf[0] = rhoEf[0] if inflow[0] else rho[0]
    pf = pEf[0] if inflow[0] else pEshift[0] + pint
    ppad[0] = 2.0 * pf - pint
    flo = -un[0] * rf[0]
    mlo = flo * uEf[0, 0]
    pint = ppad[n]
    rf[1] = rhoEf[1] if inflow[1] else rho[n - 1]
    pf = pEf[1] if inflow[1] else pEshift[1] + pint
    ppad[n + 1] = 2.0 * pf - pint
    fhi = un[1] * rf[1]
    mhi = fhi * uEf[1, 0]
    drho, dm = rhs_1d(rho, upad, ppad, gradG, flo, fhi, mlo, mhi, h, mu, lam)
    return drho, dm, rf_a


def stage_2d(double[:, ::1] rho, double[:, :, ::1] m, double[:, :, ::1] uE_pad, double[:, :, ::1] gradG,
             unsigned char[::1] inflow, double[::1] rhoEf, double[::1] pEf, double[::1] pEshift,
             double[::1] un, double[:, ::1] uEf, int kind, double a, double gamma,
             double hx, double hy, double mu, double lam):
    """Ghost fill, boundary fluxes and right-hand side in one call (2D).

    Boundary arrays follow the face order west (ny), east (ny), south (nx), north (nx).
    """
    cdef Py_ssize_t nx = rho.shape[0]
    cdef Py_ssize_t ny = rho.shape[1]
    cdef Py_ssize_t i, j, k, c
    cdef Py_ssize_t nb = 2 * (nx + ny)
    upad_a = np.empty((nx + 2, ny + 2, 2))
    ppad_a = np.zeros((nx + 2, ny + 2))
    rf_a = np.empty(nb)
    fW_a = np.empty(ny); fE_a = np.empty(ny); fS_a = np.empty(nx); fN_a = np.empty(nx)
    mW_a = np.empty((ny, 2)); mE_a = np.empty((ny, 2)); mS_a = np.empty((nx, 2)); mN_a = np.empty((nx, 2))
    cdef double[:, :, ::1] upad = upad_a
    cdef double[:, ::1] ppad = ppad_a
    cdef double[::1] rf = rf_a
    cdef double[::1] fW = fW_a, fE = fE_a, fS = fS_a, fN = fN_a
    cdef double[:, ::1] mW = mW_a, mE = mE_a, mS = mS_a, mN = mN_a
    cdef double inv, pint, pf, F
    for i in range(nx):
        for j in range(ny):
            inv = 1.0 / rho[i, j]
            upad[i + 1, j + 1, 0] = m[i, j, 0] * inv - uE_pad[i + 1, j + 1, 0]
            upad[i + 1, j + 1, 1] = m[i, j, 1] * inv - uE_pad[i + 1, j + 1, 1]
            ppad[i + 1, j + 1] = _pressure(kind, a, gamma, rho[i, j])
    for j in range(1, ny + 1):
        for c in range(2):
            upad[0, j, c] = -upad[1, j, c]
            upad[nx + 1, j, c] = -upad[nx, j, c]
    for i in range(nx + 2):
        for c in range(2):
            upad[i, 0, c] = -upad[i, 1, c]
            upad[i, ny + 1, c] = -upad[i, ny, c]
    for i in range(nx + 2):
        for j in range(ny + 2):
            upad[i, j, 0] += uE_pad[i, j, 0]
            upad[i, j, 1] += uE_pad[i, j, 1]
    for j in range(ny):
        # west
        k = j
        pint = ppad[1, j + 1]
        rf[k] = rhoEf[k] if inflow[k] else rho[0, j]
        pf = pEf[k] if inflow[k] else pEshift[k] + pint
        ppad[0, j + 1] = 2.0 * pf - pint
        F = -un[k] * rf[k]
        fW[j] = F
        mW[j, 0] = F * uEf[k, 0]
        mW[j, 1] = F * uEf[k, 1]
        # east
        k = ny + j
        pint = ppad[nx, j + 1]
        rf[k] = rhoEf[k] if inflow[k] else rho[nx - 1, j]
        pf = pEf[k] if inflow[k] else pEshift[k] + pint
        ppad[nx + 1, j + 1] = 2.0 * pf - pint
        F = un[k] * rf[k]
        fE[j] = F
        mE[j, 0] = F * uEf[k, 0]
        mE[j, 1] = F * uEf[k, 1]
    for i in range(nx):
        # south
        k = 2 * ny + i
        pint = ppad[i + 1, 1]
        rf[k] = rhoEf[k] if inflow[k] else rho[i, 0]
        pf = pEf[k] if inflow[k] else pEshift[k] + pint
        ppad[i + 1, 0] = 2.0 * pf - pint
        F = -un[k] * rf[k]
        fS[i] = F
        mS[i, 0] = F * uEf[k, 0]
        mS[i, 1] = F * uEf[k, 1]
        # north
        k = 2 * ny + nx + i
        pint = ppad[i + 1, ny]
        rf[k] = rhoEf[k] if inflow[k] else rho[i, ny - 1]
        pf = pEf[k] if inflow[k] else pEshift[k] + pint
        ppad[i + 1, ny + 1] = 2.0 * pf - pint
        F = un[k] * rf[k]
        fN[i] = F
        mN[i, 0] = F * uEf[k, 0]
        mN[i, 1] = F * uEf[k, 1]
    drho, dm = rhs_2d(rho, upad, ppad, gradG, fW, fE, fS, fN, mW, mE, mS, mN, hx, hy, mu, lam)
    return drho, dm, rf_a


def acoustic_bound(rho, m, int kind, double a, double gamma, spacing):
    """``(min_a h_a / (|u_a| + c), min rho)``; NaN if the state is not finite."""
    cdef double[::1] r = np.ascontiguousarray(rho).reshape(-1)
    cdef double[:, ::1] mm = np.ascontiguousarray(m).reshape(r.shape[0], -1)
    cdef Py_ssize_t n = r.shape[0]
    cdef Py_ssize_t d = mm.shape[1]
    cdef Py_ssize_t i, c
    cdef double best = 1e300
    cdef double rmin = 1e300
    cdef double cs, val, ri
    cdef double h0 = spacing[0]
    cdef double h1 = spacing[1] if d > 1 else 1.0
    for i in range(n):
        ri = r[i]
        if not (ri > 0.0) or ri != ri:
            return float("nan"), ri
        if kind == 0:
            cs = (a * gamma * ri ** (gamma - 1.0)) ** 0.5
        else:
            cs = a ** 0.5
        if ri < rmin:
            rmin = ri
        for c in range(d):
            if mm[i, c] != mm[i, c]:
                return float("nan"), ri
            val = (h0 if c == 0 else h1) / (abs(mm[i, c] / ri) + cs)
            if val < best:
                best = val
    return best, rmin
