"""Cartesian grids, rigid motions, force potentials and boundary classification.

Arrays on a 2D grid are indexed ``[i, j]`` with ``i`` along x and ``j`` along y;
vector fields carry the component axis last, e.g. shape ``(nx, ny, 2)``.
Boundary faces are grouped per side, in the fixed order ``west, east`` (1D and
2D) followed by ``south, north`` (2D only).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np


class CompatibilityError(ValueError):
    """A motion/potential pair violates a structural identity."""

    def __init__(self, identity: str, report: "CompatibilityReport"):
        self.identity = identity
        self.report = report
        super().__init__(f"incompatible motion and potential: {identity} violated "
                         f"(worst |value| {report.worst_value:.3e} at x={report.worst_location})")


# --------------------------------------------------------------------------- grid


@dataclass(frozen=True)
class Grid:
    dim: int
    extent: Tuple[float, ...]
    cells: Tuple[int, ...]
    origin: Tuple[float, ...] = None

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        ext = tuple(float(e) for e in np.atleast_1d(self.extent))
        cells = tuple(int(c) for c in np.atleast_1d(self.cells))
        if len(ext) != self.dim or len(cells) != self.dim:
            raise ValueError("extent and cells need one entry per axis")
        if any(e <= 0 for e in ext):
            raise ValueError(f"extents must be positive, got {ext}")
        if any(c < 4 for c in cells):
            raise ValueError(f"need at least 4 cells per axis, got {cells}")
        origin = self.origin if self.origin is not None else (0.0,) * self.dim
        origin = tuple(float(o) for o in np.atleast_1d(origin))
        if len(origin) != self.dim:
            raise ValueError("origin needs one entry per axis")
        object.__setattr__(self, "extent", ext)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "origin", origin)

    @property
    def spacing(self) -> Tuple[float, ...]:
        return tuple(e / n for e, n in zip(self.extent, self.cells))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.cells

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def h(self) -> float:
        return min(self.spacing)

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.dim, self.extent, tuple(c * factor for c in self.cells), self.origin)

    def axis_centers(self, axis: int, ghosts: int = 0) -> np.ndarray:
        n, h, o = self.cells[axis], self.spacing[axis], self.origin[axis]
        k = np.arange(-ghosts, n + ghosts)
        return o + (k + 0.5) * h

    def axis_faces(self, axis: int) -> np.ndarray:
        n, h, o = self.cells[axis], self.spacing[axis], self.origin[axis]
        return o + np.arange(n + 1) * h

    def centers(self, ghosts: int = 0) -> np.ndarray:
        """Cell centres; shape ``(nx[, ny], dim)``; ``ghosts`` pads each side."""
        axes = [self.axis_centers(a, ghosts) for a in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def boundary_faces(self) -> "BoundaryFaces":
        """Centres, outward normals and measures of all boundary faces."""
        sides = []
        if self.dim == 1:
            x0, x1 = self.origin[0], self.origin[0] + self.extent[0]
            sides.append(("west", np.array([[x0]]), np.array([-1.0]), np.array([1.0])))
            sides.append(("east", np.array([[x1]]), np.array([1.0]), np.array([1.0])))
        else:
            (hx, hy), (nx, ny) = self.spacing, self.cells
            xs, ys = self.axis_centers(0), self.axis_centers(1)
            x0, y0 = self.origin
            x1, y1 = x0 + self.extent[0], y0 + self.extent[1]
            sides.append(("west", np.column_stack([np.full(ny, x0), ys]), np.array([-1.0, 0.0]), np.full(ny, hy)))
            sides.append(("east", np.column_stack([np.full(ny, x1), ys]), np.array([1.0, 0.0]), np.full(ny, hy)))
            sides.append(("south", np.column_stack([xs, np.full(nx, y0)]), np.array([0.0, -1.0]), np.full(nx, hx)))
            sides.append(("north", np.column_stack([xs, np.full(nx, y1)]), np.array([0.0, 1.0]), np.full(nx, hx)))
        names, pts, normals, meas = [], [], [], []
        for name, p, n, m in sides:
            names.extend([name] * len(p))
            pts.append(p)
            normals.append(np.tile(n, (len(p), 1)))
            meas.append(m)
        return BoundaryFaces(
            side=np.array(names),
            points=np.concatenate(pts),
            normals=np.concatenate(normals),
            measure=np.concatenate(meas),
        )

    def to_dict(self) -> dict:
        out = {"dim": self.dim, "extent": list(self.extent), "cells": list(self.cells)}
        if any(self.origin):
            out["origin"] = list(self.origin)
        return out


@dataclass(frozen=True)
class BoundaryFaces:
    side: np.ndarray
    points: np.ndarray
    normals: np.ndarray
    measure: np.ndarray

    def __len__(self):
        return len(self.measure)

    def side_slice(self, name: str) -> slice:
        idx = np.flatnonzero(self.side == name)
        return slice(int(idx[0]), int(idx[-1]) + 1)


# --------------------------------------------------------------------------- motion


@dataclass(frozen=True)
class RigidMotion:
    """Rigid velocity ``u_E(x) = translation + omega * (-(y - cy), x - cx)``.

    ``center`` defaults to the origin. In 1D only the translation is used.
    """

    translation: Tuple[float, ...]
    omega: float = 0.0
    center: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        tr = tuple(float(t) for t in np.atleast_1d(self.translation))
        object.__setattr__(self, "translation", tr)
        c = self.center if self.center is not None else (0.0,) * len(tr)
        object.__setattr__(self, "center", tuple(float(v) for v in np.atleast_1d(c)))
        if len(tr) == 1 and self.omega != 0.0:
            raise ValueError("rotation requires two dimensions")
        object.__setattr__(self, "omega", float(self.omega))

    @property
    def dim(self) -> int:
        return len(self.translation)

    @classmethod
    def zero(cls, dim: int) -> "RigidMotion":
        return cls((0.0,) * dim)

    def reversed(self) -> "RigidMotion":
        return RigidMotion(tuple(-t for t in self.translation), -self.omega, self.center)

    def velocity(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.broadcast_to(np.array(self.translation), x.shape).copy()
        if self.dim == 2 and self.omega != 0.0:
            u[..., 0] -= self.omega * (x[..., 1] - self.center[1])
            u[..., 1] += self.omega * (x[..., 0] - self.center[0])
        return u

    def gradient(self) -> np.ndarray:
        """Constant velocity gradient ``du_i/dx_j``."""
        g = np.zeros((self.dim, self.dim))
        if self.dim == 2:
            g[0, 1], g[1, 0] = -self.omega, self.omega
        return g

    def max_speed(self, grid: Grid) -> float:
        corners = np.array(np.meshgrid(*[[o, o + e] for o, e in zip(grid.origin, grid.extent)],
                                       indexing="ij")).reshape(grid.dim, -1).T
        return float(np.max(np.linalg.norm(self.velocity(corners), axis=-1)))

    def to_dict(self) -> dict:
        out = {"translation": list(self.translation), "omega": self.omega}
        if any(self.center):
            out["center"] = list(self.center)
        return out


def rigid_velocity(motion: RigidMotion, x) -> np.ndarray:
    return motion.velocity(x)


def kinetic_head(motion: RigidMotion, x) -> np.ndarray:
    """Specific kinetic energy ``|u_E(x)|^2 / 2``."""
    u = motion.velocity(x)
    return 0.5 * np.sum(u * u, axis=-1)


def kinetic_head_gradient(motion: RigidMotion, x) -> np.ndarray:
    # grad(|u|^2/2) = (grad u)^T u
    u = motion.velocity(x)
    return u @ motion.gradient()


# ------------------------------------------------------------------------ potential


@dataclass(frozen=True)
class PotentialField:
    """Force potential ``G``; the body force is ``rho * grad G``.

    kinds: ``constant`` (``c``), ``linear`` (``G = g . x``), ``radial``
    (``G = sum_k coeffs[k] * |x - center|**k``).
    """

    kind: str
    c: float = 0.0
    g: Tuple[float, ...] = ()
    center: Tuple[float, ...] = ()
    coeffs: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("constant", "linear", "radial"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        object.__setattr__(self, "g", tuple(float(v) for v in self.g))
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "coeffs", tuple(float(v) for v in self.coeffs))
        if self.kind == "linear" and not self.g:
            raise ValueError("linear potential needs g")
        if self.kind == "radial":
            if not self.center or not self.coeffs:
                raise ValueError("radial potential needs center and coeffs")
            if len(self.coeffs) > 1 and self.coeffs[1] != 0.0:
                raise ValueError("radial potential: linear coefficient must vanish "
                                 "(G would not be differentiable at the center)")

    @classmethod
    def constant(cls, c: float = 0.0):
        return cls("constant", c=c)

    @classmethod
    def linear(cls, g: Sequence[float]):
        return cls("linear", g=tuple(g))

    @classmethod
    def radial(cls, center: Sequence[float], coeffs: Sequence[float]):
        return cls("radial", center=tuple(center), coeffs=tuple(coeffs))

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full(x.shape[:-1], self.c)
        if self.kind == "linear":
            return x @ np.array(self.g)
        r = np.linalg.norm(x - np.array(self.center), axis=-1)
        return np.polynomial.polynomial.polyval(r, self.coeffs)

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(x)
        if self.kind == "linear":
            return np.broadcast_to(np.array(self.g), x.shape).copy()
        d = x - np.array(self.center)
        r = np.linalg.norm(d, axis=-1)
        # phi'(r)/r = sum_k k c_k r^(k-2), with the k=1 term excluded by construction
        s = np.zeros_like(r)
        for k, ck in enumerate(self.coeffs):
            if k >= 2 and ck != 0.0:
                s = s + k * ck * r ** (k - 2)
        return d * s[..., None]

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "c": self.c}
        if self.kind == "linear":
            return {"kind": "linear", "g": list(self.g)}
        return {"kind": "radial", "center": list(self.center), "coeffs": list(self.coeffs)}


def effective_potential(G: PotentialField, motion: RigidMotion, x) -> np.ndarray:
    """``G + |u_E|^2 / 2``, the quantity equilibria depend on."""
    return G.value(x) + kinetic_head(motion, x)


# ---------------------------------------------------------------- boundary partition


class FaceClass(Enum):
    INFLOW = "inflow"
    OUTFLOW = "outflow"
    CHARACTERISTIC = "characteristic"


@dataclass(frozen=True)
class BoundaryPartition:
    faces: BoundaryFaces
    normal_velocity: np.ndarray
    labels: np.ndarray  # array of FaceClass values (strings)
    tol_n: float

    @property
    def inflow(self) -> np.ndarray:
        return self.labels == FaceClass.INFLOW.value

    @property
    def outflow(self) -> np.ndarray:
        return self.labels == FaceClass.OUTFLOW.value

    @property
    def characteristic(self) -> np.ndarray:
        return self.labels == FaceClass.CHARACTERISTIC.value

    def mask(self, subset) -> np.ndarray:
        if subset is None or subset == "all":
            return np.ones(len(self.labels), dtype=bool)
        value = subset.value if isinstance(subset, FaceClass) else str(subset)
        return self.labels == value

    @property
    def counts(self) -> Dict[str, int]:
        return {c.value: int(np.sum(self.labels == c.value)) for c in FaceClass}

    @property
    def net_normal_flux(self) -> float:
        return float(np.sum(self.normal_velocity * self.faces.measure))

    @property
    def has_inflow(self) -> bool:
        return bool(np.any(self.inflow))

    def summary(self) -> dict:
        return {**self.counts, "net_normal_flux": self.net_normal_flux}


def classify_boundary(grid: Grid, motion: RigidMotion, tol_n: Optional[float] = None) -> BoundaryPartition:
    """Label boundary faces by the sign of ``u_E . n``.

    The default threshold is ``1e-12 * max|u_E|`` so exact zeros (edge midpoints
    under rotation) land deterministically in the characteristic class.
    """
    faces = grid.boundary_faces()
    un = np.sum(motion.velocity(faces.points) * faces.normals, axis=-1)
    if tol_n is None:
        tol_n = 1e-12 * motion.max_speed(grid)
    if tol_n < 0:
        raise ValueError("tol_n must be non-negative")
    labels = np.full(len(un), FaceClass.CHARACTERISTIC.value, dtype=object)
    labels[un < -tol_n] = FaceClass.INFLOW.value
    labels[un > tol_n] = FaceClass.OUTFLOW.value
    return BoundaryPartition(faces, un, labels.astype(str), float(tol_n))


# ------------------------------------------------------------------- compatibility


@dataclass
class CompatibilityReport:
    passed: bool
    identity: Optional[str]
    worst_value: float
    worst_location: List[float]
    rigid_residual: float = 0.0
    head_transport_residual: float = 0.0

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "identity": self.identity,
            "worst_value": self.worst_value,
            "worst_location": self.worst_location,
            "rigid_residual": self.rigid_residual,
            "head_transport_residual": self.head_transport_residual,
        }


def check_compatibility(motion: RigidMotion, G: PotentialField, grid: Grid, tol: float = 1e-10,
                        raise_on_failure: bool = False) -> CompatibilityReport:
    """Verify ``D u_E = 0``, ``grad G . u_E = 0`` and ``grad|u_E|^2 . u_E = 0`` at cell centres."""
    if motion.dim != grid.dim:
        raise ValueError(f"motion has {motion.dim} components on a {grid.dim}D grid")
    x = grid.centers().reshape(-1, grid.dim)
    u = motion.velocity(x)
    gG = G.gradient(x)
    grad_u = motion.gradient()
    rigid = float(np.max(np.abs(grad_u + grad_u.T))) * 0.5
    transport = np.abs(np.sum(gG * u, axis=-1))
    scale = 1.0 + np.linalg.norm(gG, axis=-1) * np.linalg.norm(u, axis=-1)
    head = np.abs(np.sum(2.0 * kinetic_head_gradient(motion, x) * u, axis=-1))
    k = int(np.argmax(transport / scale))
    identity = None
    if rigid > tol:
        identity = "symmetric gradient D(u_E) = 0"
    elif transport[k] > tol * scale[k]:
        identity = "grad G . u_E = 0"
    elif np.max(head) > tol * (1.0 + np.max(np.sum(u * u, axis=-1))):
        identity = "grad|u_E|^2 . u_E = 0"
    report = CompatibilityReport(
        passed=identity is None,
        identity=identity,
        worst_value=float(transport[k]),
        worst_location=[float(v) for v in x[k]],
        rigid_residual=rigid,
        head_transport_residual=float(np.max(head)) if len(head) else 0.0,
    )
    if raise_on_failure and not report.passed:
        raise CompatibilityError(identity, report)
    return report


# ---------------------------------------------------------------------- quadrature


def integrate_cells(grid: Grid, values) -> float:
    """Midpoint rule over all cells."""
    v = np.asarray(values, dtype=float)
    if v.shape[: grid.dim] != grid.shape:
        raise ValueError(f"field shape {v.shape} does not match grid {grid.shape}")
    return float(np.sum(v) * grid.cell_volume)


def integrate_boundary(grid: Grid, face_values, subset=None, partition: Optional[BoundaryPartition] = None) -> float:
    """Face-midpoint rule over boundary faces, optionally restricted to one class."""
    faces = partition.faces if partition is not None else grid.boundary_faces()
    v = np.broadcast_to(np.asarray(face_values, dtype=float), faces.measure.shape)
    if subset is None or subset == "all":
        mask = np.ones(len(v), dtype=bool)
    else:
        if partition is None:
            raise ValueError("restricting to a boundary class needs a partition")
        mask = partition.mask(subset)
    return float(np.sum(v[mask] * faces.measure[mask]))
