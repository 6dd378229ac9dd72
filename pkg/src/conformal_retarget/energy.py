"""Per-triangle gradient coefficients and the quadratic energy they induce.

A piecewise-linear map is determined by its vertex images.  On each triangle
the partial derivatives are fixed linear combinations of the three vertex
values, with coefficient rows that sum to zero.  The conformal energy is the
Dirichlet energy of the map minus the (analytically known) target area, which
is non-negative and vanishes exactly on conformal maps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DegenerateTriangle, EmptyFreeSet, SizeMismatch
from .geometry import triangle_signed_areas


@dataclass(frozen=True)
class GradCoeffs:
    """x/y differentiation weights per triangle.

    ``a[t] @ u[tri[t]]`` is the x-derivative of the interpolated scalar u on
    triangle t; ``b`` likewise for y.  Both rows sum to zero, so constants
    have vanishing gradient.
    """

    a: np.ndarray
    b: np.ndarray
    areas: np.ndarray


def grad_coeffs(mesh):
    """Differentiation coefficients for every triangle of the mesh."""
    pts = mesh.points
    tri = mesh.triangles
    areas = triangle_signed_areas(pts, tri)
    floor = 1e-14 * mesh.width * mesh.height
    if (areas <= floor).any():
        t = int(np.argmin(areas))
        raise DegenerateTriangle(f"triangle {t} has area {areas[t]:.3e}")
    x = pts[tri, 0]
    y = pts[tri, 1]
    inv2a = 1.0 / (2.0 * areas)
    a = np.stack(
        [y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1
    ) * inv2a[:, None]
    b = np.stack(
        [x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1
    ) * inv2a[:, None]
    return GradCoeffs(a=a, b=b, areas=areas)


def map_jacobians(mesh, coeffs, positions):
    """Per-triangle partials (ux, uy, vx, vy) of the map given vertex images."""
    positions = np.asarray(positions, float)
    if positions.shape != (mesh.n_vertices, 2):
        raise SizeMismatch(
            f"positions shape {positions.shape} does not match {mesh.n_vertices} vertices"
        )
    u = positions[mesh.triangles, 0]
    v = positions[mesh.triangles, 1]
    ux = (coeffs.a * u).sum(axis=1)
    uy = (coeffs.b * u).sum(axis=1)
    vx = (coeffs.a * v).sum(axis=1)
    vy = (coeffs.b * v).sum(axis=1)
    return ux, uy, vx, vy


class EnergyReport(NamedTuple):
    conformal: float
    dirichlet: float


def discrete_energy(mesh, coeffs, positions, target_area):
    """Conformal energy of the map, with the raw Dirichlet term alongside.

    :param target_area: area of the target rectangle, supplied analytically
    :return: ``EnergyReport(conformal, dirichlet)``
    """
    ux, uy, vx, vy = map_jacobians(mesh, coeffs, positions)
    dirichlet = 0.5 * float(coeffs.areas @ (ux * ux + uy * uy + vx * vx + vy * vy))
    return EnergyReport(conformal=dirichlet - float(target_area), dirichlet=dirichlet)


def energy_density(mesh, coeffs, positions):
    """Pointwise conformality defect per triangle.

    Zero exactly where the map is a similarity; integrating the density
    against triangle areas recovers the conformal energy for
    orientation-preserving maps that hit the target boundary.
    """
    ux, uy, vx, vy = map_jacobians(mesh, coeffs, positions)
    return 0.5 * ((ux - vy) ** 2 + (uy + vx) ** 2)


def orientation_determinants(mesh, coeffs, positions):
    """det of the map's Jacobian per triangle (positive = preserved)."""
    ux, uy, vx, vy = map_jacobians(mesh, coeffs, positions)
    return ux * vy - uy * vx


@dataclass(eq=False)
class SparseSymmetricSystem:
    """Assembled quadratic form with its free/fixed partition.

    ``L`` is the full symmetric matrix over all vertices in their original
    indexing.  ``free`` and ``fixed`` are index arrays; the reduced system
    solves ``L[free, free] x = -L[free, fixed] b``.
    """

    L: sp.csr_matrix
    free: np.ndarray
    fixed: np.ndarray

    @property
    def n_free(self):
        return len(self.free)

    def la_matrix(self):
        return self.L[self.free][:, self.free].tocsc()

    def lb_matrix(self):
        return self.L[self.free][:, self.fixed].tocsr()


def assemble_full_matrix(mesh, coeffs):
    """Full symmetric stiffness matrix over all vertices."""
    tri = mesh.triangles
    a, b, areas = coeffs.a, coeffs.b, coeffs.areas
    w = areas[:, None, None] * (
        a[:, :, None] * a[:, None, :] + b[:, :, None] * b[:, None, :]
    )
    rows = np.repeat(tri[:, :, None], 3, axis=2).ravel()
    cols = np.repeat(tri[:, None, :], 3, axis=1).ravel()
    n = mesh.n_vertices
    L = sp.coo_matrix((w.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    L.sum_duplicates()
    return L


def assemble(mesh, coeffs, classification):
    """Build the reduced quadratic system for the given vertex partition."""
    if classification.n_free == 0:
        raise EmptyFreeSet("no free vertices to solve for")
    L = assemble_full_matrix(mesh, coeffs)
    return SparseSymmetricSystem(
        L=L,
        free=np.asarray(classification.free_indices, int),
        fixed=np.asarray(classification.fixed_indices, int),
    )


def _spd_by_factorization(la):
    n = la.shape[0]
    if n == 0:
        return False
    if n <= 1500:
        try:
            np.linalg.cholesky(la.toarray())
            return True
        except np.linalg.LinAlgError:
            return False
    try:
        lu = spla.splu(
            la.tocsc(),
            diag_pivot_thresh=0.0,
            permc_spec="MMD_AT_PLUS_A",
            options={"SymmetricMode": True},
        )
        return bool((lu.U.diagonal() > 0).all())
    except RuntimeError:
        return False


def verify_m_matrix(system, tol=1e-12):
    """Structural report on the reduced matrix.

    symmetric: entrywise symmetry of the free block; off_diag_nonpositive:
    every coupling between two free vertices is attractive; spd: a positive
    definite factorization succeeds.
    """
    la = system.la_matrix()
    scale = max(1.0, abs(la.max()), abs(la.min()))
    asym = abs(la - la.T)
    symmetric = bool(asym.max() <= tol * scale) if asym.nnz else True
    off = la - sp.diags(la.diagonal())
    off_ok = bool(off.max() <= tol * scale) if off.nnz else True
    return {
        "symmetric": symmetric,
        "off_diag_nonpositive": off_ok,
        "spd": _spd_by_factorization(la),
    }
