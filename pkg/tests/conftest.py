import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.spatial import Delaunay

sys.path.insert(0, str(Path(__file__).parent))

from conformal_retarget.mesh import Role, SimplicialMesh, VertexClassification


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)


def random_rect_mesh(rng, width=1.0, height=1.0, n_interior=30, n_side=4):
    """Random Delaunay mesh of a rectangle, built straight from scipy.

    Independent of build_mesh so tests exercising the assembly do not depend
    on the package's own construction path.
    """
    xs = np.linspace(0, width, n_side + 1)
    ys = np.linspace(0, height, n_side + 1)
    pts = [(0, 0), (width, 0), (0, height), (width, height)]
    pts += [(x, 0.0) for x in xs[1:-1]] + [(x, height) for x in xs[1:-1]]
    pts += [(0.0, y) for y in ys[1:-1]] + [(width, y) for y in ys[1:-1]]
    inner = rng.uniform([0.06 * width, 0.06 * height], [0.94 * width, 0.94 * height], (n_interior, 2))
    pts = np.vstack([np.asarray(pts, float), inner])
    tri = Delaunay(pts)
    simp = tri.simplices.copy()
    det = (pts[simp[:, 1], 0] - pts[simp[:, 0], 0]) * (pts[simp[:, 2], 1] - pts[simp[:, 0], 1]) - (
        pts[simp[:, 1], 1] - pts[simp[:, 0], 1]
    ) * (pts[simp[:, 2], 0] - pts[simp[:, 0], 0])
    simp[det < 0] = simp[det < 0][:, [0, 2, 1]]
    return SimplicialMesh(pts, simp, float(width), float(height))


def boundary_classification(mesh):
    """All boundary vertices fixed, everything else free."""
    kinds = np.where(mesh.boundary_mask(), Role.BOUNDARY, Role.INTERIOR).astype(np.int8)
    return VertexClassification(kinds, np.full(mesh.n_vertices, -1), 0, 0)
