"""Inverse-map resampling of the source image into the target rectangle.

The solved vertex positions define a piecewise-affine map; each output pixel
center is located inside its image triangle, pulled back with that triangle's
inverse affine, and the source is sampled bilinearly at the pulled-back point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConstraintViolation, FlippedTriangle, IndexMeshMismatch, SizeMismatch
from .geometry import TriangleGrid, bary_coords, cross2
from .raster import Raster

__all__ = ["TargetMeshIndex", "build_target_index", "resample"]

_INSIDE_SLACK = 1e-9


@dataclass(frozen=True)
class TargetMeshIndex:
    """Image-space triangles with cached inverse affines and a bucket grid.

    ``inverse[t]`` maps target offsets to source offsets: for a point p in
    image triangle t, the pullback is s0 + inverse[t] @ (p - f0).
    """

    source_points: np.ndarray
    positions: np.ndarray
    triangles: np.ndarray
    inverse: np.ndarray
    frame: tuple
    _grid: TriangleGrid = field(repr=False)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def pull_back(self, points, tri_indices):
        """Source preimages of target ``points`` lying in the given triangles."""
        tri = self.triangles[tri_indices]
        f0 = self.positions[tri[:, 0]]
        s0 = self.source_points[tri[:, 0]]
        d = points - f0
        k = self.inverse[tri_indices]
        return s0 + np.einsum("nij,nj->ni", k, d)

    def locate(self, p):
        """Containing (or nearest) image triangle of p with barycentrics."""
        p = np.asarray(p, float)
        t, bary = self._grid.locate(p)
        if t is None:
            t, bary = self._grid.nearest(p)
        return t, bary


def _map_positions(mapping):
    return mapping.positions if hasattr(mapping, "positions") else np.asarray(mapping, float)


def build_target_index(mesh, mapping):
    """Index the image triangles of an orientation-preserving map.

    :raises FlippedTriangle: some image triangle is degenerate or inverted
    :raises ConstraintViolation: image triangles fail to tile the target frame
    """
    pos = _map_positions(mapping)
    tri = mesh.triangles
    f = pos[tri]
    s = mesh.points[tri]
    e1 = f[:, 1] - f[:, 0]
    e2 = f[:, 2] - f[:, 0]
    det = cross2(e1, e2)
    if det.min() <= 0.0:
        bad = int(np.argmin(det))
        raise FlippedTriangle(f"triangle {bad} has signed area {det[bad] / 2.0:.3e}")
    # inverse affine: source-edge matrix times the inverted image-edge matrix
    fmat = np.stack([e1, e2], axis=2)
    smat = np.stack([s[:, 1] - s[:, 0], s[:, 2] - s[:, 0]], axis=2)
    finv = np.empty_like(fmat)
    finv[:, 0, 0] = fmat[:, 1, 1]
    finv[:, 0, 1] = -fmat[:, 0, 1]
    finv[:, 1, 0] = -fmat[:, 1, 0]
    finv[:, 1, 1] = fmat[:, 0, 0]
    finv /= det[:, None, None]
    inverse = smat @ finv

    wa = float(pos[:, 0].max())
    b = float(pos[:, 1].max())
    tiled = float(det.sum() / 2.0)
    if abs(tiled - wa * b) > 1e-6 * wa * b:
        raise ConstraintViolation(
            f"image triangles cover area {tiled:.6g}, target frame is {wa * b:.6g}"
        )
    grid = TriangleGrid(pos, tri)
    return TargetMeshIndex(mesh.points.copy(), pos.copy(), tri.copy(), inverse, (wa, b), grid)


def _bilinear(samples, x, y):
    h, w = samples.shape[:2]
    gx = np.clip(x - 0.5, 0.0, w - 1.0)
    gy = np.clip(y - 0.5, 0.0, h - 1.0)
    x0 = np.floor(gx).astype(int)
    y0 = np.floor(gy).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (gx - x0)[:, None]
    fy = (gy - y0)[:, None]
    return (
        samples[y0, x0] * (1 - fx) * (1 - fy)
        + samples[y0, x1] * fx * (1 - fy)
        + samples[y1, x0] * (1 - fx) * fy
        + samples[y1, x1] * fx * fy
    )


def resample(source, index, mesh, mapping):
    """Produce the retargeted raster by pulling back output pixel centers.

    Output dimensions are (round(wa), round(b)) with half-up rounding; sliver
    pixels that no triangle claims fall back to the nearest triangle.
    """
    pos = _map_positions(mapping)
    if (
        index.triangles.shape != mesh.triangles.shape
        or not np.array_equal(index.triangles, mesh.triangles)
        or not np.array_equal(index.source_points, mesh.points)
        or not np.array_equal(index.positions, pos)
    ):
        raise IndexMeshMismatch("index was built for a different mesh or map")
    if source.width != int(round(mesh.width)) or source.height != int(round(mesh.height)):
        raise SizeMismatch(
            f"source is {source.width}x{source.height}, mesh domain is "
            f"{mesh.width:g}x{mesh.height:g}"
        )

    wa, b = index.frame
    out_w = int(np.floor(wa + 0.5))
    out_h = int(np.floor(b + 0.5))
    c = source.channels
    out = np.zeros((out_h, out_w, c))
    filled = np.zeros((out_h, out_w), bool)

    src_pts = mesh.points
    for t in range(index.n_triangles):
        tri = index.triangles[t]
        p = index.positions[tri]
        c0 = max(0, int(np.ceil(p[:, 0].min() - 0.5)))
        c1 = min(out_w - 1, int(np.floor(p[:, 0].max() - 0.5)))
        r0 = max(0, int(np.ceil(p[:, 1].min() - 0.5)))
        r1 = min(out_h - 1, int(np.floor(p[:, 1].max() - 0.5)))
        if c1 < c0 or r1 < r0:
            continue
        cols = np.arange(c0, c1 + 1)
        rows = np.arange(r0, r1 + 1)
        gx, gy = np.meshgrid(cols + 0.5, rows + 0.5)
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        bary = bary_coords(p, pts)
        rr = np.repeat(rows, len(cols))
        ccs = np.tile(cols, len(rows))
        take = (bary.min(axis=1) >= -_INSIDE_SLACK) & ~filled[rr, ccs]
        if not take.any():
            continue
        src = bary[take] @ src_pts[tri]
        out[rr[take], ccs[take]] = _bilinear(source.samples, src[:, 0], src[:, 1])
        filled[rr[take], ccs[take]] = True

    # numerical slivers: claim each leftover pixel for its nearest triangle
    for r, cc in np.argwhere(~filled):
        t, bary = index.locate([cc + 0.5, r + 0.5])
        src = bary @ src_pts[index.triangles[t]]
        out[r, cc] = _bilinear(source.samples, src[None, 0], src[None, 1])[0]
        filled[r, cc] = True

    return Raster(np.clip(out, 0.0, 1.0))
