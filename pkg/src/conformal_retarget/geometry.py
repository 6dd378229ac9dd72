"""Low-level planar geometry helpers shared by the mesh and warp modules."""

from __future__ import annotations

import numpy as np

# Tolerance used when clamping barycentric coordinates of points that sit on
# an edge up to floating point noise.
BARY_SLACK = 1e-12


def cross2(a, b):
    """z-component of the cross product of 2-d vectors (broadcasting)."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def triangle_signed_areas(points, triangles):
    """Signed area of each triangle, positive for counter-clockwise order.

    :param points: (N, 2) vertex positions
    :param triangles: (T, 3) vertex indices
    :return: (T,) signed areas
    """
    p = np.asarray(points, float)[np.asarray(triangles, int)]
    return 0.5 * cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])


def bary_coords(tri_pts, pts):
    """Barycentric coordinates of points with respect to one triangle.

    :param tri_pts: (3, 2) triangle corner positions
    :param pts: (M, 2) query points
    :return: (M, 3) barycentric coordinates (rows sum to 1)
    """
    tri_pts = np.asarray(tri_pts, float)
    pts = np.atleast_2d(np.asarray(pts, float))
    e1 = tri_pts[1] - tri_pts[0]
    e2 = tri_pts[2] - tri_pts[0]
    denom = cross2(e1, e2)
    d = pts - tri_pts[0]
    a1 = cross2(d, e2) / denom
    a2 = cross2(e1, d) / denom
    return np.stack([1.0 - a1 - a2, a1, a2], axis=1)


def bary_coords_many(tris_pts, p):
    """Barycentric coordinates of one point in many triangles.

    :param tris_pts: (M, 3, 2) triangle corner positions
    :param p: (2,) query point
    :return: (M, 3)
    """
    tris_pts = np.asarray(tris_pts, float)
    p = np.asarray(p, float)
    e1 = tris_pts[:, 1] - tris_pts[:, 0]
    e2 = tris_pts[:, 2] - tris_pts[:, 0]
    denom = cross2(e1, e2)
    d = p[None, :] - tris_pts[:, 0]
    a1 = cross2(d, e2) / denom
    a2 = cross2(e1, d) / denom
    return np.stack([1.0 - a1 - a2, a1, a2], axis=1)


def point_segment_distance(p, a, b):
    """Distance from point p to the closed segment [a, b]."""
    p = np.asarray(p, float)
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.hypot(*(p - a)))
    t = float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.hypot(*(p - (a + t * ab))))


def points_segment_distance(pts, a, b):
    """Vectorized distance from many points to the closed segment [a, b]."""
    pts = np.asarray(pts, float)
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.hypot(pts[:, 0] - a[0], pts[:, 1] - a[1])
    t = np.clip((pts - a) @ ab / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.hypot(pts[:, 0] - proj[:, 0], pts[:, 1] - proj[:, 1])


def segments_intersect(p1, p2, q1, q2, eps=1e-12):
    """True if closed segments [p1,p2] and [q1,q2] share at least one point."""
    p1 = np.asarray(p1, float)
    p2 = np.asarray(p2, float)
    q1 = np.asarray(q1, float)
    q2 = np.asarray(q2, float)
    d1 = cross2(q2 - q1, p1 - q1)
    d2 = cross2(q2 - q1, p2 - q1)
    d3 = cross2(p2 - p1, q1 - p1)
    d4 = cross2(p2 - p1, q2 - p1)
    if ((d1 > eps and d2 < -eps) or (d1 < -eps and d2 > eps)) and (
        (d3 > eps and d4 < -eps) or (d3 < -eps and d4 > eps)
    ):
        return True

    def on_segment(a, b, c):
        if abs(cross2(b - a, c - a)) > eps * max(1.0, np.abs(b - a).max()):
            return False
        return (
            min(a[0], b[0]) - eps <= c[0] <= max(a[0], b[0]) + eps
            and min(a[1], b[1]) - eps <= c[1] <= max(a[1], b[1]) + eps
        )

    return (
        on_segment(p1, p2, q1)
        or on_segment(p1, p2, q2)
        or on_segment(q1, q2, p1)
        or on_segment(q1, q2, p2)
    )


class TriangleGrid:
    """Uniform bucket index mapping plane positions to candidate triangles.

    Cell size defaults to the mean triangle diameter so a query touches only a
    handful of candidates.
    """

    def __init__(self, points, triangles, cell=None):
        self.points = np.asarray(points, float)
        self.triangles = np.asarray(triangles, int)
        tp = self.points[self.triangles]
        edges = np.stack(
            [
                np.hypot(*(tp[:, 1] - tp[:, 0]).T),
                np.hypot(*(tp[:, 2] - tp[:, 1]).T),
                np.hypot(*(tp[:, 0] - tp[:, 2]).T),
            ],
            axis=1,
        )
        self.diameters = edges.max(axis=1)
        if cell is None:
            cell = float(self.diameters.mean())
        self.cell = max(cell, 1e-12)
        self.xmin, self.ymin = self.points.min(axis=0)
        self.xmax, self.ymax = self.points.max(axis=0)
        self.nx = max(1, int(np.ceil((self.xmax - self.xmin) / self.cell)))
        self.ny = max(1, int(np.ceil((self.ymax - self.ymin) / self.cell)))
        self.buckets = [[] for _ in range(self.nx * self.ny)]
        lo = tp.min(axis=1)
        hi = tp.max(axis=1)
        ix0 = self._ix(lo[:, 0])
        ix1 = self._ix(hi[:, 0])
        iy0 = self._iy(lo[:, 1])
        iy1 = self._iy(hi[:, 1])
        for t in range(len(self.triangles)):
            for iy in range(iy0[t], iy1[t] + 1):
                base = iy * self.nx
                for ix in range(ix0[t], ix1[t] + 1):
                    self.buckets[base + ix].append(t)

    def _ix(self, x):
        return np.clip(((np.asarray(x) - self.xmin) / self.cell).astype(int), 0, self.nx - 1)

    def _iy(self, y):
        return np.clip(((np.asarray(y) - self.ymin) / self.cell).astype(int), 0, self.ny - 1)

    def candidates(self, p, ring=0):
        """Triangle indices whose bounding box covers the cell of p.

        ``ring`` widens the search by that many extra cells on each side.
        """
        ix = int(self._ix(p[0]))
        iy = int(self._iy(p[1]))
        if ring == 0:
            return self.buckets[iy * self.nx + ix]
        out = []
        for jy in range(max(0, iy - ring), min(self.ny, iy + ring + 1)):
            for jx in range(max(0, ix - ring), min(self.nx, ix + ring + 1)):
                out.extend(self.buckets[jy * self.nx + jx])
        return out

    def locate(self, p, slack=BARY_SLACK):
        """Containing triangle of p and clamped barycentric coordinates.

        Returns ``(tri_index, bary)`` or ``(None, None)`` when no candidate
        contains p within the slack.
        """
        for ring in (0, 1):
            cand = self.candidates(p, ring)
            if not cand:
                continue
            cand = np.unique(cand)
            bary = bary_coords_many(self.points[self.triangles[cand]], p)
            inside = (bary >= -slack).all(axis=1)
            if inside.any():
                t = int(np.argmax(inside))
                b = np.clip(bary[t], 0.0, None)
                return int(cand[t]), b / b.sum()
        return None, None

    def nearest(self, p):
        """Triangle whose barycentric violation at p is smallest.

        Used as a fallback for points that fall into sliver gaps; the returned
        coordinates are clamped to the triangle.
        """
        best_t, best_score = None, -np.inf
        ring = 0
        seen = False
        while ring < max(self.nx, self.ny) + 1:
            cand = np.unique(self.candidates(p, ring))
            if len(cand):
                bary = bary_coords_many(self.points[self.triangles[cand]], p)
                score = bary.min(axis=1)
                k = int(np.argmax(score))
                if score[k] > best_score:
                    best_score = float(score[k])
                    best_t = int(cand[k])
                if seen:
                    break
                seen = True
            ring += 1
        b = bary_coords(self.points[self.triangles[best_t]], p[None, :])[0]
        b = np.clip(b, 0.0, None)
        return best_t, b / b.sum()
