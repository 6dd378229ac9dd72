"""Triangulated rectangle domains and vertex bookkeeping.

The source image occupies ``[0, width] x [0, height]`` in pixel units with the
y axis pointing down the rows.  Meshes are Delaunay triangulations of that
rectangle whose vertex set mixes the four corners, evenly spaced boundary
samples, polyline samples (kept as mesh edges), and a jittered interior grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
from scipy.spatial import Delaunay

from .errors import DegenerateInput, InvalidDimension, OutOfDomain, OverlapViolation
from .geometry import (
    TriangleGrid,
    cross2,
    points_segment_distance,
    triangle_signed_areas,
)

DEFAULT_JITTER_SEED = 1737

# Relative tolerance for "sits exactly on the boundary" style tests.
_REL_TOL = 1e-9


class Role(IntEnum):
    INTERIOR = 0
    BOUNDARY = 1
    ROI = 2
    LINE = 3


@dataclass(frozen=True)
class VertexClass:
    """Role of a single vertex plus its position in solver ordering."""

    role: Role
    region: int = -1
    order: int = -1


class VertexClassification:
    """Per-vertex roles with the free-first solver ordering.

    Behaves like a sequence of :class:`VertexClass`.  Free (interior) vertices
    occupy solver positions ``0 .. n_free-1``; all constrained vertices follow.
    """

    def __init__(self, kinds, regions, n_rois, n_lines):
        self.kinds = np.asarray(kinds, np.int8)
        self.regions = np.asarray(regions, np.int32)
        self.n_rois = int(n_rois)
        self.n_lines = int(n_lines)
        free = np.flatnonzero(self.kinds == Role.INTERIOR)
        fixed = np.flatnonzero(self.kinds != Role.INTERIOR)
        self.free_indices = free
        self.fixed_indices = fixed
        self.n_free = len(free)
        self.order = np.empty(len(self.kinds), np.int32)
        self.order[free] = np.arange(len(free))
        self.order[fixed] = len(free) + np.arange(len(fixed))

    def __len__(self):
        return len(self.kinds)

    def __getitem__(self, i):
        return VertexClass(Role(int(self.kinds[i])), int(self.regions[i]), int(self.order[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def roi_vertices(self, k):
        return np.flatnonzero((self.kinds == Role.ROI) & (self.regions == k))

    def line_vertices(self, j):
        return np.flatnonzero((self.kinds == Role.LINE) & (self.regions == j))


@dataclass(eq=False)
class SimplicialMesh:
    """Triangulation of ``[0, width] x [0, height]``.

    Triangles are counter-clockwise index triples into ``points``.  The
    regions used at build time are kept so later stages (classification,
    subdivision) can re-test containment.
    """

    points: np.ndarray
    triangles: np.ndarray
    width: float
    height: float
    roi_masks: tuple = ()
    polylines: tuple = ()
    required_edges: tuple = ()
    _grid: TriangleGrid | None = field(default=None, repr=False)

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, float)
        self.triangles = np.ascontiguousarray(self.triangles, np.int64)

    @property
    def n_vertices(self):
        return len(self.points)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def areas(self):
        return triangle_signed_areas(self.points, self.triangles)

    def edges(self):
        """Unique undirected edges as a sorted (E, 2) index array."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def boundary_mask(self):
        tol = _REL_TOL * max(self.width, self.height)
        x, y = self.points[:, 0], self.points[:, 1]
        return (
            (np.abs(x) <= tol)
            | (np.abs(x - self.width) <= tol)
            | (np.abs(y) <= tol)
            | (np.abs(y - self.height) <= tol)
        )

    def grid(self):
        if self._grid is None:
            self._grid = TriangleGrid(self.points, self.triangles)
        return self._grid


def _as_polyline_points(poly):
    """Accept a dict with "points", a mapping-like object, or a plain array."""
    if isinstance(poly, dict):
        pts = poly.get("points")
    elif hasattr(poly, "points"):
        pts = poly.points
    else:
        pts = poly
    pts = np.asarray(pts, float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise DegenerateInput("polyline needs at least two 2-d points")
    return pts


def _side_samples(length, spacing):
    n = max(1, math.ceil(length / spacing - 1e-12))
    return np.linspace(0.0, length, n + 1)


def _subdivide_polyline(pts, spacing):
    """Resample a polyline so no segment exceeds ``spacing``.

    Original vertices are kept exactly.
    """
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        seg = np.hypot(*(b - a))
        if seg <= 0:
            raise DegenerateInput("polyline repeats a point")
        n = max(1, math.ceil(seg / spacing - 1e-12))
        for i in range(1, n + 1):
            out.append(a + (b - a) * (i / n))
    return np.asarray(out)


def _edge_set(triangles):
    s = set()
    for i, j, k in triangles:
        s.add(frozenset((int(i), int(j))))
        s.add(frozenset((int(j), int(k))))
        s.add(frozenset((int(k), int(i))))
    return s


def _segments_cross_strict(p1, p2, q1, q2):
    d1 = cross2(q2 - q1, p1 - q1)
    d2 = cross2(q2 - q1, p2 - q1)
    d3 = cross2(p2 - p1, q1 - p1)
    d4 = cross2(p2 - p1, q2 - p1)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and min(
        abs(d1), abs(d2), abs(d3), abs(d4)
    ) > 0


def _edge_tri_map(triangles):
    m = {}
    for t, (i, j, k) in enumerate(triangles):
        for e in (frozenset((int(i), int(j))), frozenset((int(j), int(k))), frozenset((int(k), int(i)))):
            m.setdefault(e, []).append(t)
    return m


def _oriented(points, tri):
    i, j, k = tri
    if cross2(points[j] - points[i], points[k] - points[i]) < 0:
        return (i, k, j)
    return (i, j, k)


def _recover_edge(points, triangles, u, v, max_steps=400):
    """Flip diagonals until [u, v] is an edge of the triangulation."""
    tris = [tuple(int(x) for x in t) for t in triangles]
    target = frozenset((u, v))
    for _ in range(max_steps):
        emap = _edge_tri_map(tris)
        if target in emap:
            return np.asarray(tris)
        progressed = False
        for e, ts in emap.items():
            if len(ts) != 2:
                continue
            p, q = tuple(e)
            if u in e or v in e:
                continue
            if not _segments_cross_strict(points[p], points[q], points[u], points[v]):
                continue
            t1, t2 = ts
            r = next(x for x in tris[t1] if x not in e)
            s = next(x for x in tris[t2] if x not in e)
            if not _segments_cross_strict(points[r], points[s], points[p], points[q]):
                continue  # non-convex quad, try another crossing edge
            tris[t1] = _oriented(points, (p, r, s))
            tris[t2] = _oriented(points, (q, s, r))
            progressed = True
            break
        if not progressed:
            raise DegenerateInput("could not recover a constrained polyline edge")
    raise DegenerateInput("edge recovery did not terminate")


def _in_circle(a, b, c, d):
    """> 0 when d lies strictly inside the circumcircle of ccw triangle abc."""
    m = np.array(
        [
            [a[0] - d[0], a[1] - d[1], (a[0] - d[0]) ** 2 + (a[1] - d[1]) ** 2],
            [b[0] - d[0], b[1] - d[1], (b[0] - d[0]) ** 2 + (b[1] - d[1]) ** 2],
            [c[0] - d[0], c[1] - d[1], (c[0] - d[0]) ** 2 + (c[1] - d[1]) ** 2],
        ]
    )
    return np.linalg.det(m)


def _lawson_restore(points, triangles, protected, max_flips=2000):
    """Flip non-Delaunay edges back, leaving protected edges alone."""
    tris = [tuple(int(x) for x in t) for t in triangles]
    scale = max(np.ptp(points[:, 0]), np.ptp(points[:, 1]))
    eps = 1e-12 * scale**3
    for _ in range(max_flips):
        emap = _edge_tri_map(tris)
        flipped = False
        for e, ts in emap.items():
            if len(ts) != 2 or e in protected:
                continue
            p, q = tuple(e)
            t1, t2 = ts
            r = next(x for x in tris[t1] if x not in e)
            s = next(x for x in tris[t2] if x not in e)
            a, b, c = _oriented(points, (p, q, r))
            if _in_circle(points[a], points[b], points[c], points[s]) > eps:
                if _segments_cross_strict(points[r], points[s], points[p], points[q]):
                    tris[t1] = _oriented(points, (p, r, s))
                    tris[t2] = _oriented(points, (q, s, r))
                    flipped = True
                    break
        if not flipped:
            return np.asarray(tris)
    return np.asarray(tris)


def build_mesh(width, height, target_edge_length, roi_masks=(), polylines=(), seed=DEFAULT_JITTER_SEED):
    """Triangulate the image rectangle.

    :param width: domain width in pixels, > 0
    :param height: domain height in pixels, > 0
    :param target_edge_length: requested edge scale, in (0, min(width, height)]
    :param roi_masks: boolean rasters of shape (height, width); kept on the
        mesh for classification and subdivision
    :param polylines: iterable of point sequences (or dicts with "points")
    :param seed: RNG seed for the interior jitter, fixed by default so equal
        inputs reproduce the exact same mesh
    """
    w = float(width)
    h = float(height)
    if not (w > 0 and h > 0) or not np.isfinite(w) or not np.isfinite(h):
        raise InvalidDimension(f"domain {width} x {height} is not a positive rectangle")
    el = float(target_edge_length)
    if not (0 < el <= min(w, h)):
        raise InvalidDimension(
            f"edge length {target_edge_length} outside (0, {min(w, h)}]"
        )

    pts = [(0.0, 0.0), (w, 0.0), (0.0, h), (w, h)]
    seen = {p: i for i, p in enumerate(pts)}

    def add(p):
        key = (float(p[0]), float(p[1]))
        if key in seen:
            return seen[key]
        seen[key] = len(pts)
        pts.append(key)
        return seen[key]

    for x in _side_samples(w, el)[1:-1]:
        add((x, 0.0))
        add((x, h))
    for y in _side_samples(h, el)[1:-1]:
        add((0.0, y))
        add((w, y))

    lines = []
    required = []
    for poly in polylines:
        p = _as_polyline_points(poly)
        if (p[:, 0] < -_REL_TOL * w).any() or (p[:, 0] > w * (1 + _REL_TOL)).any() or (
            p[:, 1] < -_REL_TOL * h
        ).any() or (p[:, 1] > h * (1 + _REL_TOL)).any():
            raise DegenerateInput("polyline leaves the image rectangle")
        dense = _subdivide_polyline(p, el)
        idx = [add(q) for q in dense]
        for a, b in zip(idx[:-1], idx[1:]):
            if a != b:
                required.append((a, b))
        lines.append(p)

    fixed = np.asarray(pts)

    rng = np.random.default_rng(seed)
    gx = np.arange(el, w - 0.5 * el + 1e-9 * w, el)
    gy = np.arange(el, h - 0.5 * el + 1e-9 * h, el)
    interior = []
    if len(gx) and len(gy):
        xx, yy = np.meshgrid(gx, gy)
        cand = np.column_stack([xx.ravel(), yy.ravel()])
        cand = cand + rng.uniform(-0.25 * el, 0.25 * el, cand.shape)
        cand[:, 0] = np.clip(cand[:, 0], 0.4 * el, w - 0.4 * el)
        cand[:, 1] = np.clip(cand[:, 1], 0.4 * el, h - 0.4 * el)
        keep = np.ones(len(cand), bool)
        for poly in lines:
            dense = _subdivide_polyline(poly, el)
            for a, b in zip(dense[:-1], dense[1:]):
                keep &= points_segment_distance(cand, a, b) > 0.45 * el
        interior = cand[keep]

    all_pts = np.vstack([fixed, interior]) if len(interior) else fixed

    tri = Delaunay(all_pts)
    if len(tri.coplanar):
        raise DegenerateInput("triangulation dropped input points")
    simplices = tri.simplices.copy()
    sa = triangle_signed_areas(all_pts, simplices)
    flip = sa < 0
    simplices[flip] = simplices[flip][:, [0, 2, 1]]
    sa = np.abs(sa)
    if (sa < 1e-14 * w * h).any():
        raise DegenerateInput("triangulation produced a degenerate triangle")

    present = _edge_set(simplices)
    missing = [e for e in required if frozenset(e) not in present]
    if missing:
        for u, v in missing:
            simplices = _recover_edge(all_pts, simplices, u, v)
        protected = {frozenset(e) for e in required}
        simplices = _lawson_restore(all_pts, simplices, protected)
        sa = triangle_signed_areas(all_pts, simplices)
        if (sa <= 1e-14 * w * h).any():
            raise DegenerateInput("edge recovery degenerated the triangulation")

    total = triangle_signed_areas(all_pts, simplices).sum()
    if abs(total - w * h) > 1e-9 * w * h:
        raise DegenerateInput("triangulation does not tile the rectangle")

    return SimplicialMesh(
        points=all_pts,
        triangles=simplices,
        width=w,
        height=h,
        roi_masks=tuple(np.asarray(m, bool) for m in roi_masks),
        polylines=tuple(lines),
        required_edges=tuple(required),
    )


def _mask_shape_ok(mask, mesh):
    return mask.shape == (int(round(mesh.height)), int(round(mesh.width)))


def _mask_touches_border(mask):
    return bool(mask[0, :].any() or mask[-1, :].any() or mask[:, 0].any() or mask[:, -1].any())


def _polyline_samples(poly, spacing=0.25):
    return _subdivide_polyline(np.asarray(poly, float), spacing)


def _triangle_hits_mask(tri_pts, mask):
    """Exact-ish closed intersection test between a triangle and mask pixels.

    A pixel (px, py) occupies the closed unit square [px, px+1] x [py, py+1].
    """
    hh, ww = mask.shape
    lo = np.floor(tri_pts.min(axis=0)).astype(int)
    hi = np.ceil(tri_pts.max(axis=0)).astype(int)
    x0, y0 = np.clip(lo, 0, [ww - 1, hh - 1])
    x1 = int(np.clip(hi[0], 0, ww))
    y1 = int(np.clip(hi[1], 0, hh))
    window = mask[y0:y1, x0:x1]
    if not window.any():
        return False
    py, px = np.nonzero(window)
    px = px + x0
    py = py + y0

    # corner of a pixel square inside the triangle
    corners = np.stack(
        [
            np.column_stack([px, py]),
            np.column_stack([px + 1, py]),
            np.column_stack([px, py + 1]),
            np.column_stack([px + 1, py + 1]),
        ]
    ).astype(float)
    from .geometry import bary_coords

    for c in corners:
        b = bary_coords(tri_pts, c)
        if ((b >= -1e-12).all(axis=1)).any():
            return True

    # triangle vertex inside a pixel square
    for vx, vy in tri_pts:
        ix = np.floor(vx)
        iy = np.floor(vy)
        hit = (np.abs(px - ix) <= 1) & (np.abs(py - iy) <= 1)
        if hit.any():
            sel_x = px[hit]
            sel_y = py[hit]
            ok = (
                (vx >= sel_x - 1e-12)
                & (vx <= sel_x + 1 + 1e-12)
                & (vy >= sel_y - 1e-12)
                & (vy <= sel_y + 1 + 1e-12)
            )
            if ok.any():
                return True

    # triangle edge crossing a pixel square edge
    from .geometry import segments_intersect

    tri_edges = [(tri_pts[0], tri_pts[1]), (tri_pts[1], tri_pts[2]), (tri_pts[2], tri_pts[0])]
    for qx, qy in zip(px.astype(float), py.astype(float)):
        square = [
            ((qx, qy), (qx + 1, qy)),
            ((qx + 1, qy), (qx + 1, qy + 1)),
            ((qx + 1, qy + 1), (qx, qy + 1)),
            ((qx, qy + 1), (qx, qy)),
        ]
        for a, b in tri_edges:
            for c, d in square:
                if segments_intersect(a, b, np.asarray(c), np.asarray(d)):
                    return True
    return False


def classify_vertices(mesh, roi_masks=None, polylines=None):
    """Assign every vertex a role: Boundary, Roi(k), Line(j), else Interior.

    Precedence on contested vertices is Boundary first, then the lowest ROI
    index, then the lowest line index.  Region-level overlaps (mask touching
    another mask, a polyline, or the image border; lines touching the border
    or each other) raise :class:`OverlapViolation`.
    """
    masks = mesh.roi_masks if roi_masks is None else tuple(np.asarray(m, bool) for m in roi_masks)
    lines = mesh.polylines if polylines is None else tuple(_as_polyline_points(p) for p in polylines)
    w, h = mesh.width, mesh.height
    tol = _REL_TOL * max(w, h)

    for m in masks:
        if not _mask_shape_ok(m, mesh):
            raise OverlapViolation(
                f"mask shape {m.shape} does not match domain {int(round(h))} x {int(round(w))}"
            )
        if not m.any():
            raise DegenerateInput("empty ROI mask")
        if _mask_touches_border(m):
            raise OverlapViolation("ROI mask touches the image border")
    for i in range(len(masks)):
        for j in range(i + 1, len(masks)):
            if (masks[i] & masks[j]).any():
                raise OverlapViolation(f"ROI masks {i} and {j} overlap")

    for j, poly in enumerate(lines):
        p = np.asarray(poly, float)
        on_border = (
            (np.abs(p[:, 0]) <= tol)
            | (np.abs(p[:, 0] - w) <= tol)
            | (np.abs(p[:, 1]) <= tol)
            | (np.abs(p[:, 1] - h) <= tol)
        )
        if on_border.any():
            raise OverlapViolation(f"line {j} touches the image border")
        samples = _polyline_samples(p)
        ix = np.clip(np.floor(samples[:, 0]).astype(int), 0, int(round(w)) - 1)
        iy = np.clip(np.floor(samples[:, 1]).astype(int), 0, int(round(h)) - 1)
        for k, m in enumerate(masks):
            if m[iy, ix].any():
                raise OverlapViolation(f"ROI mask {k} touches line {j}")
    from .geometry import segments_intersect

    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            for a, b in zip(lines[i][:-1], lines[i][1:]):
                for c, d in zip(lines[j][:-1], lines[j][1:]):
                    if segments_intersect(a, b, c, d):
                        raise OverlapViolation(f"lines {i} and {j} intersect")

    n = mesh.n_vertices
    kinds = np.full(n, Role.INTERIOR, np.int8)
    regions = np.full(n, -1, np.int32)
    kinds[mesh.boundary_mask()] = Role.BOUNDARY

    tp = mesh.points[mesh.triangles]
    for k, m in enumerate(masks):
        ys, xs = np.nonzero(m)
        mlo = np.array([xs.min(), ys.min()], float)
        mhi = np.array([xs.max() + 1, ys.max() + 1], float)
        blo = tp.min(axis=1)
        bhi = tp.max(axis=1)
        near = (bhi >= mlo).all(axis=1) & (blo <= mhi).all(axis=1)
        for t in np.flatnonzero(near):
            if _triangle_hits_mask(tp[t], m):
                for v in mesh.triangles[t]:
                    if kinds[v] == Role.INTERIOR or (
                        kinds[v] == Role.ROI and regions[v] > k
                    ):
                        kinds[v] = Role.ROI
                        regions[v] = k

    for j, poly in enumerate(lines):
        on_line = np.zeros(n, bool)
        for a, b in zip(poly[:-1], poly[1:]):
            on_line |= points_segment_distance(mesh.points, a, b) <= tol
        for v in np.flatnonzero(on_line):
            if kinds[v] == Role.INTERIOR:
                kinds[v] = Role.LINE
                regions[v] = j

    return VertexClassification(kinds, regions, len(masks), len(lines))


def mesh_diameter(mesh):
    """Longest edge over all triangles."""
    tp = mesh.points[mesh.triangles]
    e = np.stack(
        [
            np.hypot(*(tp[:, 1] - tp[:, 0]).T),
            np.hypot(*(tp[:, 2] - tp[:, 1]).T),
            np.hypot(*(tp[:, 0] - tp[:, 2]).T),
        ]
    )
    return float(e.max())


def _point_in_mask(p, mask):
    hh, ww = mask.shape
    ix = int(np.clip(np.floor(p[0]), 0, ww - 1))
    iy = int(np.clip(np.floor(p[1]), 0, hh - 1))
    return bool(mask[iy, ix])


def _edge_in_mask(a, b, mask):
    for t in np.linspace(0.0, 1.0, max(5, int(np.hypot(*(b - a)) * 2) + 2)):
        if not _point_in_mask(a + t * (b - a), mask):
            return False
    return True


def _edge_on_polyline(a, b, poly, tol):
    segs = list(zip(poly[:-1], poly[1:]))
    for p in (a, b, 0.5 * (a + b)):
        d = min(points_segment_distance(p[None, :], s, t)[0] for s, t in segs)
        if d > tol:
            return False
    return True


def corner_chop(mesh, classification=None):
    """One 1-to-4 subdivision step, splitting every triangle at edge midpoints.

    Returns ``(new_mesh, new_classification)``; the second element is ``None``
    when no classification was supplied.  Midpoint vertices inherit a role
    only when both edge endpoints carry it and the edge itself lies inside the
    corresponding region; everything else starts Interior.
    """
    pts = mesh.points
    tris = mesh.triangles
    edges = mesh.edges()
    mid_index = {}
    mids = 0.5 * (pts[edges[:, 0]] + pts[edges[:, 1]])
    for e in edges:
        mid_index[(int(e[0]), int(e[1]))] = len(pts) + len(mid_index)
    new_pts = np.vstack([pts, mids])

    def mid(a, b):
        return mid_index[(a, b) if a < b else (b, a)]

    out = np.empty((4 * len(tris), 3), np.int64)
    for t, (i, j, k) in enumerate(tris):
        i, j, k = int(i), int(j), int(k)
        mij, mjk, mki = mid(i, j), mid(j, k), mid(k, i)
        out[4 * t + 0] = (i, mij, mki)
        out[4 * t + 1] = (mij, j, mjk)
        out[4 * t + 2] = (mki, mjk, k)
        out[4 * t + 3] = (mij, mjk, mki)

    new_required = []
    for a, b in mesh.required_edges:
        m = mid(int(a), int(b))
        new_required.extend([(int(a), m), (m, int(b))])

    child = SimplicialMesh(
        points=new_pts,
        triangles=out,
        width=mesh.width,
        height=mesh.height,
        roi_masks=mesh.roi_masks,
        polylines=mesh.polylines,
        required_edges=tuple(new_required),
    )

    if classification is None:
        return child, None

    tol = _REL_TOL * max(mesh.width, mesh.height)
    kinds = np.full(child.n_vertices, Role.INTERIOR, np.int8)
    regions = np.full(child.n_vertices, -1, np.int32)
    kinds[: len(pts)] = classification.kinds
    regions[: len(pts)] = classification.regions
    bmask = child.boundary_mask()
    for (a, b), m in zip(edges, mids):
        a, b = int(a), int(b)
        v = mid(a, b)
        ka, kb = classification.kinds[a], classification.kinds[b]
        if ka != kb:
            continue
        if ka == Role.BOUNDARY:
            if bmask[v]:
                kinds[v] = Role.BOUNDARY
        elif ka == Role.ROI:
            if classification.regions[a] == classification.regions[b] and _edge_in_mask(
                pts[a], pts[b], mesh.roi_masks[classification.regions[a]]
            ):
                kinds[v] = Role.ROI
                regions[v] = classification.regions[a]
        elif ka == Role.LINE:
            r = classification.regions[a]
            if r == classification.regions[b] and _edge_on_polyline(
                pts[a], pts[b], np.asarray(mesh.polylines[r], float), tol
            ):
                kinds[v] = Role.LINE
                regions[v] = r

    return child, VertexClassification(
        kinds, regions, classification.n_rois, classification.n_lines
    )


def locate_point(mesh, p):
    """Containing triangle and barycentric coordinates of a domain point.

    Raises :class:`OutOfDomain` for points outside the rectangle.  Points on
    shared edges resolve to one consistent triangle; tiny negative barycentric
    values from roundoff are clamped to zero.
    """
    p = np.asarray(p, float)
    tol = _REL_TOL * max(mesh.width, mesh.height)
    if not (-tol <= p[0] <= mesh.width + tol and -tol <= p[1] <= mesh.height + tol):
        raise OutOfDomain(f"point {tuple(p)} outside [0, {mesh.width}] x [0, {mesh.height}]")
    t, b = mesh.grid().locate(p)
    if t is None:
        t, b = mesh.grid().nearest(p)
    return t, b


_ROLE_TOKENS = {Role.INTERIOR: "I", Role.BOUNDARY: "B"}


def _class_token(kind, region):
    if kind == Role.ROI:
        return f"R{region}"
    if kind == Role.LINE:
        return f"L{region}"
    return _ROLE_TOKENS[Role(int(kind))]


def dump_mesh(mesh, classification, fp):
    """Write the portable text form: header, vertex lines, face lines."""
    own = isinstance(fp, str)
    f = open(fp, "w") if own else fp
    try:
        f.write("rtmesh 1\n")
        for i, (x, y) in enumerate(mesh.points):
            tok = _class_token(classification.kinds[i], classification.regions[i])
            f.write(f"v {float(x)!r} {float(y)!r} {tok}\n")
        for i, j, k in mesh.triangles:
            f.write(f"f {int(i)} {int(j)} {int(k)}\n")
    finally:
        if own:
            f.close()


def load_mesh(fp, width=None, height=None):
    """Parse the text form back into ``(mesh, classification)``.

    The rectangle size defaults to the bounding box of the vertices, which is
    exact for meshes produced by :func:`build_mesh`.
    """
    own = isinstance(fp, str)
    f = open(fp) if own else fp
    try:
        header = f.readline().split()
        if header[:2] != ["rtmesh", "1"]:
            raise DegenerateInput("not an rtmesh v1 stream")
        pts = []
        kinds = []
        regions = []
        tris = []
        for line in f:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                pts.append((float(parts[1]), float(parts[2])))
                tok = parts[3]
                if tok == "I":
                    kinds.append(Role.INTERIOR)
                    regions.append(-1)
                elif tok == "B":
                    kinds.append(Role.BOUNDARY)
                    regions.append(-1)
                elif tok.startswith("R"):
                    kinds.append(Role.ROI)
                    regions.append(int(tok[1:]))
                elif tok.startswith("L"):
                    kinds.append(Role.LINE)
                    regions.append(int(tok[1:]))
                else:
                    raise DegenerateInput(f"unknown vertex class {tok!r}")
            elif parts[0] == "f":
                tris.append((int(parts[1]), int(parts[2]), int(parts[3])))
    finally:
        if own:
            f.close()
    pts = np.asarray(pts, float)
    if width is None:
        width = pts[:, 0].max()
    if height is None:
        height = pts[:, 1].max()
    mesh = SimplicialMesh(pts, np.asarray(tris, np.int64), float(width), float(height))
    regions = np.asarray(regions)
    n_rois = int(regions[np.asarray(kinds) == Role.ROI].max() + 1) if (np.asarray(kinds) == Role.ROI).any() else 0
    n_lines = int(regions[np.asarray(kinds) == Role.LINE].max() + 1) if (np.asarray(kinds) == Role.LINE).any() else 0
    return mesh, VertexClassification(kinds, regions, n_rois, n_lines)
