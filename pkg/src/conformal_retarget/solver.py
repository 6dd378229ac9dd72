"""Constrained minimization of the conformal energy and the retarget pipeline.

The free vertex images solve a sparse symmetric positive definite system; ROI
and line vertices move rigidly with a handful of shared parameters; boundary
vertices follow a monotone edge-to-edge map of the rectangle outlines.  When
the unconstrained minimizer folds triangles over, constrained vertices near
the folds are released in growing rings until orientation is restored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .energy import (
    assemble,
    assemble_full_matrix,
    discrete_energy,
    energy_density,
    grad_coeffs,
    orientation_determinants,
)
from .errors import (
    ConstraintViolation,
    InvalidDimension,
    MissingParameter,
    NoConvergence,
    NonPositiveScale,
    SingularSystem,
)
from .mesh import Role, build_mesh, classify_vertices

_REL = 1e-9


@dataclass(eq=False)
class SimplicialMap:
    """Vertex images of a piecewise-linear map, plus an orientation flag."""

    positions: np.ndarray
    orientation_ok: bool = False


@dataclass(eq=False)
class ConstraintSet:
    """Every datum the constrained solve needs besides the mesh itself.

    ROIs share one scale ``roi_scale`` and carry one offset each; lines get a
    diagonal scale and an offset each; boundary vertices map to explicit
    positions on the target outline.
    """

    width_factor: float
    boundary: dict
    roi_scale: float | None = None
    roi_offsets: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    line_scales: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    line_offsets: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def __post_init__(self):
        self.roi_offsets = np.asarray(self.roi_offsets, float).reshape(-1, 2)
        self.line_scales = np.asarray(self.line_scales, float).reshape(-1, 2)
        self.line_offsets = np.asarray(self.line_offsets, float).reshape(-1, 2)


def _corner_targets(mesh, w):
    return {
        (0.0, 0.0): (0.0, 0.0),
        (mesh.width, 0.0): (w * mesh.width, 0.0),
        (0.0, mesh.height): (0.0, mesh.height),
        (mesh.width, mesh.height): (w * mesh.width, mesh.height),
    }


def _side_of(mesh, p, tol):
    x, y = p
    if abs(y) <= tol:
        return "bottom"
    if abs(y - mesh.height) <= tol:
        return "top"
    if abs(x) <= tol:
        return "left"
    if abs(x - mesh.width) <= tol:
        return "right"
    return None


def _validate_boundary_map(mesh, classification, constraints):
    w = constraints.width_factor
    tol = _REL * max(mesh.width, mesh.height)
    wa = w * mesh.width
    corners = _corner_targets(mesh, w)
    bverts = np.flatnonzero(classification.kinds == Role.BOUNDARY)
    for v in bverts:
        if v not in constraints.boundary:
            raise MissingParameter(f"boundary vertex {v} has no target position")
    for v in bverts:
        key = (float(mesh.points[v, 0]), float(mesh.points[v, 1]))
        if key in corners:
            got = np.asarray(constraints.boundary[v], float)
            want = np.asarray(corners[key])
            if np.abs(got - want).max() > tol * max(1.0, wa, mesh.height):
                raise ConstraintViolation(
                    f"corner {key} must map to {tuple(want)}, got {tuple(got)}"
                )
    sides = {"bottom": [], "top": [], "left": [], "right": []}
    for v in bverts:
        s = _side_of(mesh, mesh.points[v], tol)
        coord = mesh.points[v, 0] if s in ("bottom", "top") else mesh.points[v, 1]
        sides[s].append((coord, v))
    fixed_targets = {"bottom": (1, 0.0), "top": (1, mesh.height), "left": (0, 0.0), "right": (0, wa)}
    for s, entries in sides.items():
        entries.sort()
        moving = 0 if s in ("bottom", "top") else 1
        span = wa if s in ("bottom", "top") else mesh.height
        gtol = tol * max(1.0, wa, mesh.height)
        vals = [float(np.asarray(constraints.boundary[v])[moving]) for _, v in entries]
        if any(b - a <= -gtol for a, b in zip(vals, vals[1:])):
            raise ConstraintViolation(f"boundary map not monotone along {s} side")
        if any(not (-gtol <= x <= span + gtol) for x in vals):
            raise ConstraintViolation(f"boundary target leaves the {s} side of the outline")
        axis, want = fixed_targets[s]
        for _, v in entries:
            got = float(np.asarray(constraints.boundary[v])[axis])
            if abs(got - want) > gtol:
                raise ConstraintViolation(
                    f"vertex {v} must stay on the {s} side (coordinate {got} != {want})"
                )


def apply_constraints(mesh, classification, constraints):
    """Fixed-vertex value block, aligned with ``classification.fixed_indices``.

    Raises :class:`MissingParameter` when the classes demand a parameter the
    constraint set lacks, :class:`ConstraintViolation` on broken invariants.
    """
    k_needed = classification.n_rois
    if k_needed and constraints.roi_scale is None:
        raise MissingParameter("vertex classes include ROIs but no roi_scale given")
    if k_needed and len(constraints.roi_offsets) < k_needed:
        raise MissingParameter(
            f"{k_needed} ROI offsets required, got {len(constraints.roi_offsets)}"
        )
    if classification.n_lines and len(constraints.line_scales) < classification.n_lines:
        raise MissingParameter("missing line scale parameters")
    if classification.n_lines and len(constraints.line_offsets) < classification.n_lines:
        raise MissingParameter("missing line offset parameters")
    if constraints.roi_scale is not None and constraints.roi_scale <= 0:
        raise ConstraintViolation(f"roi scale {constraints.roi_scale} must be positive")
    if len(constraints.line_scales) and (constraints.line_scales <= 0).any():
        raise ConstraintViolation("line scales must be positive")
    _validate_boundary_map(mesh, classification, constraints)

    out = np.empty((len(classification.fixed_indices), 2))
    for row, v in enumerate(classification.fixed_indices):
        kind = classification.kinds[v]
        p = mesh.points[v]
        if kind == Role.BOUNDARY:
            out[row] = constraints.boundary[int(v)]
        elif kind == Role.ROI:
            k = classification.regions[v]
            out[row] = constraints.roi_scale * p + constraints.roi_offsets[k]
        else:  # LINE
            j = classification.regions[v]
            out[row] = constraints.line_scales[j] * p + constraints.line_offsets[j]
    return out


def constrained_positions(mesh, classification, constraints):
    """Full (N, 2) position array with NaN on free rows."""
    pos = np.full((mesh.n_vertices, 2), np.nan)
    pos[classification.fixed_indices] = apply_constraints(mesh, classification, constraints)
    return pos


def uniform_stretch_boundary(mesh, classification, w):
    """Boundary targets of the plain horizontal stretch (wx, y)."""
    out = {}
    for v in np.flatnonzero(classification.kinds == Role.BOUNDARY):
        x, y = mesh.points[v]
        out[int(v)] = np.array([w * x, y])
    return out


def _reduced_solve(L, free, fixed, fixed_values, method, tol):
    la = L[free][:, free].tocsc()
    lb = L[free][:, fixed].tocsr()
    rhs = -lb @ fixed_values
    if method == "factorized":
        try:
            lu = spla.splu(la)
            x = lu.solve(rhs)
        except RuntimeError as e:
            raise SingularSystem(str(e)) from None
    elif method == "cg":
        x = np.empty_like(rhs)
        for c in range(rhs.shape[1]):
            xc, info = spla.cg(la, rhs[:, c], rtol=1e-12, atol=0.0, maxiter=40 * la.shape[0])
            if info != 0:
                raise SingularSystem(f"conjugate gradients stalled (info={info})")
            x[:, c] = xc
    else:
        raise ValueError(f"unknown method {method!r}")
    scale = np.abs(rhs).max()
    resid = np.abs(la @ x - rhs).max()
    if not np.isfinite(x).all() or resid > tol * max(scale, 1e-30):
        raise SingularSystem(
            f"reduced solve residual {resid:.3e} exceeds {tol:.1e} * {scale:.3e}"
        )
    return x


def solve_minimizer(mesh, coeffs, system, fixed_values, method="factorized", tol=1e-8):
    """Minimize the energy over free vertices with the fixed block pinned.

    :param fixed_values: (n_fixed, 2) images of the fixed vertices
    :param method: "factorized" (sparse LU) or "cg" (conjugate gradients)
    :return: :class:`SimplicialMap` over all vertices in original order
    """
    fixed_values = np.asarray(fixed_values, float)
    x = _reduced_solve(system.L, system.free, system.fixed, fixed_values, method, tol)
    pos = np.empty((mesh.n_vertices, 2))
    pos[system.free] = x
    pos[system.fixed] = fixed_values
    flipped = check_orientation(mesh, coeffs, pos)
    return SimplicialMap(positions=pos, orientation_ok=len(flipped) == 0)


def check_orientation(mesh, coeffs, positions):
    """Indices of triangles whose image is flipped or collapsed (det <= 0)."""
    if isinstance(positions, SimplicialMap):
        positions = positions.positions
    det = orientation_determinants(mesh, coeffs, positions)
    return np.flatnonzero(det <= 0.0)


def _pava(y):
    """Pool-adjacent-violators projection onto non-decreasing sequences."""
    blocks = []
    for x in y:
        blocks.append([float(x), 1])
        while len(blocks) > 1 and blocks[-2][0] * blocks[-1][1] > blocks[-1][0] * blocks[-2][1]:
            s, c = blocks.pop()
            blocks[-1][0] += s
            blocks[-1][1] += c
    out = []
    for s, c in blocks:
        out.extend([s / c] * c)
    return np.asarray(out)


def _monotone_strict(values, lo, hi):
    """Nearest non-decreasing sequence, nudged strictly inside (lo, hi)."""
    v = np.clip(_pava(values), lo, hi)
    n = len(v)
    ramp = lo + (hi - lo) * (np.arange(1, n + 1) / (n + 1))
    lam = 1e-9
    return (1 - lam) * v + lam * ramp


def init_params(mesh, classification, width_factor, system=None, details=False):
    """Least-squares initialization of region parameters and boundary map.

    Stationarity of the energy is imposed at every non-boundary vertex (both
    components) and along the slide direction of every non-corner boundary
    vertex, with corners pinned.  The system is overdetermined because region
    vertices move with only a few shared parameters; it is solved in the
    least-squares sense.

    Raises :class:`NonPositiveScale` when the fitted ROI or line scale is not
    positive; callers fall back to proportional placement.
    """
    w = float(width_factor)
    if w <= 0:
        raise InvalidDimension(f"width factor {width_factor} must be positive")
    if system is None:
        system = assemble(mesh, grad_coeffs(mesh), classification)
    L = system.L.tocsr()
    n = mesh.n_vertices
    pts = mesh.points
    tol = _REL * max(mesh.width, mesh.height)
    wa = w * mesh.width

    kinds = classification.kinds
    regions = classification.regions
    K = classification.n_rois
    nl = classification.n_lines

    corners = _corner_targets(mesh, w)
    free_verts = np.flatnonzero(kinds == Role.INTERIOR)
    col = {}
    ncols = 0
    for v in free_verts:
        col[("u", int(v))] = ncols
        col[("v", int(v))] = ncols + 1
        ncols += 2
    slide_info = {}
    for v in np.flatnonzero(kinds == Role.BOUNDARY):
        key = (float(pts[v, 0]), float(pts[v, 1]))
        if key in corners:
            continue
        side = _side_of(mesh, pts[v], tol)
        slide_info[int(v)] = side
        col[("s", int(v))] = ncols
        ncols += 1
    if K:
        col["r_roi"] = ncols
        ncols += 1
        for k in range(K):
            col[("t_roi", k)] = ncols
            ncols += 2
    for j in range(nl):
        col[("line", j)] = ncols  # rx, ry, tx, ty
        ncols += 4

    # f = P x + c, components stacked as (u | v)
    P = sp.lil_matrix((2 * n, ncols))
    c = np.zeros(2 * n)
    for v in range(n):
        kind = kinds[v]
        x, y = pts[v]
        if kind == Role.INTERIOR:
            P[v, col[("u", v)]] = 1.0
            P[n + v, col[("v", v)]] = 1.0
        elif kind == Role.BOUNDARY:
            key = (float(x), float(y))
            if key in corners:
                c[v], c[n + v] = corners[key]
            else:
                side = slide_info[v]
                s = col[("s", v)]
                if side == "bottom":
                    P[v, s] = 1.0
                    c[n + v] = 0.0
                elif side == "top":
                    P[v, s] = 1.0
                    c[n + v] = mesh.height
                elif side == "left":
                    P[n + v, s] = 1.0
                    c[v] = 0.0
                else:
                    P[n + v, s] = 1.0
                    c[v] = wa
        elif kind == Role.ROI:
            k = regions[v]
            P[v, col["r_roi"]] = x
            P[n + v, col["r_roi"]] = y
            P[v, col[("t_roi", k)]] = 1.0
            P[n + v, col[("t_roi", k)] + 1] = 1.0
        else:  # LINE
            j0 = col[("line", regions[v])]
            P[v, j0] = x
            P[v, j0 + 2] = 1.0
            P[n + v, j0 + 1] = y
            P[n + v, j0 + 3] = 1.0
    P = P.tocsr()

    big = sp.block_diag([L, L]).tocsr()
    nonb = np.flatnonzero(kinds != Role.BOUNDARY)
    rows = np.concatenate([nonb, n + nonb])
    slide_rows = []
    for v, side in slide_info.items():
        slide_rows.append(v if side in ("bottom", "top") else n + v)
    rows = np.concatenate([rows, np.asarray(slide_rows, int)]) if slide_rows else rows

    R = big[rows] @ P
    rhs = -(big[rows] @ c)
    A = R.toarray() if ncols <= 6000 else R
    if sp.issparse(A):
        sol = spla.lsqr(A, rhs, atol=1e-14, btol=1e-14, iter_lim=8 * ncols)[0]
    else:
        sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)

    r_roi = float(sol[col["r_roi"]]) if K else None
    if K and r_roi <= 0:
        raise NonPositiveScale(f"fitted ROI scale {r_roi:.4g} is not positive")
    roi_offsets = np.array([[sol[col[("t_roi", k)]], sol[col[("t_roi", k)] + 1]] for k in range(K)])
    line_scales = np.empty((nl, 2))
    line_offsets = np.empty((nl, 2))
    for j in range(nl):
        j0 = col[("line", j)]
        line_scales[j] = sol[j0], sol[j0 + 1]
        line_offsets[j] = sol[j0 + 2], sol[j0 + 3]
    if nl and (line_scales <= 0).any():
        raise NonPositiveScale("fitted line scale is not positive")

    boundary = {}
    for v in np.flatnonzero(kinds == Role.BOUNDARY):
        key = (float(pts[v, 0]), float(pts[v, 1]))
        if key in corners:
            boundary[int(v)] = np.asarray(corners[key], float)
    sides = {"bottom": [], "top": [], "left": [], "right": []}
    for v, side in slide_info.items():
        coord = pts[v, 0] if side in ("bottom", "top") else pts[v, 1]
        sides[side].append((coord, v))
    for side, entries in sides.items():
        if not entries:
            continue
        entries.sort()
        vals = np.array([sol[col[("s", v)]] for _, v in entries])
        hi = wa if side in ("bottom", "top") else mesh.height
        vals = _monotone_strict(vals, 0.0, hi)
        for (coord, v), s in zip(entries, vals):
            if side == "bottom":
                boundary[v] = np.array([s, 0.0])
            elif side == "top":
                boundary[v] = np.array([s, mesh.height])
            elif side == "left":
                boundary[v] = np.array([0.0, s])
            else:
                boundary[v] = np.array([wa, s])

    cs = ConstraintSet(
        width_factor=w,
        boundary=boundary,
        roi_scale=r_roi,
        roi_offsets=roi_offsets,
        line_scales=line_scales,
        line_offsets=line_offsets,
    )
    if details:
        dense = A.toarray() if sp.issparse(A) else A
        return cs, {"matrix": dense, "rhs": rhs, "solution": sol}
    return cs


def fallback_constraints(mesh, classification, width_factor):
    """Proportional placement used when least squares yields a bad scale.

    ROIs keep shape at scale min(w, 1) and sit at the proportionally moved
    position of their centroid; lines stretch with the domain; the boundary
    is the uniform stretch.
    """
    w = float(width_factor)
    r = min(w, 1.0)
    K = classification.n_rois
    offsets = np.zeros((K, 2))
    for k in range(K):
        verts = classification.roi_vertices(k)
        cx, cy = mesh.points[verts].mean(axis=0)
        offsets[k] = (w * cx - r * cx, cy - r * cy)
    nl = classification.n_lines
    return ConstraintSet(
        width_factor=w,
        boundary=uniform_stretch_boundary(mesh, classification, w),
        roi_scale=r if K else None,
        roi_offsets=offsets,
        line_scales=np.tile([w, 1.0], (nl, 1)),
        line_offsets=np.zeros((nl, 2)),
    )


class CorrectionResult(NamedTuple):
    map: SimplicialMap
    iterations: int
    n_c_bound: int


def _vertex_adjacency(mesh):
    e = mesh.edges()
    adj = [[] for _ in range(mesh.n_vertices)]
    for a, b in e:
        adj[int(a)].append(int(b))
        adj[int(b)].append(int(a))
    return adj


def bijection_correct(
    mesh,
    coeffs,
    classification,
    constraints,
    initial_map,
    system=None,
    max_iterations=None,
    tol=1e-8,
):
    """Release constrained vertices near folds until the map is injective.

    Starts from the vertices of flipped triangles and grows the released set
    by one edge ring per round; boundary vertices are never released.  When
    every ROI and line vertex has been released the solve is boundary-only
    and provably fold-free; persistent folds past that point raise
    :class:`NoConvergence`.
    """
    flipped = check_orientation(mesh, coeffs, initial_map)
    if len(flipped) == 0:
        return CorrectionResult(initial_map, 0, 0)
    if system is None:
        system = assemble(mesh, coeffs, classification)
    L = system.L
    kinds = classification.kinds
    cpos = constrained_positions(mesh, classification, constraints)
    adj = _vertex_adjacency(mesh)
    relaxable = (kinds == Role.ROI) | (kinds == Role.LINE)

    hot = np.zeros(mesh.n_vertices, bool)
    hot[np.unique(mesh.triangles[flipped])] = True

    def grow(mask):
        out = mask.copy()
        for v in np.flatnonzero(mask):
            out[adj[v]] = True
        return out

    # termination bound: rounds until every ROI/line vertex is released, + 1
    probe = hot.copy()
    bound = 1
    steps = 0
    while (relaxable & ~probe).any():
        nxt = grow(probe)
        steps += 1
        if not (nxt ^ probe).any():
            break  # nothing left to grow into; mesh exhausted
        probe = nxt
    bound = steps + 1
    limit = bound if max_iterations is None else min(bound, int(max_iterations))

    current = hot
    for it in range(1, limit + 1):
        free_mask = (kinds == Role.INTERIOR) | (relaxable & current)
        free = np.flatnonzero(free_mask)
        fixed = np.flatnonzero(~free_mask)
        x = _reduced_solve(L, free, fixed, cpos[fixed], "factorized", tol)
        pos = np.empty((mesh.n_vertices, 2))
        pos[free] = x
        pos[fixed] = cpos[fixed]
        still = check_orientation(mesh, coeffs, pos)
        if len(still) == 0:
            return CorrectionResult(SimplicialMap(pos, True), it, bound)
        if not (relaxable & ~current).any():
            raise NoConvergence(
                f"{len(still)} folded triangles remain with every region vertex released"
            )
        current = grow(current)
    raise NoConvergence(f"orientation not restored within {limit} rounds")


@dataclass
class RetargetSpec:
    """User-facing knobs of one retargeting run."""

    width: int
    height: int
    ratio: float
    edge_length: float | None = None
    fraction: float = 0.25
    mode: str = "manual"
    seed: int | None = None
    solver_tol: float = 1e-8
    max_correction_iterations: int | None = None

    def __post_init__(self):
        if self.ratio <= 0 or not np.isfinite(self.ratio):
            raise InvalidDimension(f"ratio {self.ratio} must be positive")
        if not (0 < self.fraction < 1):
            raise InvalidDimension(f"fraction {self.fraction} outside (0, 1)")
        if self.edge_length is None:
            self.edge_length = float(np.clip(min(self.width, self.height) / 24.0, 2.0, 32.0))
        if self.edge_length < 2.0:
            raise InvalidDimension(f"edge length {self.edge_length} below 2 px")
        if self.edge_length > min(self.width, self.height):
            raise InvalidDimension("edge length exceeds the short image side")
        if self.mode not in ("manual", "auto"):
            raise InvalidDimension(f"unknown mode {self.mode!r}")


def target_width(spec):
    """Output width in pixels: round-half-up of ratio * source width."""
    return int(np.floor(spec.ratio * spec.width + 0.5))


@dataclass(eq=False)
class RetargetResult:
    map: SimplicialMap
    mesh: object
    classification: object
    coeffs: object
    constraints: ConstraintSet
    diagnostics: dict


def retarget(spec, roi_masks=(), polylines=(), constraints=None):
    """Run the full solve for one image geometry.

    Saliency is not consulted here; auto mode supplies its masks through
    ``roi_masks`` like any other caller.
    """
    from .mesh import DEFAULT_JITTER_SEED

    seed = DEFAULT_JITTER_SEED if spec.seed is None else int(spec.seed)
    mesh = build_mesh(
        spec.width, spec.height, spec.edge_length, roi_masks, polylines, seed=seed
    )
    classification = classify_vertices(mesh)
    coeffs = grad_coeffs(mesh)
    system = assemble(mesh, coeffs, classification)

    w = float(spec.ratio)
    init_fallback = False
    if constraints is None:
        try:
            constraints = init_params(mesh, classification, w, system=system)
        except NonPositiveScale:
            constraints = fallback_constraints(mesh, classification, w)
            init_fallback = True

    fixed_values = apply_constraints(mesh, classification, constraints)
    first = solve_minimizer(
        mesh, coeffs, system, fixed_values, tol=spec.solver_tol
    )
    flipped0 = check_orientation(mesh, coeffs, first)
    corrected = bijection_correct(
        mesh,
        coeffs,
        classification,
        constraints,
        first,
        system=system,
        max_iterations=spec.max_correction_iterations,
        tol=spec.solver_tol,
    )

    area2 = w * mesh.width * mesh.height
    rep = discrete_energy(mesh, coeffs, corrected.map.positions, area2)
    dens = energy_density(mesh, coeffs, corrected.map.positions)
    diagnostics = {
        "conformal_energy": rep.conformal,
        "dirichlet_energy": rep.dirichlet,
        "flipped_initial": int(len(flipped0)),
        "correction_iterations": corrected.iterations,
        "n_c_bound": corrected.n_c_bound,
        "per_triangle_density": dens.tolist(),
        "seed": seed,
        "width_factor": w,
        "target_width": target_width(spec),
        "target_height": int(spec.height),
        "n_vertices": mesh.n_vertices,
        "n_triangles": mesh.n_triangles,
        "n_free": classification.n_free,
        "n_rois": classification.n_rois,
        "n_lines": classification.n_lines,
        "init_fallback": init_fallback,
    }
    return RetargetResult(
        map=corrected.map,
        mesh=mesh,
        classification=classification,
        coeffs=coeffs,
        constraints=constraints,
        diagnostics=diagnostics,
    )


def refine_constraints(constraints, parent_mesh, parent_classification):
    """Carry a constraint set onto the corner-chopped mesh.

    Region parameters transfer unchanged; boundary midpoints interpolate
    their endpoints' targets, which keeps the boundary map piecewise linear
    and monotone.
    """
    edges = parent_mesh.edges()
    n0 = parent_mesh.n_vertices
    boundary = {int(v): np.asarray(p, float) for v, p in constraints.boundary.items()}
    kinds = parent_classification.kinds
    for idx, (a, b) in enumerate(edges):
        a, b = int(a), int(b)
        if kinds[a] == Role.BOUNDARY and kinds[b] == Role.BOUNDARY:
            if a in boundary and b in boundary:
                boundary[n0 + idx] = 0.5 * (boundary[a] + boundary[b])
    return ConstraintSet(
        width_factor=constraints.width_factor,
        boundary=boundary,
        roi_scale=constraints.roi_scale,
        roi_offsets=constraints.roi_offsets,
        line_scales=constraints.line_scales,
        line_offsets=constraints.line_offsets,
    )
