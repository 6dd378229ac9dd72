"""One execution path shared by the command line and the HTTP service.

Both front ends normalize their inputs into a :class:`RunConfig`, call
:func:`execute`, and write artifacts with the helpers here, so identical
inputs yield byte-identical outputs no matter which door they came through.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import NoComponents, SizeMismatch
from .mesh import build_mesh, classify_vertices
from .raster import quantize
from .saliency import compute_saliency, threshold_rois
from .solver import ConstraintSet, RetargetSpec, retarget
from .warp import build_target_index, resample

__all__ = [
    "RunConfig",
    "RunOutcome",
    "execute",
    "parse_polylines",
    "parse_params",
    "constraints_from_params",
    "mask_from_raster",
    "encode_saliency_png",
    "diagnostics_json",
]


@dataclass
class RunConfig:
    ratio: float
    auto: bool = False
    fraction: float = 0.25
    edge_length: float | None = None
    seed: int | None = None
    roi_masks: list = field(default_factory=list)
    polylines: list = field(default_factory=list)
    params: dict | None = None
    max_correction_iterations: int | None = None


@dataclass
class RunOutcome:
    result: object
    output: object
    saliency: object | None
    notes: list


def mask_from_raster(raster, width, height):
    """Binary ROI mask from a mask image; nonblack means selected."""
    if raster.width != width or raster.height != height:
        raise SizeMismatch(
            f"mask is {raster.width}x{raster.height}, image is {width}x{height}"
        )
    return raster.as_gray() >= 0.5


def parse_polylines(text):
    """Polylines from their JSON document: [{"points": [[x, y], ...]}, ...]."""
    doc = json.loads(text)
    if not isinstance(doc, list):
        raise ValueError("polyline document must be a JSON array")
    lines = []
    for entry in doc:
        pts = np.asarray(entry["points"], float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ValueError(f"polyline needs at least two [x, y] points, got {pts.shape}")
        lines.append(pts)
    return lines


def parse_params(text):
    """Manual constraint parameters from their JSON document."""
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise ValueError("parameter document must be a JSON object")
    return doc


def _side_breakpoints(params, side, lo, hi, ratio):
    table = (params.get("boundary") or {}).get(side)
    stretch = ratio if side in ("bottom", "top") else 1.0
    if table is None:
        table = [[lo, lo * stretch], [hi, hi * stretch]]
    src = [float(s) for s, _ in table]
    dst = [float(d) for _, d in table]
    if src[0] > lo:
        src.insert(0, lo)
        dst.insert(0, lo * stretch)
    if src[-1] < hi:
        src.append(hi)
        dst.append(hi * stretch)
    return np.asarray(src), np.asarray(dst)


def constraints_from_params(params, mesh, classification, ratio):
    """Build a full constraint set from the manual parameter document.

    Boundary sides may be given as monotone [source, target] breakpoint
    lists; missing sides default to the uniform map. Region parameters are
    taken verbatim; completeness is checked downstream.
    """
    w, h = mesh.width, mesh.height
    tables = {
        side: _side_breakpoints(params, side, 0.0, w if side in ("bottom", "top") else h, ratio)
        for side in ("bottom", "top", "left", "right")
    }
    boundary = {}
    from .mesh import Role

    for v in np.flatnonzero(classification.kinds == Role.BOUNDARY):
        x, y = mesh.points[v]
        if y == 0.0:
            src, dst = tables["bottom"]
            boundary[v] = np.array([np.interp(x, src, dst), 0.0])
        elif y == h:
            src, dst = tables["top"]
            boundary[v] = np.array([np.interp(x, src, dst), h])
        elif x == 0.0:
            src, dst = tables["left"]
            boundary[v] = np.array([0.0, np.interp(y, src, dst)])
        else:
            src, dst = tables["right"]
            boundary[v] = np.array([ratio * w, np.interp(y, src, dst)])
    kwargs = {}
    if "roi_scale" in params:
        kwargs["roi_scale"] = float(params["roi_scale"])
    if "roi_offsets" in params:
        kwargs["roi_offsets"] = np.asarray(params["roi_offsets"], float)
    if "line_scales" in params:
        kwargs["line_scales"] = np.asarray(params["line_scales"], float)
    if "line_offsets" in params:
        kwargs["line_offsets"] = np.asarray(params["line_offsets"], float)
    return ConstraintSet(width_factor=ratio, boundary=boundary, **kwargs)


def execute(image, cfg):
    """Run saliency (if asked), the solve, and the resample for one image."""
    notes = []
    masks = list(cfg.roi_masks)
    sal = None
    if cfg.auto:
        sal = compute_saliency(image)
        try:
            masks.extend(threshold_rois(sal, cfg.fraction))
        except NoComponents as e:
            notes.append(f"auto detection found no regions: {e}")
    spec = RetargetSpec(
        width=image.width,
        height=image.height,
        ratio=cfg.ratio,
        edge_length=cfg.edge_length,
        fraction=cfg.fraction,
        mode="auto" if cfg.auto else "manual",
        seed=cfg.seed,
        max_correction_iterations=cfg.max_correction_iterations,
    )
    constraints = None
    if cfg.params is not None:
        mesh = build_mesh(
            spec.width,
            spec.height,
            spec.edge_length,
            roi_masks=masks,
            polylines=cfg.polylines,
            **({} if spec.seed is None else {"seed": spec.seed}),
        )
        classification = classify_vertices(mesh)
        constraints = constraints_from_params(cfg.params, mesh, classification, cfg.ratio)
    result = retarget(spec, roi_masks=masks, polylines=cfg.polylines, constraints=constraints)
    index = build_target_index(result.mesh, result.map)
    output = resample(image, index, result.mesh, result.map)
    return RunOutcome(result=result, output=output, saliency=sal, notes=notes)


def encode_saliency_png(saliency):
    """Grayscale PNG bytes of a saliency map; one encoder for every consumer."""
    arr = np.rint(np.clip(saliency.scores, 0.0, 1.0) * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr, "L").save(buf, format="PNG")
    return buf.getvalue()


def diagnostics_json(outcome):
    """Canonical diagnostics serialization shared by every front end."""
    d = dict(outcome.result.diagnostics)
    d["notes"] = list(outcome.notes)
    d["output_width"] = outcome.output.width
    d["output_height"] = outcome.output.height
    return json.dumps(d, indent=2, sort_keys=True)
