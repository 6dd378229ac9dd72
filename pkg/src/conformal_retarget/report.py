"""Diagnostic artifacts: density rasters, figures, and per-triangle tables.

Everything here renders from a solved map. Figures use the Agg backend so
the report path works headless; the delimited table sits alongside them for
spreadsheet-friendly inspection.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib import tri as mtri

from .energy import energy_density
from .geometry import bary_coords
from .raster import Raster
from .warp import build_target_index

__all__ = [
    "pixel_triangles",
    "density_raster",
    "write_density_figure",
    "write_mesh_figure",
    "write_triangle_table",
    "write_report",
]

_INSIDE_SLACK = 1e-9


def pixel_triangles(index):
    """Containing triangle id for every output pixel center, (h, w) int array."""
    wa, b = index.frame
    out_w = int(np.floor(wa + 0.5))
    out_h = int(np.floor(b + 0.5))
    owner = np.full((out_h, out_w), -1, int)
    for t in range(index.n_triangles):
        p = index.positions[index.triangles[t]]
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
        take = (bary.min(axis=1) >= -_INSIDE_SLACK) & (owner[rr, ccs] < 0)
        owner[rr[take], ccs[take]] = t
    for r, c in np.argwhere(owner < 0):
        t, _ = index.locate([c + 0.5, r + 0.5])
        owner[r, c] = t
    return owner


def density_raster(mesh, coeffs, mapping, colormap="viridis"):
    """Per-pixel energy-density image over the target rectangle.

    Each pixel takes its containing triangle's conformal density, normalized
    linearly so the peak maps to 1, then colormapped to an RGB raster. Pass
    ``colormap=None`` for single-channel output.
    """
    index = build_target_index(mesh, mapping)
    dens = energy_density(mesh, coeffs, mapping.positions if hasattr(mapping, "positions") else mapping)
    owner = pixel_triangles(index)
    values = dens[owner]
    top = values.max()
    if top > 0:
        values = values / top
    if colormap is None:
        return Raster(values[:, :, None])
    cmap = plt.get_cmap(colormap)
    rgb = cmap(values)[:, :, :3]
    return Raster(rgb)


def _image_axes(ax, width, height):
    ax.set_aspect("equal")
    ax.set_xlim(0, width)
    ax.set_ylim(height, 0)  # image convention, origin at the top


def write_density_figure(path, mesh, coeffs, mapping, dpi=110):
    """Colormapped per-triangle density over the target mesh, with colorbar."""
    pos = mapping.positions if hasattr(mapping, "positions") else np.asarray(mapping, float)
    dens = energy_density(mesh, coeffs, pos)
    triang = mtri.Triangulation(pos[:, 0], pos[:, 1], mesh.triangles)
    fig, ax = plt.subplots(figsize=(7, 7 * mesh.height / max(mesh.width, 1)))
    coll = ax.tripcolor(triang, facecolors=dens, cmap="viridis")
    _image_axes(ax, pos[:, 0].max(), mesh.height)
    ax.set_title("conformal energy density")
    fig.colorbar(coll, ax=ax, shrink=0.85)
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return Path(path)


def write_mesh_figure(path, mesh, mapping, classification=None, dpi=110):
    """Source and target wireframes side by side, constrained vertices marked."""
    pos = mapping.positions if hasattr(mapping, "positions") else np.asarray(mapping, float)
    fig, axes = plt.subplots(1, 2, figsize=(12, 6))
    for ax, pts, label in ((axes[0], mesh.points, "source"), (axes[1], pos, "target")):
        triang = mtri.Triangulation(pts[:, 0], pts[:, 1], mesh.triangles)
        ax.triplot(triang, lw=0.5, color="0.4")
        if classification is not None:
            from .mesh import Role

            kinds = classification.kinds
            marked = False
            for role, color, name in (
                (Role.ROI, "tab:red", "roi"),
                (Role.LINE, "tab:blue", "line"),
            ):
                sel = kinds == role
                if sel.any():
                    ax.plot(pts[sel, 0], pts[sel, 1], ".", ms=3, color=color, label=name)
                    marked = True
            if marked:
                ax.legend(loc="upper right", fontsize=8)
        _image_axes(ax, pts[:, 0].max(), mesh.height)
        ax.set_title(label)
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return Path(path)


def write_triangle_table(path, mesh, coeffs, mapping):
    """Delimited per-triangle record: areas, density, energy contribution."""
    pos = mapping.positions if hasattr(mapping, "positions") else np.asarray(mapping, float)
    dens = energy_density(mesh, coeffs, pos)
    src_area = mesh.areas()
    p = pos[mesh.triangles]
    tgt_area = 0.5 * (
        (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
        - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
    )
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(["triangle", "source_area", "target_area", "density", "energy"])
        for t in range(mesh.n_triangles):
            writer.writerow(
                [
                    t,
                    f"{src_area[t]:.9g}",
                    f"{tgt_area[t]:.9g}",
                    f"{dens[t]:.9g}",
                    f"{dens[t] * src_area[t]:.9g}",
                ]
            )
    return Path(path)


def write_report(outdir, result):
    """Render the standard report bundle for a solved retarget into outdir."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "density_figure": write_density_figure(
            outdir / "density.png", result.mesh, result.coeffs, result.map
        ),
        "mesh_figure": write_mesh_figure(
            outdir / "mesh.png", result.mesh, result.map, result.classification
        ),
        "triangle_table": write_triangle_table(
            outdir / "triangles.csv", result.mesh, result.coeffs, result.map
        ),
    }
    return paths
