"""Command-line front end.

Two entry shapes share one executable: ``retarget IMAGE --ratio R ...`` runs
a single resize, and ``retarget serve ...`` starts the HTTP service that
backs the browser editor.

Exit codes: 0 success, 2 bad input or violated constraints, 3 solver-side
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (
    ConstraintViolation,
    DegenerateInput,
    InvalidDimension,
    MissingParameter,
    OutOfDomain,
    OverlapViolation,
    RetargetError,
    SizeMismatch,
)
from .pipeline import (
    RunConfig,
    diagnostics_json,
    encode_saliency_png,
    execute,
    mask_from_raster,
    parse_params,
    parse_polylines,
)
from .raster import load_raster, save_raster

EXIT_OK = 0
EXIT_CONSTRAINT = 2
EXIT_SOLVER = 3

_INPUT_ERRORS = (
    InvalidDimension,
    DegenerateInput,
    OverlapViolation,
    OutOfDomain,
    MissingParameter,
    ConstraintViolation,
    SizeMismatch,
    ValueError,
    OSError,
    KeyError,
)


def _run_parser():
    p = argparse.ArgumentParser(
        prog="retarget",
        description="Resize an image to a new aspect ratio while keeping "
        "marked regions rigid and angles as undistorted as possible.",
    )
    p.add_argument("input", help="source image (PNG or PPM)")
    p.add_argument("--ratio", type=float, required=True, help="target width / source width")
    p.add_argument("-o", "--output", help="output image path (default: <input>_retargeted.png)")
    p.add_argument("--auto", action="store_true", help="detect regions of interest from saliency")
    p.add_argument("--fraction", type=float, default=0.25, help="saliency fraction for --auto")
    p.add_argument("--roi-mask", action="append", default=[], metavar="PATH",
                   help="binary region mask image; repeatable")
    p.add_argument("--lines", metavar="PATH", help="JSON polyline document")
    p.add_argument("--params", metavar="PATH", help="JSON manual constraint parameters")
    p.add_argument("--edge-length", type=float, help="target mesh edge length in pixels")
    p.add_argument("--seed", type=int, help="mesh jitter seed (default: fixed constant)")
    p.add_argument("--max-correction-iterations", type=int, help="cap on orientation repair rounds")
    p.add_argument("--dump-mesh", metavar="PATH", help="write the classified mesh as text")
    p.add_argument("--dump-density", metavar="PATH", help="write the per-pixel energy density image")
    p.add_argument("--dump-saliency", metavar="PATH", help="write the saliency map image")
    p.add_argument("--diagnostics", metavar="PATH", help="write run diagnostics as JSON")
    p.add_argument("--report", metavar="DIR", help="write figures and a per-triangle table here")
    return p


def _serve_parser():
    p = argparse.ArgumentParser(prog="retarget serve", description="Run the editor service.")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--workers", type=int, default=2, help="retarget worker threads")
    p.add_argument("--frontend", metavar="DIR", help="static UI bundle to serve at /")
    return p


def _run(args):
    image = load_raster(args.input)
    masks = [mask_from_raster(load_raster(p), image.width, image.height) for p in args.roi_mask]
    polylines = parse_polylines(Path(args.lines).read_text()) if args.lines else []
    params = parse_params(Path(args.params).read_text()) if args.params else None
    cfg = RunConfig(
        ratio=args.ratio,
        auto=args.auto,
        fraction=args.fraction,
        edge_length=args.edge_length,
        seed=args.seed,
        roi_masks=masks,
        polylines=polylines,
        params=params,
        max_correction_iterations=args.max_correction_iterations,
    )
    outcome = execute(image, cfg)
    result = outcome.result

    out = Path(args.output) if args.output else Path(args.input).with_name(
        Path(args.input).stem + "_retargeted.png"
    )
    save_raster(outcome.output, out)

    if args.dump_mesh:
        from .mesh import dump_mesh

        with open(args.dump_mesh, "w") as fp:
            dump_mesh(result.mesh, result.classification, fp)
    if args.dump_density:
        from .report import density_raster

        save_raster(density_raster(result.mesh, result.coeffs, result.map), args.dump_density)
    if args.dump_saliency:
        sal = outcome.saliency
        if sal is None:
            from .saliency import compute_saliency

            sal = compute_saliency(image)
        Path(args.dump_saliency).write_bytes(encode_saliency_png(sal))
    if args.diagnostics:
        Path(args.diagnostics).write_text(diagnostics_json(outcome) + "\n")
    if args.report:
        from .report import write_report

        write_report(args.report, result)

    for note in outcome.notes:
        print(f"note: {note}", file=sys.stderr)
    d = result.diagnostics
    print(
        f"wrote {out} ({image.width}x{image.height} -> "
        f"{outcome.output.width}x{outcome.output.height}), "
        f"energy {d['conformal_energy']:.6g}, "
        f"corrections {d['correction_iterations']}"
    )
    return EXIT_OK


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "serve":
        args = _serve_parser().parse_args(argv[1:])
        from .service import serve

        serve(host=args.host, port=args.port, workers=args.workers, frontend_dir=args.frontend)
        return EXIT_OK
    args = _run_parser().parse_args(argv)
    try:
        return _run(args)
    except _INPUT_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except RetargetError as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
