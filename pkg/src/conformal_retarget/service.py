"""HTTP service hosting the retarget pipeline and the browser editor.

Jobs run on a bounded thread pool; the store lives in memory with artifacts
spilled to a per-job directory. Identical inputs produce artifacts
byte-identical to the command line because both ride the same pipeline.
"""

from __future__ import annotations

import hashlib
import io
import json
import socket
import tempfile
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, File, Form, UploadFile
from fastapi.responses import HTMLResponse, JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from .errors import BindFailure, RetargetError
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
from .report import density_raster
from .saliency import compute_saliency

__all__ = ["create_app", "serve", "JobRecord"]

_FALLBACK_PAGE = """<!doctype html>
<html><head><title>retarget service</title></head>
<body><h1>retarget service</h1>
<p>The editor bundle is not installed. The JSON API lives under /api.</p>
</body></html>
"""


@dataclass
class JobRecord:
    job_id: str
    input_hash: str
    spec: dict
    status: str = "queued"
    diagnostics: dict | None = None
    error: str | None = None
    artifacts: dict = field(default_factory=dict)
    mesh: dict | None = None


class JobStore:
    """In-memory job table with serialized mutation."""

    def __init__(self):
        self._lock = threading.Lock()
        self._jobs = {}

    def put(self, record):
        with self._lock:
            self._jobs[record.job_id] = record

    def get(self, job_id):
        with self._lock:
            return self._jobs.get(job_id)

    def transition(self, job_id, status, **updates):
        order = {"queued": 0, "running": 1, "done": 2, "failed": 2}
        with self._lock:
            rec = self._jobs[job_id]
            if order[status] < order[rec.status]:
                raise RuntimeError(f"illegal transition {rec.status} -> {status}")
            rec.status = status
            for k, v in updates.items():
                setattr(rec, k, v)
            return rec


def _load_upload(data):
    return load_raster(io.BytesIO(data))


def _job_config(spec, image, mask_bytes, lines_text, params_text):
    masks = [
        mask_from_raster(_load_upload(b), image.width, image.height) for b in mask_bytes
    ]
    polylines = parse_polylines(lines_text) if lines_text else []
    params = parse_params(params_text) if params_text else None
    return RunConfig(
        ratio=float(spec["ratio"]),
        auto=spec.get("mode", "manual") == "auto",
        fraction=float(spec.get("fraction", 0.25)),
        edge_length=spec.get("edge_length"),
        seed=spec.get("seed"),
        roi_masks=masks,
        polylines=polylines,
        params=params,
        max_correction_iterations=spec.get("max_correction_iterations"),
    )


def create_app(workers=2, spill_dir=None, frontend_dir=None):
    """Assemble the FastAPI application with its worker pool and job store."""
    app = FastAPI(title="retarget service")
    store = JobStore()
    pool = ThreadPoolExecutor(max_workers=max(1, int(workers)))
    base = Path(spill_dir) if spill_dir else Path(tempfile.mkdtemp(prefix="retarget-jobs-"))
    base.mkdir(parents=True, exist_ok=True)

    def run_job(job_id, image, cfg):
        store.transition(job_id, "running")
        jobdir = base / job_id
        jobdir.mkdir(parents=True, exist_ok=True)
        try:
            outcome = execute(image, cfg)
            out_path = jobdir / "output.png"
            den_path = jobdir / "density.png"
            save_raster(outcome.output, out_path)
            save_raster(
                density_raster(outcome.result.mesh, outcome.result.coeffs, outcome.result.map),
                den_path,
            )
            diag = json.loads(diagnostics_json(outcome))
            res = outcome.result
            mesh_doc = {
                "source_positions": res.mesh.points.tolist(),
                "positions": res.map.positions.tolist(),
                "triangles": res.mesh.triangles.tolist(),
                "roles": res.classification.kinds.tolist(),
            }
            store.transition(
                job_id,
                "done",
                diagnostics=diag,
                artifacts={"output": str(out_path), "density": str(den_path)},
                mesh=mesh_doc,
            )
        except (RetargetError, ValueError, KeyError, OSError) as e:
            store.transition(job_id, "failed", error=f"{type(e).__name__}: {e}")

    @app.post("/api/jobs", status_code=202)
    async def submit_job(
        image: UploadFile = File(...),
        spec: str = Form(...),
        masks: list[UploadFile] = File(default=[]),
        lines: str | None = Form(default=None),
        params: str | None = Form(default=None),
    ):
        try:
            spec_doc = json.loads(spec)
            if not isinstance(spec_doc, dict) or "ratio" not in spec_doc:
                raise ValueError("spec must be a JSON object with a ratio field")
            data = await image.read()
            mask_bytes = [await m.read() for m in masks]
            raster = _load_upload(data)
            cfg = _job_config(spec_doc, raster, mask_bytes, lines, params)
        except (ValueError, KeyError, OSError, RetargetError) as e:
            return JSONResponse({"error": f"{type(e).__name__}: {e}"}, status_code=400)
        job_id = uuid.uuid4().hex
        record = JobRecord(
            job_id=job_id,
            input_hash=hashlib.sha256(data).hexdigest(),
            spec=spec_doc,
        )
        store.put(record)
        pool.submit(run_job, job_id, raster, cfg)
        return {"job_id": job_id, "status": "queued"}

    def _job_or_404(job_id):
        rec = store.get(job_id)
        if rec is None:
            return None, JSONResponse({"error": "unknown job"}, status_code=404)
        return rec, None

    @app.get("/api/jobs/{job_id}")
    async def job_status(job_id: str):
        rec, err = _job_or_404(job_id)
        if err:
            return err
        body = {
            "job_id": rec.job_id,
            "status": rec.status,
            "input_hash": rec.input_hash,
            "spec": rec.spec,
        }
        if rec.diagnostics is not None:
            body["diagnostics"] = rec.diagnostics
        if rec.error is not None:
            body["error"] = rec.error
        if rec.status == "done":
            body["output_url"] = f"/api/jobs/{rec.job_id}/output.png"
            body["density_url"] = f"/api/jobs/{rec.job_id}/density.png"
            body["mesh"] = rec.mesh
        return body

    def _artifact(job_id, name):
        rec, err = _job_or_404(job_id)
        if err:
            return err
        if rec.status != "done":
            return JSONResponse({"error": f"job is {rec.status}"}, status_code=404)
        return Response(Path(rec.artifacts[name]).read_bytes(), media_type="image/png")

    @app.get("/api/jobs/{job_id}/output.png")
    async def job_output(job_id: str):
        return _artifact(job_id, "output")

    @app.get("/api/jobs/{job_id}/density.png")
    async def job_density(job_id: str):
        return _artifact(job_id, "density")

    @app.post("/api/saliency")
    async def saliency_preview(image: UploadFile = File(...)):
        try:
            raster = _load_upload(await image.read())
        except (ValueError, OSError, RetargetError) as e:
            return JSONResponse({"error": f"{type(e).__name__}: {e}"}, status_code=400)
        return Response(encode_saliency_png(compute_saliency(raster)), media_type="image/png")

    ui = Path(frontend_dir) if frontend_dir else Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if ui.is_dir():
        app.mount("/", StaticFiles(directory=ui, html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        async def index():
            return _FALLBACK_PAGE

    return app


def serve(host="127.0.0.1", port=8000, workers=2, frontend_dir=None):
    """Run the service until interrupted.

    :raises BindFailure: the address is already taken or not bindable
    """
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as e:
        raise BindFailure(f"cannot bind {host}:{port}: {e}") from None
    finally:
        probe.close()

    import uvicorn

    app = create_app(workers=workers, frontend_dir=frontend_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
