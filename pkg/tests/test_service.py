import io
import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from conformal_retarget.cli import main
from conformal_retarget.pipeline import encode_saliency_png
from conformal_retarget.raster import Raster, load_raster, save_raster
from conformal_retarget.saliency import compute_saliency
from conformal_retarget.service import JobRecord, JobStore, create_app


@pytest.fixture
def client(tmp_path):
    app = create_app(workers=2, spill_dir=tmp_path / "jobs", frontend_dir=tmp_path / "no-ui")
    with TestClient(app) as c:
        yield c


@pytest.fixture
def photo_bytes(tmp_path, rng):
    img = rng.random((64, 64, 3)) * 0.3
    img[24:40, 24:40] = rng.random((16, 16, 3)) * 0.5 + 0.5
    path = tmp_path / "img.png"
    save_raster(Raster(img), path)
    return path.read_bytes()


def wait_done(client, job_id, timeout=60.0):
    t0 = time.time()
    while time.time() - t0 < timeout:
        body = client.get(f"/api/jobs/{job_id}").json()
        if body["status"] in ("done", "failed"):
            return body
        time.sleep(0.05)
    raise TimeoutError(f"job {job_id} did not finish")


def submit(client, image_bytes, spec, **extra):
    files = [("image", ("img.png", image_bytes, "image/png"))]
    for m in extra.pop("masks", []):
        files.append(("masks", ("mask.png", m, "image/png")))
    data = {"spec": json.dumps(spec), **extra}
    return client.post("/api/jobs", files=files, data=data)


def test_job_lifecycle(client, photo_bytes):
    r = submit(client, photo_bytes, {"ratio": 0.75, "mode": "auto"})
    assert r.status_code == 202
    job_id = r.json()["job_id"]
    assert r.json()["status"] == "queued"
    body = wait_done(client, job_id)
    assert body["status"] == "done"
    d = body["diagnostics"]
    assert d["conformal_energy"] >= 0
    assert "correction_iterations" in d and "flipped_initial" in d
    out = client.get(body["output_url"])
    assert out.status_code == 200
    assert out.headers["content-type"] == "image/png"
    img = load_raster(io.BytesIO(out.content))
    assert img.width == 48  # round(0.75 * 64)
    den = client.get(body["density_url"])
    assert den.status_code == 200
    assert load_raster(io.BytesIO(den.content)).width == 48
    mesh = body["mesh"]
    n = len(mesh["source_positions"])
    assert len(mesh["positions"]) == n == len(mesh["roles"])
    assert d["n_vertices"] == n and d["n_triangles"] == len(mesh["triangles"])
    xs = [p[0] for p in mesh["positions"]]
    assert max(xs) == pytest.approx(0.75 * 64)


def test_unknown_job_and_pending_artifacts(client, photo_bytes):
    assert client.get("/api/jobs/doesnotexist").status_code == 404
    assert client.get("/api/jobs/doesnotexist/output.png").status_code == 404


def test_bad_spec_rejected(client, photo_bytes):
    r = submit(client, photo_bytes, {"mode": "auto"})  # no ratio
    assert r.status_code == 400
    r = client.post(
        "/api/jobs",
        files=[("image", ("img.png", b"not a png", "image/png"))],
        data={"spec": json.dumps({"ratio": 0.8})},
    )
    assert r.status_code == 400


def test_failed_job_reports_error(client, photo_bytes, tmp_path, rng):
    save_raster(Raster(rng.random((10, 10, 1))), tmp_path / "m.png")
    r = submit(
        client,
        photo_bytes,
        {"ratio": 0.8},
        masks=[(tmp_path / "m.png").read_bytes()],
    )
    assert r.status_code == 400  # size mismatch caught at submission


def test_saliency_endpoint_matches_library(client, photo_bytes):
    r = client.post("/api/saliency", files=[("image", ("img.png", photo_bytes, "image/png"))])
    assert r.status_code == 200
    want = encode_saliency_png(compute_saliency(load_raster(io.BytesIO(photo_bytes))))
    assert r.content == want


def test_cli_and_service_artifacts_identical(client, photo_bytes, tmp_path):
    src = tmp_path / "same.png"
    src.write_bytes(photo_bytes)
    out = tmp_path / "cli_out.png"
    dens = tmp_path / "cli_density.png"
    assert main([str(src), "--ratio", "0.8", "-o", str(out), "--dump-density", str(dens)]) == 0

    r = submit(client, photo_bytes, {"ratio": 0.8})
    body = wait_done(client, r.json()["job_id"])
    assert body["status"] == "done"
    assert client.get(body["output_url"]).content == out.read_bytes()
    assert client.get(body["density_url"]).content == dens.read_bytes()


def test_fallback_index_page(client):
    r = client.get("/")
    assert r.status_code == 200
    assert "retarget service" in r.text


def test_job_store_transitions():
    store = JobStore()
    store.put(JobRecord(job_id="j", input_hash="h", spec={"ratio": 1.0}))
    store.transition("j", "running")
    rec = store.transition("j", "done", diagnostics={"ok": 1})
    assert rec.status == "done"
    with pytest.raises(RuntimeError):
        store.transition("j", "running")
