import json

import numpy as np
import pytest

from conformal_retarget.cli import main
from conformal_retarget.mesh import build_mesh, classify_vertices, load_mesh
from conformal_retarget.pipeline import (
    constraints_from_params,
    encode_saliency_png,
    parse_polylines,
)
from conformal_retarget.raster import Raster, load_raster, quantize, save_raster
from conformal_retarget.saliency import compute_saliency


@pytest.fixture
def photo(tmp_path, rng):
    """A small test image with a textured square worth keeping."""
    img = rng.random((80, 80, 3)) * 0.3
    img[30:50, 30:50] = rng.random((20, 20, 3)) * 0.5 + 0.5
    path = tmp_path / "in.png"
    save_raster(Raster(img), path)
    return path


def test_identity_run(photo, tmp_path):
    out = tmp_path / "out.png"
    code = main([str(photo), "--ratio", "1.0", "-o", str(out)])
    assert code == 0
    a = load_raster(photo).samples
    b = load_raster(out).samples
    assert b.shape == a.shape
    assert np.abs(a - b).max() <= 1 / 255


def test_auto_run_with_dumps(photo, tmp_path):
    out = tmp_path / "out.png"
    diag = tmp_path / "diag.json"
    meshp = tmp_path / "mesh.txt"
    densp = tmp_path / "density.png"
    salp = tmp_path / "sal.png"
    code = main(
        [
            str(photo), "--ratio", "0.75", "--auto", "-o", str(out),
            "--diagnostics", str(diag), "--dump-mesh", str(meshp),
            "--dump-density", str(densp), "--dump-saliency", str(salp),
        ]
    )
    assert code == 0
    assert load_raster(out).width == 60  # round(0.75 * 80)
    d = json.loads(diag.read_text())
    for key in ("conformal_energy", "flipped_initial", "correction_iterations", "seed"):
        assert key in d
    assert d["conformal_energy"] >= 0
    with open(meshp) as fp:
        mesh, classification = load_mesh(fp)
    assert mesh.n_vertices == d["n_vertices"]
    assert load_raster(densp).width == 60
    assert salp.read_bytes() == encode_saliency_png(compute_saliency(load_raster(photo)))


def test_manual_mask_and_default_output(photo, tmp_path, rng):
    mask = np.zeros((80, 80), bool)
    mask[30:50, 30:50] = True
    mpath = tmp_path / "mask.png"
    save_raster(Raster(mask.astype(float)[:, :, None]), mpath)
    code = main([str(photo), "--ratio", "0.8", "--roi-mask", str(mpath)])
    assert code == 0
    default_out = photo.with_name("in_retargeted.png")
    assert default_out.exists()
    assert load_raster(default_out).width == 64


def test_report_bundle_written(photo, tmp_path):
    rep = tmp_path / "rep"
    code = main([str(photo), "--ratio", "0.9", "-o", str(tmp_path / "o.png"), "--report", str(rep)])
    assert code == 0
    for name in ("density.png", "mesh.png", "triangles.csv"):
        assert (rep / name).stat().st_size > 0


def test_missing_input_is_constraint_exit(tmp_path, capsys):
    code = main([str(tmp_path / "nope.png"), "--ratio", "0.75"])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_wrong_mask_size_is_constraint_exit(photo, tmp_path, rng):
    bad = tmp_path / "bad.png"
    save_raster(Raster(rng.random((10, 10, 1))), bad)
    code = main([str(photo), "--ratio", "0.75", "--roi-mask", str(bad)])
    assert code == 2


def test_incomplete_params_is_constraint_exit(photo, tmp_path):
    mask = np.zeros((80, 80), bool)
    mask[30:50, 30:50] = True
    mpath = tmp_path / "mask.png"
    save_raster(Raster(mask.astype(float)[:, :, None]), mpath)
    ppath = tmp_path / "params.json"
    ppath.write_text(json.dumps({"roi_scale": 0.9}))  # offsets missing
    code = main(
        [str(photo), "--ratio", "0.75", "--roi-mask", str(mpath), "--params", str(ppath),
         "-o", str(tmp_path / "o.png")]
    )
    assert code == 2


def test_unrecoverable_fold_is_solver_exit(tmp_path, rng):
    img = tmp_path / "wide.png"
    save_raster(Raster(rng.random((100, 100, 3))), img)
    mask = np.zeros((100, 100), bool)
    mask[25:75, 20:80] = True
    mpath = tmp_path / "mask.png"
    save_raster(Raster(mask.astype(float)[:, :, None]), mpath)
    ppath = tmp_path / "params.json"
    ppath.write_text(json.dumps({"roi_scale": 1.0, "roi_offsets": [[-40.0, 0.0]]}))
    code = main(
        [str(img), "--ratio", "0.2", "--roi-mask", str(mpath), "--params", str(ppath),
         "--edge-length", "12", "--max-correction-iterations", "0",
         "-o", str(tmp_path / "o.png")]
    )
    assert code == 3


def test_polyline_document_parsing():
    text = json.dumps([{"points": [[1.0, 2.0], [3.0, 4.0], [5.0, 4.5]], "scale_hint": 1.0}])
    lines = parse_polylines(text)
    assert len(lines) == 1
    assert lines[0].shape == (3, 2)
    with pytest.raises(ValueError):
        parse_polylines(json.dumps([{"points": [[1.0, 2.0]]}]))
    with pytest.raises(ValueError):
        parse_polylines(json.dumps({"points": []}))


def test_boundary_breakpoints_interpolated():
    m = build_mesh(100, 60, 10)
    cl = classify_vertices(m)
    params = {"boundary": {"bottom": [[0.0, 0.0], [50.0, 30.0], [100.0, 75.0]]}}
    cs = constraints_from_params(params, m, cl, 0.75)
    for v, target in cs.boundary.items():
        x, y = m.points[v]
        if y == 0.0:
            want = np.interp(x, [0.0, 50.0, 100.0], [0.0, 30.0, 75.0])
            assert abs(target[0] - want) < 1e-12 and target[1] == 0.0
        elif y == 60.0:
            assert abs(target[0] - 0.75 * x) < 1e-12  # default uniform side


def test_seed_recorded_and_deterministic(photo, tmp_path):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    da, db = tmp_path / "a.json", tmp_path / "b.json"
    assert main([str(photo), "--ratio", "0.7", "--seed", "11", "-o", str(a), "--diagnostics", str(da)]) == 0
    assert main([str(photo), "--ratio", "0.7", "--seed", "11", "-o", str(b), "--diagnostics", str(db)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert da.read_text() == db.read_text()
    assert json.loads(da.read_text())["seed"] == 11
