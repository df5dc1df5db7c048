import base64
import io
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from contourrefine.camera import Camera
from contourrefine.mesh import load_obj
from contourrefine.raster import rasterize
from contourrefine.service import create_app
from contourrefine.shape_model import decode, save_template
from contourrefine.sketch_synth import render_occluding


def encode_png(binary_img):
    buf = io.BytesIO()
    Image.fromarray((binary_img * 255).astype(np.uint8), mode="L").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


CAMERA = {
    "azimuth_deg": 30.0,
    "elevation_deg": 18.0,
    "distance": 3.0,
    "focal_px": 115.0,
    "width": 96,
    "height": 96,
}


@pytest.fixture(scope="module")
def service_dirs(tmp_path_factory, blob_template):
    templates = tmp_path_factory.mktemp("templates")
    tdir = templates / "blob"
    tdir.mkdir()
    save_template(blob_template, tdir / "template.obj", tdir / "template.basis")
    data = tmp_path_factory.mktemp("sessions")
    return data, templates


@pytest.fixture()
def client(service_dirs):
    data, templates = service_dirs
    app = create_app(data, templates)
    with TestClient(app) as c:
        yield c


def wait_for_job(client, sid, jid, timeout=60.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        r = client.get(f"/v1/sessions/{sid}/jobs/{jid}")
        assert r.status_code == 200
        body = r.json()
        if body["status"] != "running":
            return body
        time.sleep(0.05)
    raise AssertionError("job did not finish in time")


def make_session(client):
    r = client.post("/v1/sessions", json={"template_id": "blob", "camera": CAMERA})
    assert r.status_code == 201
    return r.json()["session_id"]


def sketch_for(blob_template, theta):
    cam = Camera.from_json_dict(CAMERA)
    return render_occluding(decode(blob_template, np.asarray(theta)), cam)


def test_create_session_and_errors(client):
    sid = make_session(client)
    info = client.get(f"/v1/sessions/{sid}").json()
    assert info["template_id"] == "blob"
    assert info["history_depth"] == 0

    r = client.post("/v1/sessions", json={"template_id": "nope", "camera": CAMERA})
    assert r.status_code == 404
    bad_cam = dict(CAMERA, distance=-1.0)
    r = client.post("/v1/sessions", json={"template_id": "blob", "camera": bad_cam})
    assert r.status_code == 422
    r = client.post("/v1/sessions", json={"template_id": "blob"})
    assert r.status_code == 422


def test_reconstruct_round_trip_and_mesh(client, blob_template):
    sid = make_session(client)
    theta = blob_template.clamp(np.full(blob_template.n_modes, 0.35))
    sketch = sketch_for(blob_template, theta)
    r = client.post(
        f"/v1/sessions/{sid}/reconstruct",
        json={"sketch_png": encode_png(sketch), "objective": "chamfer",
              "steps": 120, "n_starts": 8},
    )
    assert r.status_code == 202
    job = wait_for_job(client, sid, r.json()["job_id"])
    assert job["status"] == "done"
    assert job["result"]["final_loss"] < job["trace_tail"][0]["loss"]

    # mesh endpoint serves the decoded current code
    r = client.get(f"/v1/sessions/{sid}/mesh")
    assert r.status_code == 200
    import tempfile

    with tempfile.NamedTemporaryFile(suffix=".obj", delete=False) as fh:
        fh.write(r.content)
        path = fh.name
    mesh = load_obj(path)
    code = np.array(client.get(f"/v1/sessions/{sid}").json()["code"])
    expected = decode(blob_template, code)
    assert np.allclose(mesh.vertices, expected.vertices, atol=1e-6)


def test_empty_sketch_rejected(client):
    sid = make_session(client)
    blank = np.ones((96, 96), dtype=np.uint8)
    r = client.post(f"/v1/sessions/{sid}/reconstruct", json={"sketch_png": encode_png(blank)})
    assert r.status_code == 422


def test_double_submit_conflicts(client, blob_template):
    sid = make_session(client)
    sketch = sketch_for(blob_template, np.full(blob_template.n_modes, 0.3))
    payload = {"sketch_png": encode_png(sketch), "steps": 300, "n_starts": 16}
    r1 = client.post(f"/v1/sessions/{sid}/reconstruct", json=payload)
    assert r1.status_code == 202
    r2 = client.post(f"/v1/sessions/{sid}/reconstruct", json=payload)
    assert r2.status_code == 409
    wait_for_job(client, sid, r1.json()["job_id"])


def test_cancel_stops_job(client, blob_template):
    sid = make_session(client)
    sketch = sketch_for(blob_template, np.full(blob_template.n_modes, 0.3))
    r = client.post(
        f"/v1/sessions/{sid}/reconstruct",
        json={"sketch_png": encode_png(sketch), "steps": 5000, "n_starts": 2},
    )
    jid = r.json()["job_id"]
    client.post(f"/v1/sessions/{sid}/jobs/{jid}/cancel")
    job = wait_for_job(client, sid, jid)
    assert job["status"] == "cancelled"


def test_edit_and_undo(client, blob_template):
    sid = make_session(client)
    theta = blob_template.clamp(np.full(blob_template.n_modes, 0.3))
    sketch = sketch_for(blob_template, theta)
    r = client.post(
        f"/v1/sessions/{sid}/reconstruct",
        json={"sketch_png": encode_png(sketch), "steps": 80, "n_starts": 4},
    )
    wait_for_job(client, sid, r.json()["job_id"])
    code_after_rec = np.array(client.get(f"/v1/sessions/{sid}").json()["code"])

    # stroke tracing the current contour: the edit must be a no-op
    cam = Camera.from_json_dict(CAMERA)
    from contourrefine.contour import external_contour_of_mask
    from contourrefine.images import stroke_pixels

    buf = rasterize(decode(blob_template, code_after_rec), cam)
    cont = external_contour_of_mask(buf.mask)
    pix = stroke_pixels(cont)[:60]
    stroke = np.ones_like(cont)
    stroke[pix[:, 0], pix[:, 1]] = 0
    r = client.post(
        f"/v1/sessions/{sid}/edit",
        json={"stroke_png": encode_png(stroke), "steps": 60},
    )
    assert r.status_code == 202
    job = wait_for_job(client, sid, r.json()["job_id"])
    assert job["status"] == "done"
    assert "locality" in job["result"]
    code_after_edit = np.array(client.get(f"/v1/sessions/{sid}").json()["code"])
    assert np.abs(code_after_edit - code_after_rec).max() < 1e-4

    # undo restores the pre-edit code exactly
    r = client.post(f"/v1/sessions/{sid}/undo")
    assert r.status_code == 200
    assert np.array_equal(np.array(r.json()["code"]), code_after_rec)


def test_render_endpoint_deterministic(client):
    sid = make_session(client)
    a = client.get(f"/v1/sessions/{sid}/render", params={"az": 40, "el": 10, "kind": "normal"})
    b = client.get(f"/v1/sessions/{sid}/render", params={"az": 40, "el": 10, "kind": "normal"})
    assert a.status_code == 200
    assert a.content == b.content
    mask = client.get(f"/v1/sessions/{sid}/render", params={"kind": "mask"})
    assert mask.status_code == 200
    bad = client.get(f"/v1/sessions/{sid}/render", params={"kind": "albedo"})
    assert bad.status_code == 422


def test_unknown_session_404(client):
    assert client.get("/v1/sessions/doesnotexist").status_code == 404
    assert client.get("/v1/sessions/doesnotexist/mesh").status_code == 404


def test_restart_reloads_sessions(service_dirs, blob_template):
    data, templates = service_dirs
    app = create_app(data, templates)
    with TestClient(app) as c:
        sid = make_session(c)
        code = np.array(c.get(f"/v1/sessions/{sid}").json()["code"])
    app2 = create_app(data, templates)
    with TestClient(app2) as c2:
        info = c2.get(f"/v1/sessions/{sid}")
        assert info.status_code == 200
        assert np.array_equal(np.array(info.json()["code"]), code)
        assert info.json()["template_id"] == "blob"
