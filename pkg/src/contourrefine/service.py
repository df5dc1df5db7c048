"""HTTP session service for interactive reconstruction and editing.

Sessions hold a template reference, a camera and the current latent code,
persisted as one directory per session (code files plus a JSON meta file),
so a restarted service reloads every session unchanged. Refinements run as
asynchronous jobs on a small worker pool; each session admits at most one
running job, and the session code is replaced atomically when a job
finishes. All endpoints live under ``/v1``.
"""

from __future__ import annotations

import base64
import io
import json
import threading
import uuid
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field

from .camera import Camera
from .contour import external_contour_of_mask, filter_sketch_external, sketch_to_mask
from .images import pixel_centers, stroke_pixels
from .raster import rasterize
from .refine import RefinementConfig, optimize
from .shape_model import decode, initialize_code, load_code, load_template, save_code


class CameraModel(BaseModel):
    azimuth_deg: float
    elevation_deg: float
    distance: float = Field(gt=0)
    focal_px: float = Field(gt=0)
    width: int = Field(default=256, gt=0)
    height: int = Field(default=256, gt=0)

    def to_camera(self) -> Camera:
        return Camera.from_json_dict(self.model_dump())


class SessionRequest(BaseModel):
    template_id: str
    camera: CameraModel


class ReconstructRequest(BaseModel):
    sketch_png: str  # base64 PNG
    objective: str = "chamfer"
    steps: int = 400
    step_size: float = 5e-3
    n_starts: int = 16
    seed: int = 0


class EditRequest(BaseModel):
    stroke_png: str  # base64 PNG
    camera: CameraModel | None = None  # camera active when the stroke was drawn
    t: float = 12.0
    lambda_mask: float = 1.0
    lambda_normal: float = 1.0
    steps: int = 400
    step_size: float = 5e-3


def _decode_image(data_b64: str) -> np.ndarray:
    from PIL import Image

    try:
        raw = base64.b64decode(data_b64)
        img = Image.open(io.BytesIO(raw)).convert("L")
    except Exception:
        raise HTTPException(422, detail="sketch: not a decodable image")
    return (np.asarray(img) >= 128).astype(np.uint8)


class Job:
    def __init__(self):
        self.id = uuid.uuid4().hex[:12]
        self.status = "running"
        self.step = 0
        self.loss = None
        self.trace_tail = []
        self.result = None
        self.error = None
        self.cancel_event = threading.Event()

    def as_dict(self):
        return {
            "job_id": self.id,
            "status": self.status,
            "step": self.step,
            "loss": self.loss,
            "trace_tail": self.trace_tail[-50:],
            "result": self.result,
            "error": self.error,
        }


class Session:
    def __init__(self, session_id: str, template_id: str, camera: Camera, directory: Path):
        self.id = session_id
        self.template_id = template_id
        self.camera = camera
        self.directory = directory
        self.code: np.ndarray | None = None  # None until a template decodes it
        self.history: list[str] = []  # code file names, append-only
        self.lock = threading.Lock()
        self.job: Job | None = None

    def persist(self) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        save_code(self.code, self.directory / "current.code")
        meta = {
            "session_id": self.id,
            "template_id": self.template_id,
            "camera": self.camera.to_json_dict(),
            "history": self.history,
        }
        tmp = self.directory / "meta.json.tmp"
        tmp.write_text(json.dumps(meta, indent=2), encoding="utf-8")
        tmp.replace(self.directory / "meta.json")

    def push_history(self) -> None:
        name = f"history{len(self.history):04d}.code"
        save_code(self.code, self.directory / name)
        self.history.append(name)


class ServiceState:
    def __init__(self, data_dir: Path, templates_dir: Path):
        self.data_dir = Path(data_dir)
        self.templates_dir = Path(templates_dir)
        self.templates = {}
        for obj_path in sorted(self.templates_dir.glob("**/template.obj")):
            basis_path = obj_path.with_suffix(".basis")
            if basis_path.exists():
                self.templates[obj_path.parent.name] = load_template(obj_path, basis_path)
        self.sessions: dict[str, Session] = {}
        self.jobs: dict[str, Job] = {}
        from .cli import thread_count

        from concurrent.futures import ThreadPoolExecutor

        self.pool = ThreadPoolExecutor(max_workers=thread_count())
        self._reload_sessions()

    def _reload_sessions(self) -> None:
        if not self.data_dir.exists():
            return
        for meta_path in sorted(self.data_dir.glob("*/meta.json")):
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            if meta["template_id"] not in self.templates:
                continue
            session = Session(
                meta["session_id"],
                meta["template_id"],
                Camera.from_json_dict(meta["camera"]),
                meta_path.parent,
            )
            session.code = load_code(meta_path.parent / "current.code")
            session.history = list(meta.get("history", []))
            self.sessions[session.id] = session

    def session(self, session_id: str) -> Session:
        s = self.sessions.get(session_id)
        if s is None:
            raise HTTPException(404, detail="unknown session")
        return s

    def template(self, template_id: str):
        t = self.templates.get(template_id)
        if t is None:
            raise HTTPException(404, detail="unknown template")
        return t


def _edit_locality_metrics(template, camera, stroke, code_before, code_after, t):
    """Far-region normal change and stroke-region Chamfer drop for a
    finished edit, reported back to the UI."""
    from scipy import ndimage

    from .chamfer2d import nearest_distances

    before = rasterize(decode(template, code_before), camera)
    after = rasterize(decode(template, code_after), camera)
    dist = ndimage.distance_transform_edt(stroke)
    far = dist >= t
    dn = np.linalg.norm(after.normals - before.normals, axis=2)
    far_change = float(dn[far].mean()) if far.any() else 0.0

    stroke_uv = pixel_centers(stroke_pixels(stroke))

    def stroke_cd(buffers):
        cont = external_contour_of_mask(buffers.mask)
        cpx = pixel_centers(stroke_pixels(cont))
        if len(cpx) == 0:
            return float("inf")
        return float((nearest_distances(stroke_uv, cpx) ** 2).mean())

    cd_before = stroke_cd(before)
    cd_after = stroke_cd(after)
    return {
        "far_region_normal_change": far_change,
        "stroke_chamfer_before": cd_before,
        "stroke_chamfer_after": cd_after,
    }


def create_app(data_dir, templates_dir) -> FastAPI:
    state = ServiceState(Path(data_dir), Path(templates_dir))
    app = FastAPI(title="contourrefine service", version="1")
    app.state.service = state

    @app.get("/v1/templates")
    def list_templates():
        return {"templates": sorted(state.templates.keys())}

    @app.post("/v1/sessions", status_code=201)
    def create_session(req: SessionRequest):
        template = state.template(req.template_id)
        camera = req.camera.to_camera()
        session_id = uuid.uuid4().hex[:12]
        session = Session(
            session_id, req.template_id, camera, state.data_dir / session_id
        )
        session.code = np.zeros(template.n_modes)
        session.persist()
        state.sessions[session_id] = session
        return {"session_id": session_id}

    @app.get("/v1/sessions/{session_id}")
    def session_info(session_id: str):
        s = state.session(session_id)
        return {
            "session_id": s.id,
            "template_id": s.template_id,
            "camera": s.camera.to_json_dict(),
            "code": [float(x) for x in s.code],
            "history_depth": len(s.history),
            "job": s.job.as_dict() if s.job else None,
        }

    def _start_job(session: Session, work) -> dict:
        with session.lock:
            if session.job is not None and session.job.status == "running":
                raise HTTPException(409, detail="a job is already running on this session")
            job = Job()
            session.job = job
            state.jobs[job.id] = job
        state.pool.submit(work, job)
        return {"job_id": job.id}

    def _job_callback(job: Job):
        def cb(step, loss, code):
            job.step = int(step)
            job.loss = float(loss)
            job.trace_tail.append({"step": int(step), "loss": float(loss)})
            return not job.cancel_event.is_set()

        return cb

    @app.post("/v1/sessions/{session_id}/reconstruct", status_code=202)
    def reconstruct(session_id: str, req: ReconstructRequest):
        session = state.session(session_id)
        template = state.template(session.template_id)
        sketch = _decode_image(req.sketch_png)
        if not (sketch == 0).any():
            raise HTTPException(422, detail="sketch has no stroke pixels")
        if req.objective not in ("chamfer", "silhouette"):
            raise HTTPException(422, detail="objective must be chamfer or silhouette")
        camera = session.camera

        def work(job: Job):
            try:
                code0 = initialize_code(
                    sketch, camera, template, n_starts=req.n_starts, seed=req.seed
                )
                target = (
                    sketch_to_mask(sketch)
                    if req.objective == "silhouette"
                    else filter_sketch_external(sketch)
                )
                config = RefinementConfig(
                    steps=max(1, req.steps), step_size=req.step_size
                )
                code, trace = optimize(
                    code0, req.objective, template, camera, target, config,
                    callback=_job_callback(job),
                )
                with session.lock:
                    if job.cancel_event.is_set():
                        job.status = "cancelled"
                        return
                    session.push_history()
                    session.code = code
                    session.persist()
                    job.result = {
                        "code": [float(x) for x in code],
                        "final_loss": trace.final_loss(),
                        "steps_run": len(trace.records),
                    }
                    job.status = "done"
            except Exception as e:  # surfaced through polling
                job.status = "error"
                job.error = str(e)

        return _start_job(session, work)

    @app.post("/v1/sessions/{session_id}/edit", status_code=202)
    def edit(session_id: str, req: EditRequest):
        session = state.session(session_id)
        template = state.template(session.template_id)
        stroke = _decode_image(req.stroke_png)
        if not (stroke == 0).any():
            raise HTTPException(422, detail="stroke has no pixels")
        camera = req.camera.to_camera() if req.camera else session.camera

        def work(job: Job):
            try:
                code0 = session.code.copy()  # frozen at job start
                config = RefinementConfig(
                    steps=max(1, req.steps),
                    step_size=req.step_size,
                    t=req.t,
                    lambda_mask=req.lambda_mask,
                    lambda_normal=req.lambda_normal,
                )
                code, trace = optimize(
                    code0, "partial", template, camera, stroke, config,
                    code_ref=code0, callback=_job_callback(job),
                )
                metrics = _edit_locality_metrics(
                    template, camera, stroke, code0, code, req.t
                )
                with session.lock:
                    if job.cancel_event.is_set():
                        job.status = "cancelled"
                        return
                    session.push_history()
                    session.code = code
                    session.persist()
                    job.result = {
                        "code": [float(x) for x in code],
                        "final_loss": trace.final_loss(),
                        "steps_run": len(trace.records),
                        "locality": metrics,
                    }
                    job.status = "done"
            except Exception as e:
                job.status = "error"
                job.error = str(e)

        return _start_job(session, work)

    @app.get("/v1/sessions/{session_id}/jobs/{job_id}")
    def job_status(session_id: str, job_id: str):
        state.session(session_id)
        job = state.jobs.get(job_id)
        if job is None:
            raise HTTPException(404, detail="unknown job")
        return job.as_dict()

    @app.post("/v1/sessions/{session_id}/jobs/{job_id}/cancel")
    def cancel_job(session_id: str, job_id: str):
        state.session(session_id)
        job = state.jobs.get(job_id)
        if job is None:
            raise HTTPException(404, detail="unknown job")
        job.cancel_event.set()
        return {"job_id": job_id, "status": job.status}

    @app.post("/v1/sessions/{session_id}/undo")
    def undo(session_id: str):
        session = state.session(session_id)
        with session.lock:
            if session.job is not None and session.job.status == "running":
                raise HTTPException(409, detail="a job is running on this session")
            if not session.history:
                raise HTTPException(409, detail="nothing to undo")
            name = session.history.pop()
            session.code = load_code(session.directory / name)
            session.persist()
            return {"code": [float(x) for x in session.code]}

    @app.get("/v1/sessions/{session_id}/mesh")
    def mesh(session_id: str, format: str = "obj"):
        if format != "obj":
            raise HTTPException(422, detail="only format=obj is supported")
        session = state.session(session_id)
        template = state.template(session.template_id)
        with session.lock:
            m = decode(template, session.code)
        buf = io.StringIO()
        for v in m.vertices:
            buf.write("v %.9g %.9g %.9g\n" % (v[0], v[1], v[2]))
        for f in m.faces:
            buf.write("f %d %d %d\n" % (f[0] + 1, f[1] + 1, f[2] + 1))
        return Response(content=buf.getvalue(), media_type="model/obj")

    @app.get("/v1/sessions/{session_id}/render")
    def render(session_id: str, az: float = 0.0, el: float = 0.0, kind: str = "normal"):
        import math

        from PIL import Image

        session = state.session(session_id)
        template = state.template(session.template_id)
        with session.lock:
            m = decode(template, session.code)
        cam = Camera(
            azimuth=math.radians(az),
            elevation=math.radians(el),
            distance=session.camera.distance,
            focal=session.camera.focal,
            width=session.camera.width,
            height=session.camera.height,
        )
        buffers = rasterize(m, cam)
        if kind == "mask":
            arr = (buffers.mask * 255).astype(np.uint8)
            img = Image.fromarray(arr, mode="L")
        elif kind == "normal":
            rgb = np.clip((buffers.normals + 1.0) * 0.5, 0.0, 1.0)
            img = Image.fromarray(np.round(rgb * 255).astype(np.uint8), mode="RGB")
        else:
            raise HTTPException(422, detail="kind must be normal or mask")
        out = io.BytesIO()
        img.save(out, format="PNG")
        return Response(content=out.getvalue(), media_type="image/png")

    return app
