"""Command-line interface.

Subcommands: ``template`` (build the built-in template family), ``synth``
(render a sketch dataset), ``reconstruct`` (sketch -> mesh), ``edit``
(stroke edit of a code), ``eval`` (CD/NC metrics over a manifest) and
``serve`` (HTTP session service). Exit codes: 0 success, 2 input error,
3 numerical failure. CONTOUR_REFINE_THREADS caps batch parallelism.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .camera import Camera
from .errors import InputError, NumericalError
from .images import load_stroke_image
from .mesh import box_ellipsoid_blend, load_obj, save_obj
from .metrics import chamfer_3d, default_eval_cameras, normal_consistency
from .refine import RefinementConfig, optimize
from .shape_model import (
    decode,
    fit_basis,
    initialize_code,
    load_code,
    load_template,
    save_code,
    save_template,
)
from .sketch_synth import generate_dataset, load_manifest


def thread_count() -> int:
    env = os.environ.get("CONTOUR_REFINE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"CONTOUR_REFINE_THREADS: not an integer: {env!r}")
    return min(8, os.cpu_count() or 1)


def build_template_family(n_samples: int, seed: int, subdivisions: int = 4):
    """Procedural box/ellipsoid shape library used by the built-in template."""
    rng = np.random.default_rng(seed)
    family = []
    for _ in range(n_samples):
        family.append(
            box_ellipsoid_blend(
                subdivisions,
                scale=rng.uniform(0.4, 1.0, 3),
                spherify=rng.uniform(0.0, 1.0),
                taper=rng.uniform(-0.5, 0.5),
                shear=rng.uniform(-0.3, 0.3),
            )
        )
    return family


def _camera_from_args(args) -> Camera:
    camera = Camera.load_json(args.camera)
    if args.resolution:
        try:
            w, h = (int(x) for x in args.resolution.lower().split("x"))
        except ValueError:
            raise InputError(f"--resolution: expected WxH, got {args.resolution!r}")
        camera = Camera(
            azimuth=camera.azimuth,
            elevation=camera.elevation,
            distance=camera.distance,
            focal=camera.focal * min(w, h) / min(camera.width, camera.height),
            width=w,
            height=h,
        )
    return camera


def _config_from_args(args) -> RefinementConfig:
    return RefinementConfig(
        steps=max(1, args.steps),
        step_size=args.step_size,
        t=args.t,
        lambda_mask=args.lambda_mask,
        lambda_normal=args.lambda_normal,
    )


def _add_refine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--objective", choices=["chamfer", "silhouette"], default="chamfer")
    p.add_argument("--steps", type=int, default=400)
    p.add_argument("--step-size", type=float, default=5e-3)
    p.add_argument("--t", type=float, default=12.0)
    p.add_argument("--lambda-mask", type=float, default=1.0)
    p.add_argument("--lambda-normal", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resolution", default=None, help="override camera image size, WxH")


def cmd_template(args) -> int:
    family = build_template_family(args.samples, args.seed, args.subdivisions)
    template = fit_basis(family, args.modes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_template(template, out / "template.obj", out / "template.basis")
    print(f"template: {template.n_vertices} vertices, {template.n_modes} modes -> {out}")
    return 0


def cmd_synth(args) -> int:
    template = load_template(args.template_obj, args.template_basis)
    if args.codes:
        codes = [load_code(p) for p in args.codes]
    else:
        rng = np.random.default_rng(args.seed)
        bounds = template.clamp_bounds
        codes = [rng.uniform(-2.0 / 3.0, 2.0 / 3.0, template.n_modes) * bounds
                 for _ in range(args.count)]
    records = generate_dataset(
        template,
        codes,
        views_per_shape=args.views,
        out_dir=args.out,
        seed=args.seed,
        width=args.size,
        height=args.size,
    )
    print(f"wrote {len(records)} samples to {args.out}")
    return 0


def cmd_reconstruct(args) -> int:
    template = load_template(args.template_obj, args.template_basis)
    camera = _camera_from_args(args)
    sketch = load_stroke_image(args.sketch)
    code = initialize_code(sketch, camera, template, n_starts=args.starts, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.steps > 0:
        from .contour import filter_sketch_external, sketch_to_mask

        target = (
            sketch_to_mask(sketch)
            if args.objective == "silhouette"
            else filter_sketch_external(sketch)
        )
        code, trace = optimize(
            code, args.objective, template, camera, target, _config_from_args(args)
        )
        trace.to_csv(out / "trace.csv")
    save_code(code, out / "code.code")
    save_obj(decode(template, code), out / "mesh.obj")
    print(f"reconstructed -> {out / 'mesh.obj'}")
    return 0


def cmd_edit(args) -> int:
    template = load_template(args.template_obj, args.template_basis)
    camera = _camera_from_args(args)
    stroke = load_stroke_image(args.stroke)
    code0 = load_code(args.code)
    code, trace = optimize(
        code0, "partial", template, camera, stroke, _config_from_args(args),
        code_ref=code0,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_code(code, out / "code.code")
    save_obj(decode(template, code), out / "mesh.obj")
    trace.to_csv(out / "trace.csv")
    print(f"edited -> {out / 'mesh.obj'}")
    return 0


def _eval_one(record, template, data_dir: Path, predictions: Path):
    sample_id = record["sample_id"]
    camera = Camera.from_json_dict(record["camera"])
    gt = decode(template, load_code(data_dir / record["code_path"]))
    pred_path = predictions / f"{sample_id}.obj"
    if not pred_path.exists():
        return {"sample_id": sample_id, "status": "missing", "cd_l2_x1000": "", "nc_x100": ""}
    pred = load_obj(pred_path)
    cd = chamfer_3d(pred, gt)
    nc = normal_consistency(pred, gt, default_eval_cameras(camera))
    return {
        "sample_id": sample_id,
        "status": "ok",
        "cd_l2_x1000": repr(cd * 1e3),
        "nc_x100": repr(nc * 100.0),
    }


def cmd_eval(args) -> int:
    template = load_template(args.template_obj, args.template_basis)
    records = load_manifest(args.manifest)
    data_dir = Path(args.manifest).parent
    predictions = Path(args.predictions)
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        rows = list(
            pool.map(lambda r: _eval_one(r, template, data_dir, predictions), records)
        )
    out = Path(args.out)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["sample_id", "status", "cd_l2_x1000", "nc_x100"]
        )
        writer.writeheader()
        writer.writerows(rows)
    n_missing = sum(1 for r in rows if r["status"] == "missing")
    print(f"evaluated {len(rows)} samples ({n_missing} missing) -> {out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(Path(args.data_dir), Path(args.templates_dir))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contour-refine",
        description="Reconstruct and edit 3D meshes from line drawings",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("template", help="build the built-in template")
    p.add_argument("--out", required=True)
    p.add_argument("--modes", type=int, default=32)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--subdivisions", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_template)

    p = sub.add_parser("synth", help="render a synthetic sketch dataset")
    p.add_argument("--template-obj", required=True)
    p.add_argument("--template-basis", required=True)
    p.add_argument("--count", type=int, default=4)
    p.add_argument("--codes", nargs="*", default=None, help="code files instead of sampling")
    p.add_argument("--views", type=int, default=16)
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("reconstruct", help="reconstruct a mesh from a sketch")
    p.add_argument("--sketch", required=True)
    p.add_argument("--camera", required=True, help="camera JSON path")
    p.add_argument("--template-obj", required=True)
    p.add_argument("--template-basis", required=True)
    p.add_argument("--starts", type=int, default=16)
    p.add_argument("--out", required=True)
    _add_refine_flags(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("edit", help="apply a stroke edit to a code")
    p.add_argument("--code", required=True)
    p.add_argument("--stroke", required=True)
    p.add_argument("--camera", required=True)
    p.add_argument("--template-obj", required=True)
    p.add_argument("--template-basis", required=True)
    p.add_argument("--out", required=True)
    _add_refine_flags(p)
    p.set_defaults(func=cmd_edit)

    p = sub.add_parser("eval", help="CD/NC metrics of predictions vs a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--template-obj", required=True)
    p.add_argument("--template-basis", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--data-dir", default="./sessions")
    p.add_argument("--templates-dir", required=True)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
