"""Command-line entry point.

Subcommands wrap the library one-to-one so scripted runs and the HTTP
service produce byte-identical artifacts. Exit codes: 0 success,
2 validation error, 3 I/O error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from panostage import hdrio
from panostage.errors import NumericError, ValidationError
from panostage.layout import (
    CornerPolicy,
    load_component_library,
    load_layout,
    place_components,
    plan_to_json_bytes,
    select_kitchen_walls,
    validate_plan,
)
from panostage.photometry import calibrate_pair
from panostage.projection import PerspectiveView, fisheye_from_panorama, pano_to_perspective
from panostage.scene import assemble_scene, export_scene, preview_render

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


def _load_config(path) -> dict:
    path = Path(path)
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ImportError:
            import tomli as tomllib
        return tomllib.loads(path.read_text())
    return json.loads(path.read_text())


def cmd_calibrate(args) -> int:
    indoor = hdrio.load_panorama(args.indoor)
    outdoor = hdrio.load_panorama(args.outdoor)
    indoor_cal, outdoor_cal, result = calibrate_pair(indoor, outdoor, args.lux)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    hdrio.save_panorama(out / "indoor_calibrated.exr", indoor_cal)
    hdrio.save_panorama(out / "outdoor_calibrated.exr", outdoor_cal)
    doc = {
        "factor": result.factor,
        "uniform_luminance_cdm2": result.uniform_luminance,
        "mean_disk_luminance_cdm2": result.mean_disk_luminance,
        "illuminance_lux": result.illuminance_used,
    }
    (out / "calibration.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"calibration factor: {result.factor:.6g}")
    return EXIT_OK


def cmd_project(args) -> int:
    pano = hdrio.load_panorama(args.pano)
    out = Path(args.out)
    if args.mode == "fisheye":
        fisheye = fisheye_from_panorama(pano, args.size)
        image = fisheye.pixels
    else:
        view = PerspectiveView(fov=args.fov, yaw=args.yaw, pitch=args.pitch,
                               width=args.size or 512, height=args.height or args.size or 512)
        image = pano_to_perspective(pano, view)
    if out.suffix.lower() == ".exr":
        hdrio.write_exr(out, image)
    elif out.suffix.lower() == ".png":
        hdrio.save_png(out, hdrio.tone_map(image))
    else:
        raise ValidationError(f"unsupported output extension {out.suffix!r}")
    print(f"wrote {out}")
    return EXIT_OK


def load_mask(path, width: int | None = None) -> np.ndarray:
    """Kitchen mask: 1 x w PNG (nonzero = kitchen) or run-length JSON
    {"width": w, "runs": [[start, length], ...]}."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        spec = json.loads(path.read_text())
        mask = np.zeros(int(spec["width"]), dtype=bool)
        for start, length in spec.get("runs", []):
            mask[int(start):int(start) + int(length)] = True
        return mask
    frame = hdrio.load_ldr_frame(path)
    if frame.shape[0] != 1:
        raise ValidationError(f"mask PNG must be 1 pixel tall, got {frame.shape[0]}")
    return frame[0, :, 0] > 0.5


def run_stage(layout_path, mask_path, components_dir, sequence, policy, env_path,
              out_dir, seed: int = 0, spp: int = 8, preview_size=(96, 64),
              yaw: float = 0.0, pitch: float = 0.0, fov: float = 90.0,
              orientation_deg: float = 0.0):
    """The stage pipeline shared by the CLI and the service."""
    layout = load_layout(layout_path)
    if mask_path is not None:
        mask = load_mask(mask_path)
        layout = select_kitchen_walls(layout, mask)
    if not layout.kitchen_walls:
        raise ValidationError("stage: no kitchen walls (provide a mask or flags in layout JSON)")
    library = load_component_library(components_dir)
    if not sequence:
        raise ValidationError("stage: empty component sequence")
    missing = [name for name in sequence if name not in library]
    if missing:
        raise ValidationError(f"stage: unknown components {missing}; library has {sorted(library)}")
    components = [library[name] for name in sequence]
    plan = place_components(layout, components, policy)
    report = validate_plan(plan, layout)
    env = hdrio.load_panorama(env_path)
    if not env.is_calibrated:
        raise ValidationError("stage: environment panorama is not calibrated "
                              "(run calibrate first; EXR must carry the factor)")
    scene = assemble_scene(layout, plan, env, orientation_deg=orientation_deg)
    view = PerspectiveView(fov=fov, yaw=yaw, pitch=pitch,
                           width=preview_size[0], height=preview_size[1])
    preview = preview_render(scene, view, spp=spp, seed=seed)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "plan.json").write_bytes(plan_to_json_bytes(plan))
    export_scene(scene, out / "scene")
    hdrio.write_exr(out / "preview.exr", preview)
    hdrio.save_png(out / "preview.png", hdrio.tone_map(preview))
    return plan, report, scene, preview


def cmd_stage(args) -> int:
    sequence = [s for s in args.sequence.split(",") if s]
    policy = CornerPolicy(args.policy)
    _, report, _, _ = run_stage(
        args.layout, args.mask, args.components, sequence, policy, args.env,
        args.out, seed=args.seed, spp=args.spp,
        preview_size=_parse_size(args.preview_size),
        yaw=args.yaw, pitch=args.pitch, fov=args.fov,
        orientation_deg=args.orientation,
    )
    for v in report.violations:
        print(f"warning: {v}", file=sys.stderr)
    print(f"staged {len(sequence)} components -> {args.out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from panostage.service import serve
    serve(args.port, args.workspace, timeout_s=args.timeout)
    return EXIT_OK


def _parse_size(text: str):
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError as e:
        raise ValidationError(f"bad size {text!r}, expected WxH") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="panostage",
                                     description="HDR panorama calibration and kitchen staging")
    parser.add_argument("--config", help="TOML/JSON config file with defaults for the subcommand")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="calibrate a paired indoor/outdoor capture")
    p.add_argument("indoor", help="indoor panorama (EXR or HDR)")
    p.add_argument("outdoor", help="outdoor panorama (EXR or HDR)")
    p.add_argument("--lux", type=float, required=True, help="measured indoor illuminance (lux)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("project", help="project a panorama to fisheye or perspective")
    p.add_argument("pano")
    p.add_argument("--mode", choices=["fisheye", "perspective"], required=True)
    p.add_argument("--yaw", type=float, default=0.0)
    p.add_argument("--pitch", type=float, default=0.0)
    p.add_argument("--fov", type=float, default=90.0)
    p.add_argument("--size", type=int, default=None, help="output width (or fisheye side)")
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--out", required=True, help="output image (.exr or .png)")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("stage", help="place components, export the scene, render a preview")
    p.add_argument("--layout", required=True, help="room layout JSON")
    p.add_argument("--mask", default=None, help="kitchen mask (1 x w PNG or run-length JSON)")
    p.add_argument("--components", required=True, help="component library directory")
    p.add_argument("--sequence", required=True, help="comma-separated component names in order")
    p.add_argument("--policy", choices=[c.value for c in CornerPolicy],
                   default=CornerPolicy.SCALE_LAST.value)
    p.add_argument("--env", required=True, help="calibrated outdoor panorama EXR")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spp", type=int, default=8, help="preview samples per pixel")
    p.add_argument("--preview-size", default="96x64")
    p.add_argument("--yaw", type=float, default=0.0)
    p.add_argument("--pitch", type=float, default=0.0)
    p.add_argument("--fov", type=float, default=90.0)
    p.add_argument("--orientation", type=float, default=0.0,
                   help="environment-map compass orientation (degrees)")
    p.set_defaults(func=cmd_stage)

    p = sub.add_parser("serve", help="serve the staging API for the browser UI")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--workspace", required=True, help="directory with layout.json, components/, env.exr")
    p.add_argument("--timeout", type=float, default=30.0, help="seconds before a render becomes a job")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            defaults = _load_config(args.config).get(args.command, {})
        except (OSError, ValueError) as e:
            print(f"error: bad config file: {e}", file=sys.stderr)
            return EXIT_VALIDATION
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        mapped = {k.replace("-", "_"): v for k, v in defaults.items()}
        unknown = sorted(set(mapped) - known)
        if unknown:
            print(f"error: unknown config keys for {args.command}: {unknown}", file=sys.stderr)
            return EXIT_VALIDATION
        sub.set_defaults(**mapped)
        args = parser.parse_args(argv)  # explicit flags still win over config
    try:
        return args.func(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericError as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
