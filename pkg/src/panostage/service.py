"""Local JSON-over-HTTP service backing the staging UI.

Stdlib http.server is enough here: the API is a handful of JSON endpoints
plus tone-mapped PNG previews, served from one loaded workspace. Render
requests run on a small worker pool; a request that exceeds the timeout
returns a job id pollable at GET /v1/job/{id}. Plan computation is pure;
material edits are the only mutation and serialize behind a lock.

Workspace directory:
    layout.json      room polygon, height, windows, optional kitchen_walls
    components/      component library (JSON + OBJ)
    env.exr          calibrated outdoor panorama
    record.json      optional: photometric record with orientation_deg
    mask.png|json    optional: kitchen column mask
"""

from __future__ import annotations

import json
import threading
import traceback
from concurrent.futures import TimeoutError as FutureTimeout
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
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
)
from panostage.projection import PerspectiveView
from panostage.scene import assemble_scene, preview_render, scene_json_bytes, export_scene
from panostage.service_jobs import JobRegistry

API_PREFIX = "/v1"


class Workspace:
    """Loaded staging state shared by all requests."""

    def __init__(self, root, timeout_s: float = 30.0):
        self.root = Path(root)
        if not self.root.is_dir():
            raise ValidationError(f"workspace {self.root} is not a directory")
        self.layout = load_layout(self.root / "layout.json")
        if not self.layout.kitchen_walls:
            mask_path = next((p for p in (self.root / "mask.json", self.root / "mask.png")
                              if p.exists()), None)
            if mask_path is not None:
                from panostage.cli import load_mask
                self.layout = select_kitchen_walls(self.layout, load_mask(mask_path))
        self.library = load_component_library(self.root / "components")
        self.env = hdrio.load_panorama(self.root / "env.exr")
        if not self.env.is_calibrated:
            raise ValidationError("workspace env.exr is not calibrated")
        self.orientation = 0.0
        record_path = self.root / "record.json"
        if record_path.exists():
            self.orientation = float(json.loads(record_path.read_text()).get("orientation_deg", 0.0))
        self.materials: dict = {}
        self.sequence: list = []
        self.policy = CornerPolicy.SCALE_LAST
        self.revision = 0
        self.lock = threading.Lock()
        self.jobs = JobRegistry(workers=2)
        self.timeout_s = timeout_s

    # ----- panoramas

    def pano_ids(self) -> list:
        return sorted(p.stem for p in self.root.glob("*.exr")) + \
               sorted(p.stem for p in self.root.glob("*.hdr"))

    def pano_png(self, pano_id: str) -> bytes:
        for ext in (".exr", ".hdr"):
            path = self.root / f"{pano_id}{ext}"
            if path.exists():
                pano = hdrio.load_panorama(path)
                return hdrio.encode_png(hdrio.tone_map(pano.pixels))
        raise KeyError(pano_id)

    # ----- plan / scene / preview

    def compute_plan(self, sequence: list, policy: CornerPolicy):
        missing = [s for s in sequence if s not in self.library]
        if missing:
            raise ValidationError(f"unknown components {missing}; library has {sorted(self.library)}")
        if not sequence:
            raise ValidationError("empty component sequence")
        components = [self.library[name] for name in sequence]
        return place_components(self.layout, components, policy)

    def current_scene(self):
        with self.lock:
            sequence, policy = list(self.sequence), self.policy
            materials = json.loads(json.dumps(self.materials))  # deep copy
        plan = self.compute_plan(sequence, policy) if sequence else None
        return assemble_scene(self.layout, plan, self.env, materials,
                              orientation_deg=self.orientation)

    def set_material(self, key: str, albedo=None, texture=None, specular=None) -> int:
        value: dict = {}
        if albedo is not None:
            arr = np.asarray(albedo, dtype=np.float64).reshape(-1)
            if arr.size == 1:
                arr = np.repeat(arr, 3)
            if arr.size != 3 or not np.isfinite(arr).all() or (arr < 0).any() or (arr > 1).any():
                raise ValidationError(f"albedo must be 1 or 3 channels in [0, 1], got {albedo!r}")
            value["albedo"] = arr.tolist()
        if texture is not None:
            if not isinstance(texture, str) or not texture:
                raise ValidationError(f"texture must be a non-empty string, got {texture!r}")
            value["texture"] = texture
        if specular is not None:
            spec = float(specular)
            if not (0.0 <= spec <= 1.0):
                raise ValidationError(f"specular must be in [0, 1], got {specular!r}")
            value["specular"] = spec
        if not value:
            raise ValidationError("material update needs at least one of albedo/texture/specular")
        with self.lock:
            if "." in key:
                comp, slot = key.split(".", 1)
                if comp not in self.library:
                    raise ValidationError(f"unknown component {comp!r}")
                if slot not in self.library[comp].material_slots:
                    raise ValidationError(f"component {comp!r} has no slot {slot!r}")
                store = self.materials.setdefault("components", {}).setdefault(comp, {})
                merged = dict(store.get(slot, {}))
            elif key in ("floor", "ceiling", "wall") or key.startswith("wall_"):
                store = self.materials
                merged = dict(store.get(key, {}))
            else:
                raise ValidationError(f"unknown material slot {key!r}")
            merged.update(value)
            merged.setdefault("albedo", [0.6, 0.6, 0.6])
            store[key.split(".", 1)[1] if "." in key else key] = merged
            self.revision += 1
            return self.revision


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()


class StagingHandler(BaseHTTPRequestHandler):
    """Routes /v1/... requests against the shared Workspace."""

    workspace: Workspace = None  # set by serve()
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # quiet by default
        pass

    # ----- plumbing

    def _send(self, status: int, body: bytes, content_type: str = "application/json") -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, message: str) -> None:
        self._send(status, _json_bytes({"error": message}))

    def _read_json(self):
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length) if length else b"{}"
        try:
            return json.loads(raw or b"{}")
        except json.JSONDecodeError as e:
            raise ValidationError(f"bad JSON body: {e}") from e

    def _route(self):
        path = self.path.split("?", 1)[0].rstrip("/")
        if not path.startswith(API_PREFIX):
            return None
        return path[len(API_PREFIX):] or "/"

    # ----- verbs

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        ws = self.workspace
        try:
            route = self._route()
            if route is None:
                self._error(404, f"unversioned path {self.path!r}; use {API_PREFIX}/")
                return
            if route == "/scene":
                scene = ws.current_scene()
                doc = {
                    "revision": ws.revision,
                    "layout": {
                        "corners_m": [[float(x), float(y)] for x, y in ws.layout.corners],
                        "height_m": ws.layout.height,
                        "kitchen_walls": list(ws.layout.kitchen_walls),
                    },
                    "components": {
                        name: {
                            "category": c.category,
                            "width_m": c.width, "depth_m": c.depth, "height_m": c.height,
                            "material_slots": list(c.material_slots),
                        } for name, c in sorted(ws.library.items())
                    },
                    "sequence": list(ws.sequence),
                    "policy": ws.policy.value,
                    "material_keys": scene.material_keys(),
                    "panoramas": ws.pano_ids(),
                    "orientation_deg": ws.orientation,
                }
                self._send(200, _json_bytes(doc))
            elif route.startswith("/pano/"):
                pano_id = route.split("/", 2)[2]
                try:
                    png = ws.pano_png(pano_id)
                except KeyError:
                    self._error(404, f"unknown panorama {pano_id!r}")
                    return
                self._send(200, png, "image/png")
            elif route.startswith("/job/"):
                job_id = route.split("/", 2)[2]
                status = ws.jobs.status(job_id)
                if status is None:
                    self._error(404, f"unknown job {job_id!r}")
                elif status["state"] == "done":
                    self._send(200, status["result"], status["content_type"])
                elif status["state"] == "error":
                    self._error(500, status["message"])
                else:
                    self._send(202, _json_bytes({"job_id": job_id, "state": status["state"]}))
            else:
                self._error(404, f"no route {route!r}")
        except ValidationError as e:
            self._error(400, str(e))
        except Exception as e:  # pragma: no cover - defensive
            traceback.print_exc()
            self._error(500, f"{type(e).__name__}: {e}")

    def do_POST(self):
        ws = self.workspace
        try:
            route = self._route()
            if route is None:
                self._error(404, f"unversioned path {self.path!r}; use {API_PREFIX}/")
                return
            body = self._read_json()
            if route == "/plan":
                sequence = body.get("sequence")
                if not isinstance(sequence, list) or not sequence:
                    raise ValidationError("body must include a non-empty 'sequence' list")
                policy = CornerPolicy(body.get("policy", CornerPolicy.SCALE_LAST.value))
                plan = ws.compute_plan([str(s) for s in sequence], policy)
                with ws.lock:
                    ws.sequence = [str(s) for s in sequence]
                    ws.policy = policy
                    ws.revision += 1
                self._send(200, plan_to_json_bytes(plan))
            elif route == "/material":
                key = body.get("slot")
                if not key or not any(k in body for k in ("albedo", "texture", "specular")):
                    raise ValidationError("body must include 'slot' and albedo/texture/specular")
                revision = ws.set_material(str(key), body.get("albedo"),
                                           body.get("texture"), body.get("specular"))
                self._send(200, _json_bytes({"ok": True, "revision": revision}))
            elif route == "/preview":
                view = PerspectiveView(
                    fov=float(body.get("fov", 90.0)),
                    yaw=float(body.get("yaw", 0.0)),
                    pitch=float(body.get("pitch", 0.0)),
                    width=int(body.get("width", 96)),
                    height=int(body.get("height", 64)),
                )
                spp = int(body.get("spp", 8))
                seed = int(body.get("seed", 0))

                def render() -> tuple:
                    scene = ws.current_scene()
                    image = preview_render(scene, view, spp=spp, seed=seed)
                    return hdrio.encode_png(hdrio.tone_map(image)), "image/png"

                job_id, future = ws.jobs.submit(render)
                try:
                    png, ctype = future.result(timeout=ws.timeout_s)
                    self._send(200, png, ctype)
                except FutureTimeout:
                    self._send(202, _json_bytes({"job_id": job_id, "state": "pending"}))
            elif route == "/export":
                out = ws.root / "export"
                scene = ws.current_scene()
                doc = export_scene(scene, out)
                self._send(200, scene_json_bytes(doc))
            else:
                self._error(404, f"no route {route!r}")
        except (ValidationError, ValueError) as e:
            self._error(400, str(e))
        except NumericError as e:
            self._error(422, str(e))
        except Exception as e:  # pragma: no cover - defensive
            traceback.print_exc()
            self._error(500, f"{type(e).__name__}: {e}")


def make_server(port: int, workspace_dir, timeout_s: float = 30.0) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (StagingHandler,), {
        "workspace": Workspace(workspace_dir, timeout_s=timeout_s),
    })
    return ThreadingHTTPServer(("127.0.0.1", port), handler)


def serve(port: int, workspace_dir, timeout_s: float = 30.0) -> None:
    server = make_server(port, workspace_dir, timeout_s)
    host, bound_port = server.server_address
    print(f"panostage service on http://{host}:{bound_port}{API_PREFIX}/")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
