"""Scene assembly, irradiance probes, diffuse preview, and export.

The scene is renderer-neutral: a room shell extruded from the floor
polygon, placed kitchen components with per-slot materials, a calibrated
outdoor panorama as distant environment, optional emitters, and window
rectangles acting as portals. Probes and the preview evaluate direct
lighting only (environment through portals plus emitters); global
illumination is delegated to whatever consumes the export.

Sampling is stratified cosine-weighted with a counter-based stream keyed
by (seed, pixel or probe id, sample index), so results are reproducible
and independent of scheduling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from panostage.errors import ValidationError
from panostage.geometry import point_in_polygon, triangulate_polygon
from panostage.hdrio import read_exr, write_exr
from panostage.image import LUMINOUS_EFFICACY, REC709_WEIGHTS, HdrPanorama
from panostage.layout import (
    CornerPolicy,
    KitchenComponent,
    PlacementEntry,
    PlacementPlan,
    PlacementTransform,
    RoomLayout,
    apply_transform,
    layout_from_dict,
    layout_to_dict,
    validate_plan,
)
from panostage.mesh import RaycastScene, TriangleMesh, read_obj, write_obj
from panostage.projection import TWO_PI, PerspectiveView, sample_equirect, view_ray_grid
from panostage.rng import counter_uniform

SCHEMA_VERSION = 1

DEFAULT_MATERIALS = {
    "floor": (0.5, 0.5, 0.5),
    "ceiling": (0.8, 0.8, 0.8),
    "wall": (0.7, 0.7, 0.7),
}
DEFAULT_COMPONENT_ALBEDO = (0.6, 0.6, 0.6)


def _albedo(value) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64).reshape(3)
    if (arr < 0).any() or (arr > 1).any() or not np.isfinite(arr).all():
        raise ValidationError(f"albedo channels must be in [0, 1], got {arr.tolist()}")
    return arr


@dataclass(frozen=True)
class Material:
    """Per-slot material: diffuse albedo plus optional texture reference and
    specular weight. The preview shades diffuse-only; texture and specular
    ride through export for the external renderer."""

    albedo: np.ndarray
    texture: str | None = None
    specular: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "albedo", _albedo(self.albedo))
        if self.specular is not None and not (0.0 <= float(self.specular) <= 1.0):
            raise ValidationError(f"specular weight must be in [0, 1], got {self.specular}")

    @staticmethod
    def of(value) -> "Material":
        """Coerce an RGB triple, a dict, or a Material."""
        if isinstance(value, Material):
            return value
        if isinstance(value, dict):
            if "albedo" not in value:
                raise ValidationError(f"material dict needs an 'albedo' key, got {sorted(value)}")
            unknown = set(value) - {"albedo", "texture", "specular"}
            if unknown:
                raise ValidationError(f"unknown material keys {sorted(unknown)}")
            spec = value.get("specular")
            return Material(value["albedo"], value.get("texture"),
                            float(spec) if spec is not None else None)
        return Material(value)

    def as_dict(self) -> dict:
        out: dict = {"albedo": [float(c) for c in self.albedo]}
        if self.texture is not None:
            out["texture"] = self.texture
        if self.specular is not None:
            out["specular"] = float(self.specular)
        return out

    def same_as(self, other: "Material", tol: float = 1e-12) -> bool:
        return (np.abs(self.albedo - other.albedo).max() <= tol
                and self.texture == other.texture
                and (self.specular or 0.0) == (other.specular or 0.0))


@dataclass(frozen=True)
class PointEmitter:
    position: np.ndarray      # meters
    power_rgb: np.ndarray     # lumens per channel

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64).reshape(3))
        object.__setattr__(self, "power_rgb", np.asarray(self.power_rgb, dtype=np.float64).reshape(3))


@dataclass(frozen=True)
class AreaEmitter:
    corners: np.ndarray       # (4, 3) quad
    radiance_rgb: np.ndarray  # emitted radiance per channel

    def __post_init__(self):
        object.__setattr__(self, "corners", np.asarray(self.corners, dtype=np.float64).reshape(4, 3))
        object.__setattr__(self, "radiance_rgb", np.asarray(self.radiance_rgb, dtype=np.float64).reshape(3))

    def mesh(self) -> TriangleMesh:
        return TriangleMesh(self.corners, np.array([[0, 1, 2], [0, 2, 3]]))


@dataclass(frozen=True)
class ExtraSurface:
    """Free-standing geometry (occluders, test fixtures)."""

    mesh: TriangleMesh
    albedo: tuple = (0.0, 0.0, 0.0)
    emission: tuple = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class PlacedComponent:
    entry: PlacementEntry
    local_mesh: TriangleMesh
    world_mesh: TriangleMesh
    slot_materials: dict  # slot name -> Material


@dataclass
class SceneDescription:
    env: HdrPanorama
    orientation_deg: float = 0.0
    layout: RoomLayout | None = None
    room_materials: dict = field(default_factory=dict)
    placements: tuple = ()
    emitters: tuple = ()
    extra_surfaces: tuple = ()
    plan_policy: CornerPolicy | None = None
    _trace: "_TraceData | None" = None

    def __post_init__(self):
        if not self.env.is_calibrated:
            raise ValidationError("SceneDescription: environment map must be calibrated")
        self.room_materials = {k: Material.of(v) for k, v in self.room_materials.items()}

    def trace_data(self) -> "_TraceData":
        if self._trace is None:
            self._trace = _build_trace_data(self)
        return self._trace

    def material_keys(self) -> list:
        keys = sorted(self.room_materials)
        for p in self.placements:
            keys += [f"{p.entry.component.name}.{slot}" for slot in sorted(p.slot_materials)]
        return keys

    def with_material(self, key: str, material) -> "SceneDescription":
        """Copy of the scene with one material replaced. `key` is a room
        surface (floor/ceiling/wall_i, or 'wall' for all walls) or
        'component.slot'; `material` is an RGB triple, a material dict, or a
        Material."""
        value = Material.of(material)
        if key == "wall":
            mats = dict(self.room_materials)
            for k in mats:
                if k.startswith("wall_"):
                    mats[k] = value
            return replace(self, room_materials=mats, _trace=None)
        if key in self.room_materials:
            mats = dict(self.room_materials)
            mats[key] = value
            return replace(self, room_materials=mats, _trace=None)
        if "." in key:
            comp, slot = key.split(".", 1)
            placements, found = [], False
            for p in self.placements:
                if p.entry.component.name == comp and slot in p.slot_materials:
                    slots = dict(p.slot_materials)
                    slots[slot] = value
                    placements.append(replace(p, slot_materials=slots))
                    found = True
                else:
                    placements.append(p)
            if found:
                return replace(self, placements=tuple(placements), _trace=None)
        raise ValidationError(f"unknown material slot {key!r}")


@dataclass(frozen=True)
class IrradianceProbe:
    """Probe request: where, which way, and how many hemisphere samples."""

    position: np.ndarray
    normal: np.ndarray
    sample_count: int = 1024
    seed: int = 0
    probe_id: int = 0

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=np.float64).reshape(3)
        nrm = np.asarray(self.normal, dtype=np.float64).reshape(3)
        length = np.linalg.norm(nrm)
        if not length > 0:
            raise ValidationError("IrradianceProbe: zero normal")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "normal", nrm / length)
        if self.sample_count < 64:
            raise ValidationError("IrradianceProbe: sample_count must be >= 64")


@dataclass(frozen=True)
class ProbeResult:
    illuminance: float        # lux
    stderr: float             # lux
    irradiance_rgb: np.ndarray


# ------------------------------------------------------------ scene assembly

def room_shell_meshes(layout: RoomLayout) -> dict:
    """floor/ceiling/wall_i triangle meshes extruded from the floor polygon."""
    corners = layout.corners
    n = len(corners)
    floor2d = np.column_stack([corners, np.zeros(n)])
    ceil2d = np.column_stack([corners, np.full(n, layout.height)])
    tris = triangulate_polygon(corners)
    meshes = {
        "floor": TriangleMesh(floor2d, tris),
        "ceiling": TriangleMesh(ceil2d, tris[:, ::-1]),  # flip winding to face down
    }
    for i in range(n):
        a, b = corners[i], corners[(i + 1) % n]
        v = np.array([
            [a[0], a[1], 0.0], [b[0], b[1], 0.0],
            [b[0], b[1], layout.height], [a[0], a[1], layout.height],
        ])
        meshes[f"wall_{i}"] = TriangleMesh(v, np.array([[0, 1, 2], [0, 2, 3]]))
    return meshes


def assemble_scene(layout: RoomLayout, plan: PlacementPlan | None, env: HdrPanorama,
                   materials: dict | None = None, emitters=(),
                   orientation_deg: float = 0.0) -> SceneDescription:
    """Build the renderer-neutral scene from layout + plan + environment."""
    if not env.is_calibrated:
        raise ValidationError("assemble_scene: environment map must be calibrated")
    materials = dict(materials or {})
    component_materials = materials.pop("components", {})
    room_materials = {}
    for name in ["floor", "ceiling"] + [f"wall_{i}" for i in range(layout.n_walls)]:
        base = "wall" if name.startswith("wall_") else name
        room_materials[name] = Material.of(
            materials.get(name, materials.get(base, DEFAULT_MATERIALS[base])))

    placements = []
    if plan is not None:
        report = validate_plan(plan, layout)
        if not report.ok:
            raise ValidationError("assemble_scene: invalid plan: " + "; ".join(report.violations))
        for entry in plan.entries:
            local = entry.component.load_mesh()
            world = apply_transform(local, entry.transform)
            overrides = component_materials.get(entry.component.name, {})
            slots = {slot: Material.of(overrides.get(slot, DEFAULT_COMPONENT_ALBEDO))
                     for slot in local.slot_names}
            placements.append(PlacedComponent(entry, local, world, slots))

    return SceneDescription(
        env=env,
        orientation_deg=float(orientation_deg),
        layout=layout,
        room_materials=room_materials,
        placements=tuple(placements),
        emitters=tuple(emitters),
        plan_policy=plan.policy if plan is not None else None,
    )


# ------------------------------------------------------------- ray shading

@dataclass
class _TraceData:
    caster: RaycastScene
    tri_albedo: np.ndarray    # (t, 3)
    tri_emission: np.ndarray  # (t, 3); zero rows for non-emitters
    tri_wall: np.ndarray      # (t,) wall index or -1
    tri_normal: np.ndarray    # (t, 3) unit geometric normals
    walls: list               # Wall objects by index
    windows_by_wall: dict     # wall index -> list[WindowRect]


def _build_trace_data(scene: SceneDescription) -> _TraceData:
    meshes, albedos, emissions, wall_ids = [], [], [], []

    def add(mesh, albedo_per_face, emission, wall_id):
        if len(mesh.faces) == 0:
            return
        meshes.append((mesh, len(meshes)))
        albedos.append(np.asarray(albedo_per_face, dtype=np.float64).reshape(len(mesh.faces), 3))
        emissions.append(np.broadcast_to(np.asarray(emission, dtype=np.float64),
                                         (len(mesh.faces), 3)))
        wall_ids.append(np.full(len(mesh.faces), wall_id, dtype=np.int64))

    zero = np.zeros(3)
    if scene.layout is not None:
        for name, mesh in room_shell_meshes(scene.layout).items():
            mat = scene.room_materials.get(name)
            alb = mat.albedo if mat is not None else np.asarray(
                DEFAULT_MATERIALS["wall" if name.startswith("wall_") else name])
            wall_id = int(name.split("_")[1]) if name.startswith("wall_") else -1
            add(mesh, np.broadcast_to(alb, (len(mesh.faces), 3)), zero, wall_id)
    for placed in scene.placements:
        mesh = placed.world_mesh
        if len(mesh.faces):
            per_face = np.stack([placed.slot_materials[mesh.slot_names[s]].albedo
                                 for s in mesh.face_slots])
            add(mesh, per_face, zero, -1)
    for extra in scene.extra_surfaces:
        add(extra.mesh, np.broadcast_to(np.asarray(extra.albedo, dtype=np.float64),
                                        (len(extra.mesh.faces), 3)), extra.emission, -1)
    for em in scene.emitters:
        if isinstance(em, AreaEmitter):
            mesh = em.mesh()
            add(mesh, np.zeros((len(mesh.faces), 3)), em.radiance_rgb, -1)

    caster = RaycastScene.build(meshes)
    if meshes:
        tri_albedo = np.concatenate(albedos)
        tri_emission = np.concatenate(emissions)
        tri_wall = np.concatenate(wall_ids)
    else:
        tri_albedo = np.zeros((0, 3))
        tri_emission = np.zeros((0, 3))
        tri_wall = np.zeros(0, dtype=np.int64)
    windows = {}
    walls = []
    if scene.layout is not None:
        walls = scene.layout.walls()
        for rect in scene.layout.windows:
            windows.setdefault(rect.wall, []).append(rect)
    return _TraceData(caster, tri_albedo, tri_emission, tri_wall, caster.normals(),
                      walls, windows)


def env_radiance(scene: SceneDescription, directions: np.ndarray) -> np.ndarray:
    """Sample the oriented environment panorama along world directions."""
    d = np.asarray(directions, dtype=np.float64)
    flat = d.reshape(-1, 3)
    norm = np.linalg.norm(flat, axis=1)
    theta = np.arccos(np.clip(flat[:, 2] / norm, -1.0, 1.0))
    phi = np.arctan2(flat[:, 1], flat[:, 0]) + np.deg2rad(scene.orientation_deg)
    w, h = scene.env.width, scene.env.height
    x = (w / 2.0 + (phi % TWO_PI) / TWO_PI * w) % w
    y = theta / np.pi * h
    return sample_equirect(scene.env.pixels, x, y).reshape(d.shape)


def _portal_mask(td: _TraceData, tri: np.ndarray, points: np.ndarray) -> np.ndarray:
    """True where a hit on a windowed wall lands inside a window rect."""
    out = np.zeros(len(tri), dtype=bool)
    wall_ids = td.tri_wall[tri]
    for wall_i, rects in td.windows_by_wall.items():
        on_wall = wall_ids == wall_i
        if not on_wall.any():
            continue
        wall = td.walls[wall_i]
        pts = points[on_wall]
        s = (pts[:, :2] - wall.start) @ wall.direction
        z = pts[:, 2]
        in_window = np.zeros(len(pts), dtype=bool)
        for r in rects:
            in_window |= (s >= r.s0) & (s <= r.s1) & (z >= r.z0) & (z <= r.z1)
        out[np.flatnonzero(on_wall)[in_window]] = True
    return out


def _ray_radiance(scene: SceneDescription, origins: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """Direct radiance along rays: emitters when hit, environment through
    portals or open sky, zero from other geometry."""
    td = scene.trace_data()
    if len(td.caster.v0) == 0:
        return env_radiance(scene, dirs)
    out = np.zeros((len(dirs), 3))
    t, tri, points = td.caster.raycast(origins, dirs)
    miss = ~np.isfinite(t)
    if miss.any():
        out[miss] = env_radiance(scene, dirs[miss])
    hit_idx = np.flatnonzero(~miss)
    if hit_idx.size:
        out[hit_idx] = td.tri_emission[tri[hit_idx]]
        portal = _portal_mask(td, tri[hit_idx], points[hit_idx])
        if portal.any():
            pidx = hit_idx[portal]
            out[pidx] = env_radiance(scene, dirs[pidx])
    return out


def _tangent_frames(normals: np.ndarray):
    n = np.atleast_2d(normals)
    helper = np.where(np.abs(n[:, :1]) < 0.9,
                      np.array([[1.0, 0.0, 0.0]]), np.array([[0.0, 1.0, 0.0]]))
    t = np.cross(helper, n)
    t /= np.linalg.norm(t, axis=1, keepdims=True)
    b = np.cross(n, t)
    return t, b, n


def _cosine_dirs(normals: np.ndarray, streams: np.ndarray, count: int, seed: int) -> np.ndarray:
    """Stratified cosine-weighted directions: one batch of `count` samples
    per row of `normals`/`streams`, flattened row-major."""
    n_batch = len(normals)
    sid = np.repeat(np.asarray(streams, dtype=np.uint64), count)
    idx = np.tile(np.arange(count, dtype=np.uint64), n_batch)
    u1 = (idx.astype(np.float64) + counter_uniform(seed, sid, idx, 0)) / count
    u2 = counter_uniform(seed, sid, idx, 1)
    r = np.sqrt(u1)
    ang = TWO_PI * u2
    t, b, n = _tangent_frames(normals)
    t = np.repeat(t, count, axis=0)
    b = np.repeat(b, count, axis=0)
    n = np.repeat(n, count, axis=0)
    return (r * np.cos(ang))[:, None] * t + (r * np.sin(ang))[:, None] * b \
        + np.sqrt(np.maximum(0.0, 1.0 - u1))[:, None] * n


def _luminance(rgb: np.ndarray) -> np.ndarray:
    return LUMINOUS_EFFICACY * (np.asarray(rgb, dtype=np.float64) @ REC709_WEIGHTS)


def _point_emitter_irradiance(scene: SceneDescription, positions: np.ndarray,
                              normals: np.ndarray) -> np.ndarray:
    """Analytic direct irradiance from point emitters, with visibility."""
    pos = np.atleast_2d(positions)
    nrm = np.atleast_2d(normals)
    td = scene.trace_data()
    total = np.zeros((len(pos), 3))
    for em in scene.emitters:
        if not isinstance(em, PointEmitter):
            continue
        to_src = em.position[None, :] - pos
        dist = np.linalg.norm(to_src, axis=1)
        ok = dist > 1e-12
        cos_i = np.einsum("ij,ij->i", to_src, nrm) / np.where(ok, dist, 1.0)
        ok &= cos_i > 0
        if len(td.caster.v0) and ok.any():
            d = to_src[ok] / dist[ok, None]
            t, _, _ = td.caster.raycast(pos[ok], d)
            vis = t > dist[ok] - 1e-9
            sub = np.flatnonzero(ok)[~vis]
            ok[sub] = False
        contrib = em.power_rgb[None, :] / (4.0 * np.pi) * (cos_i / dist ** 2)[:, None]
        total += np.where(ok[:, None], contrib, 0.0)
    return total


def irradiance_probe(scene: SceneDescription, probe: IrradianceProbe) -> ProbeResult:
    """Monte Carlo direct irradiance at the probe: E = pi * mean(sampled
    radiance) under cosine-weighted sampling, plus analytic point-emitter
    terms. Standard error reflects the sampled part only."""
    if scene.layout is not None:
        pos = probe.position
        if not point_in_polygon(pos[:2], scene.layout.corners) or not (
                -1e-9 <= pos[2] <= scene.layout.height + 1e-9):
            raise ValidationError("irradiance_probe: position outside the room")
    dirs = _cosine_dirs(probe.normal[None, :], np.array([probe.probe_id]),
                        probe.sample_count, probe.seed)
    origins = np.broadcast_to(probe.position, dirs.shape)
    radiance = _ray_radiance(scene, origins, dirs)
    lum = _luminance(radiance)
    point_rgb = _point_emitter_irradiance(scene, probe.position[None, :],
                                          probe.normal[None, :])[0]
    e_rgb = np.pi * radiance.mean(axis=0) + point_rgb
    e_lux = float(np.pi * lum.mean() + _luminance(point_rgb))
    stderr = float(np.pi * lum.std(ddof=1) / np.sqrt(probe.sample_count))
    return ProbeResult(illuminance=e_lux, stderr=stderr, irradiance_rgb=e_rgb)


def preview_render(scene: SceneDescription, view: PerspectiveView, spp: int = 16,
                   seed: int = 0, eye: np.ndarray | None = None) -> np.ndarray:
    """Direct-lighting diffuse preview: one primary ray per pixel through the
    pixel center, `spp` hemisphere samples at each hit shaded as
    albedo/pi * irradiance. Deterministic for a given seed."""
    if spp < 1:
        raise ValidationError("preview_render: spp must be >= 1")
    td = scene.trace_data()
    rays = view_ray_grid(view).reshape(-1, 3)
    rays = rays / np.linalg.norm(rays, axis=1, keepdims=True)
    if eye is None:
        if scene.layout is not None:
            c = scene.layout.camera_position()
            eye = np.array([c[0], c[1], scene.layout.height / 2.0])
        else:
            eye = np.zeros(3)
    eye = np.asarray(eye, dtype=np.float64).reshape(3)
    out = np.zeros((len(rays), 3))

    if len(td.caster.v0) == 0:
        out = env_radiance(scene, rays)
        return out.reshape(view.height, view.width, 3).astype(np.float32)

    origins = np.broadcast_to(eye, rays.shape)
    t, tri, points = td.caster.raycast(origins, rays)
    miss = ~np.isfinite(t)
    out[miss] = env_radiance(scene, rays[miss])

    hit_idx = np.flatnonzero(~miss)
    if hit_idx.size:
        portal = _portal_mask(td, tri[hit_idx], points[hit_idx])
        pidx = hit_idx[portal]
        out[pidx] = env_radiance(scene, rays[pidx])
        shade = hit_idx[~portal]
        if shade.size:
            tri_s = tri[shade]
            normals = td.tri_normal[tri_s].copy()
            towards = np.einsum("ij,ij->i", normals, rays[shade]) > 0
            normals[towards] *= -1.0
            starts = points[shade] + normals * 1e-7
            dirs = _cosine_dirs(normals, shade.astype(np.uint64), spp, seed)
            sec_origins = np.repeat(starts, spp, axis=0)
            radiance = _ray_radiance(scene, sec_origins, dirs)
            e_rgb = np.pi * radiance.reshape(len(shade), spp, 3).mean(axis=1)
            e_rgb += _point_emitter_irradiance(scene, starts, normals)
            out[shade] = td.tri_emission[tri_s] + td.tri_albedo[tri_s] / np.pi * e_rgb
    return out.reshape(view.height, view.width, 3).astype(np.float32)


# ------------------------------------------------------------------- export

def export_scene(scene: SceneDescription, out_dir) -> dict:
    """Write scene.json, OBJ meshes and the environment EXR; returns the
    scene.json dict."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "meshes").mkdir(exist_ok=True)
    except OSError as e:
        raise ValidationError(f"export_scene: cannot create {out_dir}: {e}") from e

    doc = {
        "schema_version": SCHEMA_VERSION,
        "orientation_deg": scene.orientation_deg,
        "env": {"path": "env.exr", "calibration": scene.env.calibration},
        "room_materials": {k: v.as_dict() for k, v in sorted(scene.room_materials.items())},
        "placements": [],
        "emitters": [],
    }
    if scene.layout is not None:
        doc["layout"] = layout_to_dict(scene.layout)
    if scene.plan_policy is not None:
        doc["policy"] = scene.plan_policy.value

    for i, placed in enumerate(scene.placements):
        mesh_name = f"meshes/component_{i:03d}.obj"
        write_obj(out_dir / mesh_name, placed.local_mesh)
        e = placed.entry
        m = e.transform.matrix() @ np.diag([e.transform.width_scale, 1.0, 1.0, 1.0])
        doc["placements"].append({
            "component": {
                "name": e.component.name,
                "category": e.component.category,
                "width_m": e.component.width,
                "depth_m": e.component.depth,
                "height_m": e.component.height,
            },
            "mesh": mesh_name,
            "wall": e.wall_index,
            "offset_m": e.offset,
            "transform_4x4_row_major": [float(x) for x in m.reshape(-1)],
            "placement": {
                "theta_z_rad": e.transform.theta_z,
                "t_x_m": e.transform.t_x,
                "t_y_m": e.transform.t_y,
                "width_scale": e.transform.width_scale,
            },
            "materials": {k: v.as_dict() for k, v in sorted(placed.slot_materials.items())},
        })
    for em in scene.emitters:
        if isinstance(em, PointEmitter):
            doc["emitters"].append({"kind": "point",
                                    "position_m": [float(x) for x in em.position],
                                    "power_rgb": [float(x) for x in em.power_rgb]})
        else:
            doc["emitters"].append({"kind": "area",
                                    "corners_m": [[float(x) for x in c] for c in em.corners],
                                    "radiance_rgb": [float(x) for x in em.radiance_rgb]})

    write_exr(out_dir / "env.exr", scene.env.pixels, calibration=scene.env.calibration)
    (out_dir / "scene.json").write_bytes(scene_json_bytes(doc))
    return doc


def scene_json_bytes(doc: dict) -> bytes:
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode()


def import_scene(in_dir) -> SceneDescription:
    """Rebuild a SceneDescription from an exported directory."""
    in_dir = Path(in_dir)
    doc = json.loads((in_dir / "scene.json").read_text())
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValidationError(f"import_scene: unsupported schema_version {doc.get('schema_version')}")
    env_pixels, calibration = read_exr(in_dir / doc["env"]["path"])
    env = HdrPanorama(np.maximum(env_pixels, 0.0), calibration=calibration)
    layout = layout_from_dict(doc["layout"]) if "layout" in doc else None

    placements = []
    for p in doc["placements"]:
        comp = KitchenComponent(
            name=p["component"]["name"],
            category=p["component"]["category"],
            width=p["component"]["width_m"],
            depth=p["component"]["depth_m"],
            height=p["component"]["height_m"],
        )
        local = read_obj(in_dir / p["mesh"])
        m = np.array(p["transform_4x4_row_major"], dtype=np.float64).reshape(4, 4)
        world = local.transformed(m)
        t = PlacementTransform(
            theta_z=p["placement"]["theta_z_rad"],
            t_x=p["placement"]["t_x_m"],
            t_y=p["placement"]["t_y_m"],
            width_scale=p["placement"]["width_scale"],
        )
        entry = PlacementEntry(comp, p["wall"], p["offset_m"], t)
        slots = {k: Material.of(v) for k, v in p["materials"].items()}
        placements.append(PlacedComponent(entry, local, world, slots))

    emitters = []
    for e in doc.get("emitters", []):
        if e["kind"] == "point":
            emitters.append(PointEmitter(e["position_m"], e["power_rgb"]))
        else:
            emitters.append(AreaEmitter(e["corners_m"], e["radiance_rgb"]))

    policy = CornerPolicy(doc["policy"]) if "policy" in doc else None
    return SceneDescription(
        env=env,
        orientation_deg=doc["orientation_deg"],
        layout=layout,
        room_materials={k: Material.of(v) for k, v in doc.get("room_materials", {}).items()},
        placements=tuple(placements),
        emitters=tuple(emitters),
        plan_policy=policy,
    )


def scene_equal(a: SceneDescription, b: SceneDescription, tol: float = 1e-9) -> list:
    """Compare two scenes; returns a list of difference descriptions."""
    diffs = []
    if abs(a.orientation_deg - b.orientation_deg) > tol:
        diffs.append("orientation differs")
    if abs((a.env.calibration or 0) - (b.env.calibration or 0)) > 1e-6:
        diffs.append("env calibration differs")
    if a.env.pixels.shape != b.env.pixels.shape:
        diffs.append("env shape differs")
    elif not np.array_equal(a.env.pixels, b.env.pixels):
        diffs.append("env pixels differ")
    if (a.layout is None) != (b.layout is None):
        diffs.append("layout presence differs")
    elif a.layout is not None:
        if np.abs(a.layout.corners - b.layout.corners).max() > tol:
            diffs.append("layout corners differ")
        if abs(a.layout.height - b.layout.height) > tol:
            diffs.append("layout height differs")
    if len(a.placements) != len(b.placements):
        diffs.append("placement count differs")
    else:
        for i, (pa, pb) in enumerate(zip(a.placements, b.placements)):
            if pa.world_mesh.vertices.shape != pb.world_mesh.vertices.shape:
                diffs.append(f"placement {i}: vertex count differs")
            elif np.abs(pa.world_mesh.vertices - pb.world_mesh.vertices).max() > tol:
                diffs.append(f"placement {i}: vertices differ by "
                             f"{np.abs(pa.world_mesh.vertices - pb.world_mesh.vertices).max():.2e}")
            for slot in pa.slot_materials:
                if slot not in pb.slot_materials or \
                        not pa.slot_materials[slot].same_as(pb.slot_materials[slot]):
                    diffs.append(f"placement {i}: material {slot} differs")
    return diffs
