"""Kitchen wall selection, I/L/U typology, and placement along walls.

Rooms are CCW floor polygons extruded to a flat ceiling. Placement walks
the flagged wall run in polygon order, laying components side by side in
the user's sequence; the run on each wall either stretches its final
component to the corner (ScaleLast) or leaves the remainder empty
(LeaveGap). All transforms act in the xy plane: a z rotation aligning the
component's back to the wall plus a translation of its back-bottom-center
anchor onto the wall line.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from panostage.errors import ValidationError
from panostage.geometry import (
    convex_overlap_area,
    is_simple_polygon,
    point_in_polygon,
    polygon_area,
    polygon_centroid,
    ray_segment_hit,
)
from panostage.mesh import TriangleMesh, make_box, read_obj

WIDTH_SCALE_MIN = 0.5
WIDTH_SCALE_MAX = 1.5
FLUSH_TOL = 1e-9


class LayoutType(Enum):
    I = 1
    L = 2
    U = 3


class CornerPolicy(Enum):
    SCALE_LAST = "scale-last"
    LEAVE_GAP = "leave-gap"


@dataclass(frozen=True)
class Wall:
    start: np.ndarray
    end: np.ndarray

    @property
    def direction(self) -> np.ndarray:
        d = self.end - self.start
        return d / np.linalg.norm(d)

    @property
    def inward_normal(self) -> np.ndarray:
        d = self.direction
        return np.array([-d[1], d[0]])  # left of the edge = interior for CCW

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.end - self.start))


@dataclass
class RoomLayout:
    corners: np.ndarray                    # (n, 2) CCW, meters
    height: float                          # meters
    kitchen_walls: list = field(default_factory=list)   # flagged wall indices
    windows: list = field(default_factory=list)         # WindowRect list
    camera: np.ndarray | None = None       # capture position, layout frame

    def __post_init__(self):
        self.corners = np.asarray(self.corners, dtype=np.float64).reshape(-1, 2)
        if len(self.corners) < 3:
            raise ValidationError("RoomLayout: need >= 3 corners")
        if polygon_area(self.corners) <= 0:
            raise ValidationError("RoomLayout: corners must be counter-clockwise")
        if not is_simple_polygon(self.corners):
            raise ValidationError("RoomLayout: polygon is self-intersecting")
        if not (self.height > 0):
            raise ValidationError("RoomLayout: height must be > 0")
        self.kitchen_walls = sorted(int(i) for i in self.kitchen_walls)
        for i in self.kitchen_walls:
            if not (0 <= i < len(self.corners)):
                raise ValidationError(f"RoomLayout: wall index {i} out of range")
        if self.camera is not None:
            self.camera = np.asarray(self.camera, dtype=np.float64).reshape(2)

    @property
    def n_walls(self) -> int:
        return len(self.corners)

    def wall(self, i: int) -> Wall:
        return Wall(self.corners[i], self.corners[(i + 1) % self.n_walls])

    def walls(self):
        return [self.wall(i) for i in range(self.n_walls)]

    def camera_position(self) -> np.ndarray:
        return self.camera if self.camera is not None else polygon_centroid(self.corners)


@dataclass(frozen=True)
class WindowRect:
    """Opening on a wall plane: arc-length span [s0, s1], height span [z0, z1]."""

    wall: int
    s0: float
    s1: float
    z0: float
    z1: float

    def __post_init__(self):
        if not (self.s1 > self.s0 and self.z1 > self.z0):
            raise ValidationError("WindowRect: spans must be positive")


@dataclass(frozen=True)
class KitchenComponent:
    """Parametric cabinet/appliance footprint with an optional mesh on disk.

    The local frame puts the anchor (back-bottom-center) at the origin:
    width along x, depth along +y into the room, height along z; the back
    face lies in the y=0 plane.
    """

    name: str
    category: str
    width: float
    depth: float
    height: float
    mesh_path: str | None = None
    material_slots: tuple = ("body",)

    def __post_init__(self):
        for dim in ("width", "depth", "height"):
            if not (float(getattr(self, dim)) > 0):
                raise ValidationError(f"KitchenComponent {self.name}: {dim} must be > 0")

    def load_mesh(self) -> TriangleMesh:
        if self.mesh_path is None:
            return make_box(self.width, self.depth, self.height)
        mesh = read_obj(self.mesh_path)
        lo, hi = mesh.bounds()
        if abs(lo[1]) > 1e-6 or abs(lo[2]) > 1e-6 or abs(lo[0] + hi[0]) > 1e-6:
            raise ValidationError(
                f"KitchenComponent {self.name}: mesh anchor must be back-bottom-center"
            )
        return mesh


@dataclass(frozen=True)
class PlacementTransform:
    """Rigid xy-plane motion plus a width-only scale applied first."""

    theta_z: float
    t_x: float
    t_y: float
    width_scale: float = 1.0

    def __post_init__(self):
        if not (WIDTH_SCALE_MIN <= self.width_scale <= WIDTH_SCALE_MAX):
            raise ValidationError(
                f"PlacementTransform: width_scale {self.width_scale} outside "
                f"[{WIDTH_SCALE_MIN}, {WIDTH_SCALE_MAX}]"
            )

    def matrix(self) -> np.ndarray:
        """4x4 (column-vector convention) rotation+translation, no scale."""
        c, s = math.cos(self.theta_z), math.sin(self.theta_z)
        return np.array([
            [c, -s, 0.0, self.t_x],
            [s, c, 0.0, self.t_y],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])


@dataclass(frozen=True)
class PlacementEntry:
    component: KitchenComponent
    wall_index: int
    offset: float              # arc-length of the back-left corner along the wall
    transform: PlacementTransform

    @property
    def effective_width(self) -> float:
        return self.component.width * self.transform.width_scale


@dataclass(frozen=True)
class PlacementPlan:
    entries: tuple
    policy: CornerPolicy

    def footprints(self):
        """World-space (4, 2) footprint rectangles, CCW."""
        out = []
        for e in self.entries:
            w = e.effective_width / 2.0
            local = np.array([[-w, 0.0], [w, 0.0], [w, e.component.depth], [-w, e.component.depth]])
            c, s = math.cos(e.transform.theta_z), math.sin(e.transform.theta_z)
            rot = np.array([[c, -s], [s, c]])
            out.append(local @ rot.T + np.array([e.transform.t_x, e.transform.t_y]))
        return out


# ----------------------------------------------------------- wall selection

def wall_index_for_columns(layout: RoomLayout, width: int) -> np.ndarray:
    """Ray-cast each panorama column's azimuth from the camera; returns the
    nearest wall index per column (-1 if the ray escapes the polygon)."""
    cam = layout.camera_position()
    cols = (np.arange(width) + 0.5 - width / 2.0) / width * 2.0 * np.pi
    hits = np.full(width, -1, dtype=np.int64)
    walls = layout.walls()
    for j, phi in enumerate(cols):
        d = (math.cos(phi), math.sin(phi))
        best_t, best_i = math.inf, -1
        for i, wall in enumerate(walls):
            t = ray_segment_hit(cam, d, wall.start, wall.end)
            if t is not None and t < best_t:
                best_t, best_i = t, i
        hits[j] = best_i
    return hits


def select_kitchen_walls(layout: RoomLayout, kitchen_mask: np.ndarray,
                         threshold: float = 0.5) -> RoomLayout:
    """Flag walls whose subtended azimuth columns are mostly masked."""
    mask = np.asarray(kitchen_mask, dtype=bool).reshape(-1)
    if mask.size == 0:
        raise ValidationError("select_kitchen_walls: empty mask")
    if not mask.any():
        raise ValidationError("select_kitchen_walls: no kitchen wall (mask all false)")
    owners = wall_index_for_columns(layout, mask.size)
    flagged = []
    for i in range(layout.n_walls):
        cols = owners == i
        n = int(cols.sum())
        if n and mask[cols].sum() / n > threshold:
            flagged.append(i)
    if not flagged:
        raise ValidationError("select_kitchen_walls: no wall exceeds the mask threshold")
    return RoomLayout(layout.corners.copy(), layout.height, flagged,
                      list(layout.windows), layout.camera)


def _contiguous_run(layout: RoomLayout) -> list:
    """Kitchen wall indices ordered along the polygon; errors if broken."""
    flags = layout.kitchen_walls
    if not flags:
        raise ValidationError("layout has no kitchen walls flagged")
    n = layout.n_walls
    flagged = set(flags)
    if len(flags) == n:
        return list(flags)
    # find a flagged wall whose predecessor is not flagged: the run start
    starts = [i for i in flags if (i - 1) % n not in flagged]
    if len(starts) != 1:
        raise ValidationError("kitchen walls are not contiguous")
    run = [starts[0]]
    while (run[-1] + 1) % n in flagged:
        run.append((run[-1] + 1) % n)
    if len(run) != len(flags):
        raise ValidationError("kitchen walls are not contiguous")
    return run


def classify_layout(layout: RoomLayout) -> LayoutType:
    """1 contiguous kitchen wall -> I, 2 -> L, 3 -> U."""
    run = _contiguous_run(layout)
    if len(run) > 3:
        raise ValidationError(f"unsupported kitchen layout: {len(run)} walls flagged")
    return LayoutType(len(run))


# --------------------------------------------------------------- placement

def _transform_for(wall: Wall, center_s: float, width_scale: float) -> PlacementTransform:
    n = wall.inward_normal
    theta_z = math.atan2(-n[0], n[1])  # rotates local +y onto the inward normal
    anchor = wall.start + wall.direction * center_s
    return PlacementTransform(theta_z=theta_z, t_x=float(anchor[0]), t_y=float(anchor[1]),
                              width_scale=width_scale)


def place_components(layout: RoomLayout, components: list,
                     policy: CornerPolicy = CornerPolicy.SCALE_LAST) -> PlacementPlan:
    """Lay out `components` (already in sequence order) along the kitchen run.

    Greedy wall fill: a component that no longer fits moves to the next
    wall; that wall's run starts inset by the previous component's depth so
    the corner doesn't interpenetrate. Under ScaleLast the last component
    on each wall is stretched to end exactly at the corner.
    """
    classify_layout(layout)  # validates the run
    if not components:
        raise ValidationError("place_components: empty component sequence")
    run = _contiguous_run(layout)
    entries = []
    wall_pos = 0  # index into run
    cursor = 0.0
    pending = list(components)
    wall_entries = []
    last_placed_depth = 0.0

    def close_wall(wall_i: int, stretch_to: float | None):
        nonlocal wall_entries
        if wall_entries and stretch_to is not None:
            last = wall_entries[-1]
            residual = stretch_to - last.offset
            scale = residual / last.component.width
            if not (WIDTH_SCALE_MIN <= scale <= WIDTH_SCALE_MAX):
                raise ValidationError(
                    f"place_components: corner fill on wall {wall_i} needs width_scale "
                    f"{scale:.3f}, outside [{WIDTH_SCALE_MIN}, {WIDTH_SCALE_MAX}]"
                )
            wall = layout.wall(wall_i)
            wall_entries[-1] = PlacementEntry(
                last.component, wall_i, last.offset,
                _transform_for(wall, last.offset + residual / 2.0, scale),
            )
        entries.extend(wall_entries)
        wall_entries = []

    while pending:
        comp = pending[0]
        wall_i = run[wall_pos]
        wall = layout.wall(wall_i)
        if cursor + comp.width <= wall.length + 1e-9:
            wall_entries.append(PlacementEntry(
                comp, wall_i, cursor,
                _transform_for(wall, cursor + comp.width / 2.0, 1.0),
            ))
            cursor += comp.width
            last_placed_depth = comp.depth
            pending.pop(0)
            continue
        # component does not fit on this wall; continue the run on the next one
        if wall_pos + 1 >= len(run):
            raise ValidationError(
                f"place_components: component {comp.name!r} ({comp.width} m) overflows "
                f"the kitchen wall run"
            )
        close_wall(wall_i, wall.length if policy is CornerPolicy.SCALE_LAST else None)
        cursor = last_placed_depth  # inset past the corner occupied by the previous body
        wall_pos += 1
    close_wall(run[wall_pos], layout.wall(run[wall_pos]).length
               if policy is CornerPolicy.SCALE_LAST else None)
    return PlacementPlan(tuple(entries), policy)


def apply_transform(mesh: TriangleMesh, transform: PlacementTransform) -> TriangleMesh:
    """Width-scale in the local frame, then rotate about z and translate."""
    v = mesh.vertices.copy()
    v[:, 0] *= transform.width_scale
    m = transform.matrix()
    return TriangleMesh(v, mesh.faces.copy(), mesh.face_slots.copy(),
                        mesh.slot_names).transformed(m)


@dataclass(frozen=True)
class PlanReport:
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_plan(plan: PlacementPlan, layout: RoomLayout,
                  overlap_tol: float = 1e-9, flush_tol: float = FLUSH_TOL) -> PlanReport:
    """Check footprints: pairwise overlap, containment, back-face flushness."""
    violations = []
    prints = plan.footprints()
    for i in range(len(prints)):
        for j in range(i + 1, len(prints)):
            area = convex_overlap_area(prints[i], prints[j])
            if area > overlap_tol:
                violations.append(
                    f"overlap: entries {i} and {j} share {area:.3e} m^2 of footprint")
    for i, (entry, fp) in enumerate(zip(plan.entries, prints)):
        for corner in fp:
            if not point_in_polygon(corner, layout.corners, tol=1e-6):
                violations.append(
                    f"containment: entry {i} corner ({corner[0]:.3f}, {corner[1]:.3f}) "
                    f"outside the floor polygon")
                break
        wall = layout.wall(entry.wall_index)
        back = fp[:2]  # back edge corners
        n = wall.inward_normal
        d = max(abs(float((p - wall.start) @ n)) for p in back)
        if d > flush_tol:
            violations.append(f"flush: entry {i} back face is {d:.3e} m off the wall plane")
    return PlanReport(tuple(violations))


# ---------------------------------------------------------------- file io

def layout_to_dict(layout: RoomLayout) -> dict:
    out = {
        "corners_m": [[float(x), float(y)] for x, y in layout.corners],
        "height_m": float(layout.height),
        "kitchen_walls": list(layout.kitchen_walls),
    }
    if layout.windows:
        out["windows"] = [
            {"wall": w.wall, "s0_m": w.s0, "s1_m": w.s1, "z0_m": w.z0, "z1_m": w.z1}
            for w in layout.windows
        ]
    if layout.camera is not None:
        out["camera_m"] = [float(layout.camera[0]), float(layout.camera[1])]
    return out


def layout_from_dict(data: dict) -> RoomLayout:
    try:
        windows = [WindowRect(int(w["wall"]), float(w["s0_m"]), float(w["s1_m"]),
                              float(w["z0_m"]), float(w["z1_m"]))
                   for w in data.get("windows", [])]
        return RoomLayout(
            corners=np.array(data["corners_m"], dtype=np.float64),
            height=float(data["height_m"]),
            kitchen_walls=list(data.get("kitchen_walls", [])),
            windows=windows,
            camera=np.array(data["camera_m"]) if "camera_m" in data else None,
        )
    except (KeyError, TypeError) as e:
        raise ValidationError(f"layout JSON missing/invalid field: {e}") from e


def load_layout(path) -> RoomLayout:
    return layout_from_dict(json.loads(Path(path).read_text()))


def save_layout(path, layout: RoomLayout) -> None:
    Path(path).write_text(json.dumps(layout_to_dict(layout), indent=2, sort_keys=True) + "\n")


def load_component(meta_path) -> KitchenComponent:
    meta_path = Path(meta_path)
    data = json.loads(meta_path.read_text())
    try:
        mesh_path = data.get("mesh")
        return KitchenComponent(
            name=data.get("name", meta_path.stem),
            category=data["category"],
            width=float(data["width_m"]),
            depth=float(data["depth_m"]),
            height=float(data["height_m"]),
            mesh_path=str(meta_path.parent / mesh_path) if mesh_path else None,
            material_slots=tuple(data.get("material_slots", ["body"])),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"component JSON {meta_path}: {e}") from e


def load_component_library(directory) -> dict:
    lib = {}
    for meta in sorted(Path(directory).glob("*.json")):
        comp = load_component(meta)
        lib[comp.name] = comp
    if not lib:
        raise ValidationError(f"load_component_library: no components in {directory}")
    return lib


def plan_to_dict(plan: PlacementPlan) -> dict:
    return {
        "policy": plan.policy.value,
        "entries": [
            {
                "component": e.component.name,
                "wall": e.wall_index,
                "offset_m": e.offset,
                "theta_z_rad": e.transform.theta_z,
                "t_x_m": e.transform.t_x,
                "t_y_m": e.transform.t_y,
                "width_scale": e.transform.width_scale,
            }
            for e in plan.entries
        ],
    }


def plan_to_json_bytes(plan: PlacementPlan) -> bytes:
    """Canonical serialization; CLI and service must emit identical bytes."""
    return (json.dumps(plan_to_dict(plan), indent=2, sort_keys=True) + "\n").encode()
