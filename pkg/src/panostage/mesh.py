"""Triangle meshes, OBJ round trip, and a vectorized ray caster.

Meshes carry a face->slot assignment (from OBJ `usemtl` groups) so placed
components can be re-materialed per slot. The caster is brute force over
triangles, which is plenty for room shells plus a handful of boxes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from panostage.errors import ValidationError

_EPS = 1e-12


@dataclass
class TriangleMesh:
    vertices: np.ndarray                 # (v, 3) float64
    faces: np.ndarray                    # (f, 3) int64
    face_slots: np.ndarray | None = None  # (f,) slot index into slot_names
    slot_names: tuple = ("body",)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.faces.size and self.faces.max() >= len(self.vertices):
            raise ValidationError("TriangleMesh: face index out of range")
        if self.face_slots is None:
            self.face_slots = np.zeros(len(self.faces), dtype=np.int64)
        else:
            self.face_slots = np.asarray(self.face_slots, dtype=np.int64)

    def bounds(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def transformed(self, matrix: np.ndarray) -> "TriangleMesh":
        """Apply a 4x4 homogeneous transform to every vertex."""
        m = np.asarray(matrix, dtype=np.float64)
        v = self.vertices @ m[:3, :3].T + m[:3, 3]
        return TriangleMesh(v, self.faces.copy(), self.face_slots.copy(), self.slot_names)


def make_box(width: float, depth: float, height: float,
             slots: dict | None = None) -> TriangleMesh:
    """Axis-aligned box in component-local frame: back face on y=0 facing -y,
    x centered on the anchor, z up from the floor.

    slots maps slot name -> face selector among {"front","back","left",
    "right","top","bottom"}; unlisted sides belong to "body".
    """
    hw = width / 2.0
    v = np.array([
        [-hw, 0.0, 0.0], [hw, 0.0, 0.0], [hw, depth, 0.0], [-hw, depth, 0.0],
        [-hw, 0.0, height], [hw, 0.0, height], [hw, depth, height], [-hw, depth, height],
    ])
    quads = {
        "bottom": (0, 3, 2, 1),
        "top": (4, 5, 6, 7),
        "back": (0, 1, 5, 4),
        "front": (2, 3, 7, 6),
        "left": (3, 0, 4, 7),
        "right": (1, 2, 6, 5),
    }
    side_slot = {}
    names = ["body"]
    for slot, sides in (slots or {}).items():
        if slot not in names:
            names.append(slot)
        for s in ([sides] if isinstance(sides, str) else sides):
            side_slot[s] = names.index(slot)
    faces, face_slots = [], []
    for side, (a, b, c, d) in quads.items():
        s = side_slot.get(side, 0)
        faces += [(a, b, c), (a, c, d)]
        face_slots += [s, s]
    return TriangleMesh(v, np.array(faces), np.array(face_slots), tuple(names))


# ------------------------------------------------------------------- OBJ io

def write_obj(path, mesh: TriangleMesh) -> None:
    lines = []
    for v in mesh.vertices:
        lines.append("v %.17g %.17g %.17g" % (v[0], v[1], v[2]))
    current = None
    for f, s in zip(mesh.faces, mesh.face_slots):
        if s != current:
            lines.append(f"usemtl {mesh.slot_names[s]}")
            current = s
        lines.append("f %d %d %d" % (f[0] + 1, f[1] + 1, f[2] + 1))
    Path(path).write_text("\n".join(lines) + "\n")


def read_obj(path) -> TriangleMesh:
    vertices, faces, face_slots = [], [], []
    slot_names = ["body"]
    current = 0
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ValidationError(f"read_obj: unreadable mesh {path}: {e}") from e
    for line in text.splitlines():
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            vertices.append([float(x) for x in parts[1:4]])
        elif parts[0] == "usemtl":
            name = parts[1] if len(parts) > 1 else "body"
            if name not in slot_names:
                slot_names.append(name)
            current = slot_names.index(name)
        elif parts[0] == "f":
            idx = [int(p.split("/")[0]) - 1 for p in parts[1:]]
            for k in range(1, len(idx) - 1):  # fan for quads and beyond
                faces.append((idx[0], idx[k], idx[k + 1]))
                face_slots.append(current)
    if not vertices:
        raise ValidationError(f"read_obj: no vertices in {path}")
    return TriangleMesh(np.array(vertices), np.array(faces, dtype=np.int64),
                        np.array(face_slots, dtype=np.int64), tuple(slot_names))


# ---------------------------------------------------------------- ray casting

@dataclass
class RaycastScene:
    """Flattened triangle soup with per-triangle surface ids."""

    v0: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    surface_ids: np.ndarray

    @staticmethod
    def build(meshes_with_ids) -> "RaycastScene":
        v0s, e1s, e2s, ids = [], [], [], []
        for mesh, sid in meshes_with_ids:
            if len(mesh.faces) == 0:
                continue
            tri = mesh.vertices[mesh.faces]
            v0s.append(tri[:, 0])
            e1s.append(tri[:, 1] - tri[:, 0])
            e2s.append(tri[:, 2] - tri[:, 0])
            ids.append(np.full(len(mesh.faces), sid, dtype=np.int64))
        if not v0s:
            z = np.zeros((0, 3))
            return RaycastScene(z, z.copy(), z.copy(), np.zeros(0, dtype=np.int64))
        return RaycastScene(np.concatenate(v0s), np.concatenate(e1s),
                            np.concatenate(e2s), np.concatenate(ids))

    def raycast(self, origins: np.ndarray, directions: np.ndarray, t_min: float = 1e-9):
        """Nearest hit per ray (Moller-Trumbore, vectorized over rays).

        Returns (t, triangle_index, point); misses get t = inf, index = -1.
        The triangle index follows build() concatenation order.
        """
        o = np.atleast_2d(np.asarray(origins, dtype=np.float64))
        d = np.atleast_2d(np.asarray(directions, dtype=np.float64))
        n_rays = len(d)
        if len(o) == 1 and n_rays > 1:
            o = np.broadcast_to(o, d.shape)
        best_t = np.full(n_rays, np.inf)
        best_tri = np.full(n_rays, -1, dtype=np.int64)
        for i in range(len(self.v0)):
            e1, e2, v0 = self.e1[i], self.e2[i], self.v0[i]
            pvec = np.cross(d, e2[None, :])
            det = pvec @ e1
            ok = np.abs(det) > _EPS
            inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
            tvec = o - v0
            u = np.einsum("ij,ij->i", tvec, pvec) * inv
            qvec = np.cross(tvec, e1)
            v = np.einsum("ij,ij->i", qvec, d) * inv
            t = (qvec @ e2) * inv
            hit = ok & (u >= -1e-12) & (v >= -1e-12) & (u + v <= 1 + 1e-12) & (t > t_min) & (t < best_t)
            best_t = np.where(hit, t, best_t)
            best_tri = np.where(hit, i, best_tri)
        points = o + np.where(np.isfinite(best_t), best_t, 0.0)[:, None] * d
        return best_t, best_tri, points

    def normals(self) -> np.ndarray:
        """Unit geometric normal per triangle (winding side)."""
        n = np.cross(self.e1, self.e2)
        length = np.linalg.norm(n, axis=1, keepdims=True)
        return n / np.where(length > 0, length, 1.0)
