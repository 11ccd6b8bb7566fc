"""2-D polygon utilities used by the layout solver and plan validator."""

from __future__ import annotations

import numpy as np

from panostage.errors import ValidationError


def polygon_area(corners: np.ndarray) -> float:
    """Signed shoelace area; positive for counter-clockwise order."""
    c = np.asarray(corners, dtype=np.float64)
    x, y = c[:, 0], c[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_centroid(corners: np.ndarray) -> np.ndarray:
    c = np.asarray(corners, dtype=np.float64)
    x, y = c[:, 0], c[:, 1]
    cross = x * np.roll(y, -1) - np.roll(x, -1) * y
    area = 0.5 * np.sum(cross)
    if abs(area) < 1e-12:
        raise ValidationError("polygon_centroid: degenerate polygon")
    cx = np.sum((x + np.roll(x, -1)) * cross) / (6.0 * area)
    cy = np.sum((y + np.roll(y, -1)) * cross) / (6.0 * area)
    return np.array([cx, cy])


def _segments_properly_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def is_simple_polygon(corners: np.ndarray) -> bool:
    """True when no two non-adjacent edges properly intersect."""
    c = np.asarray(corners, dtype=np.float64)
    n = len(c)
    for i in range(n):
        a1, a2 = c[i], c[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_properly_intersect(a1, a2, c[j], c[(j + 1) % n]):
                return False
    return True


def point_in_polygon(point, corners: np.ndarray, tol: float = 1e-9) -> bool:
    """Even-odd test; points within tol of an edge count as inside."""
    p = np.asarray(point, dtype=np.float64)
    c = np.asarray(corners, dtype=np.float64)
    n = len(c)
    inside = False
    for i in range(n):
        a, b = c[i], c[(i + 1) % n]
        e = b - a
        d = p - a
        L2 = e @ e
        t = np.clip((d @ e) / L2, 0.0, 1.0) if L2 > 0 else 0.0
        if np.linalg.norm(d - t * e) <= tol:
            return True
        if (a[1] > p[1]) != (b[1] > p[1]):
            x_int = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0])
            if p[0] < x_int:
                inside = not inside
    return inside


def clip_convex(subject: np.ndarray, clipper: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman: clip `subject` by convex CCW `clipper`."""
    output = [np.asarray(p, dtype=np.float64) for p in subject]
    clip = np.asarray(clipper, dtype=np.float64)
    n = len(clip)
    for i in range(n):
        a, b = clip[i], clip[(i + 1) % n]
        edge = b - a
        if not output:
            break
        inputs, output = output, []
        for j, cur in enumerate(inputs):
            prev = inputs[j - 1]
            cur_in = edge[0] * (cur[1] - a[1]) - edge[1] * (cur[0] - a[0]) >= 0
            prev_in = edge[0] * (prev[1] - a[1]) - edge[1] * (prev[0] - a[0]) >= 0
            if cur_in != prev_in:
                d = cur - prev
                denom = edge[0] * d[1] - edge[1] * d[0]
                if abs(denom) > 1e-30:
                    t = (edge[0] * (a[1] - prev[1]) - edge[1] * (a[0] - prev[0])) / denom
                    output.append(prev + t * d)
            if cur_in:
                output.append(cur)
    return np.array(output) if output else np.zeros((0, 2))


def convex_overlap_area(poly_a: np.ndarray, poly_b: np.ndarray) -> float:
    """Intersection area of two convex CCW polygons."""
    inter = clip_convex(poly_a, poly_b)
    if len(inter) < 3:
        return 0.0
    return abs(polygon_area(inter))


def ray_segment_hit(origin, direction, seg_a, seg_b):
    """Distance t >= 0 along the ray to the segment, or None."""
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    a = np.asarray(seg_a, dtype=np.float64)
    b = np.asarray(seg_b, dtype=np.float64)
    e = b - a
    denom = d[0] * e[1] - d[1] * e[0]
    if abs(denom) < 1e-15:
        return None
    rel = a - o
    t = (rel[0] * e[1] - rel[1] * e[0]) / denom
    s = (rel[0] * d[1] - rel[1] * d[0]) / denom
    if t >= 0.0 and -1e-12 <= s <= 1.0 + 1e-12:
        return float(t)
    return None


def triangulate_polygon(corners: np.ndarray) -> np.ndarray:
    """Ear-clipping triangulation of a simple CCW polygon -> (n-2, 3) indices."""
    c = np.asarray(corners, dtype=np.float64)
    n = len(c)
    if n < 3:
        raise ValidationError("triangulate_polygon: need >= 3 corners")
    idx = list(range(n))
    tris = []
    guard = 0
    while len(idx) > 3 and guard < 10 * n * n:
        guard += 1
        for k in range(len(idx)):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % len(idx)]
            a, b, p = c[i0], c[i1], c[i2]
            cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
            if cross <= 1e-14:
                continue  # reflex or degenerate corner
            ear = True
            for other in idx:
                if other in (i0, i1, i2):
                    continue
                if _point_in_triangle(c[other], a, b, p):
                    ear = False
                    break
            if ear:
                tris.append((i0, i1, i2))
                idx.pop(k)
                break
        else:
            raise ValidationError("triangulate_polygon: polygon is not simple/CCW")
    tris.append(tuple(idx))
    return np.array(tris, dtype=np.int64)


def _point_in_triangle(p, a, b, c) -> bool:
    def sign(p1, p2, p3):
        return (p1[0] - p3[0]) * (p2[1] - p3[1]) - (p2[0] - p3[0]) * (p1[1] - p3[1])

    d1, d2, d3 = sign(p, a, b), sign(p, b, c), sign(p, c, a)
    has_neg = (d1 < -1e-14) or (d2 < -1e-14) or (d3 < -1e-14)
    has_pos = (d1 > 1e-14) or (d2 > 1e-14) or (d3 > 1e-14)
    return not (has_neg and has_pos)
