"""Shared synthetic fixtures: panoramas, luminance fields, rooms, components."""

import json

import numpy as np
import pytest

from panostage.image import LUMINOUS_EFFICACY, HdrPanorama
from panostage.layout import KitchenComponent, RoomLayout
from panostage.mesh import make_box, write_obj
from panostage.projection import OrthographicFisheye, disk_mask, pixel_to_dir


def gray_for_luminance(luminance: float) -> float:
    """Equal-RGB channel value whose luminance is the given cd/m^2."""
    return luminance / LUMINOUS_EFFICACY


def uniform_pano(height: int, luminance: float, calibration=None) -> HdrPanorama:
    v = gray_for_luminance(luminance)
    pix = np.full((height, 2 * height, 3), v, dtype=np.float32)
    return HdrPanorama(pix, calibration=calibration)


def pano_from_luminance_fn(height: int, lum_fn) -> HdrPanorama:
    """Panorama whose luminance at each pixel center equals lum_fn(d) for the
    unit direction d of that pixel; channels are equal RGB."""
    w = 2 * height
    xs = np.arange(w) + 0.5
    ys = np.arange(height) + 0.5
    X, Y = np.meshgrid(xs, ys)
    theta, phi = pixel_to_dir(X, Y, w, height)
    d = np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1)
    lum = lum_fn(d)
    pix = np.repeat((lum / LUMINOUS_EFFICACY)[..., None], 3, axis=-1)
    return HdrPanorama(pix.astype(np.float32))


def fisheye_from_field(side: int, lum_fn_uv) -> OrthographicFisheye:
    """Analytic orthographic fisheye: luminance = lum_fn_uv(u, v) at pixel
    centers inside the disk (u right, v up, normalized radius)."""
    c = (np.arange(side) + 0.5) / side * 2.0 - 1.0
    u = np.broadcast_to(c, (side, side))
    v = np.broadcast_to(-c[:, None], (side, side))
    mask = disk_mask(side)
    lum = np.where(mask, lum_fn_uv(u, v), 0.0)
    pix = np.repeat((lum / LUMINOUS_EFFICACY)[..., None], 3, axis=-1)
    return OrthographicFisheye(pix.astype(np.float32), mask)


def quadrature_illuminance(lum_fn_uv, n_theta: int = 1000, n_phi: int = 1000) -> float:
    """Independent oracle: midpoint quadrature of the hemispherical
    cosine-weighted luminance integral, with the field given in disk coords
    u = sin(t)cos(p), v = sin(t)sin(p)."""
    th = (np.arange(n_theta) + 0.5) / n_theta * (np.pi / 2.0)
    ph = (np.arange(n_phi) + 0.5) / n_phi * (2.0 * np.pi)
    TH, PH = np.meshgrid(th, ph, indexing="ij")
    u = np.sin(TH) * np.cos(PH)
    v = np.sin(TH) * np.sin(PH)
    L = lum_fn_uv(u, v)
    w = np.sin(TH) * np.cos(TH)
    cell = (np.pi / 2.0 / n_theta) * (2.0 * np.pi / n_phi)
    return float((L * w).sum() * cell)


def random_smooth_field(rng: np.random.Generator):
    """Random positive band-limited field over the unit disk."""
    base = rng.uniform(50.0, 150.0)
    n_terms = 3
    amps = rng.uniform(5.0, base / (2 * n_terms), n_terms)
    freq = rng.uniform(-3.0, 3.0, (n_terms, 2))
    phase = rng.uniform(0.0, 2 * np.pi, n_terms)

    def fn(u, v):
        total = np.full_like(np.asarray(u, dtype=np.float64), base)
        for a, (fu, fv), p in zip(amps, freq, phase):
            total = total + a * np.cos(fu * u + fv * v + p)
        return total

    return fn


def rectangle_room(width=5.0, depth=4.0, height=2.7, kitchen_walls=(), windows=(),
                   camera=None) -> RoomLayout:
    corners = np.array([[0.0, 0.0], [width, 0.0], [width, depth], [0.0, depth]])
    return RoomLayout(corners, height, list(kitchen_walls), list(windows), camera)


def l_shaped_room(height=2.7, kitchen_walls=()) -> RoomLayout:
    corners = np.array([
        [0.0, 0.0], [6.0, 0.0], [6.0, 3.0], [3.0, 3.0], [3.0, 5.0], [0.0, 5.0],
    ])
    return RoomLayout(corners, height, list(kitchen_walls))


def component(name="cabinet", width=0.6, depth=0.6, height=0.9, category="Cabinet"):
    return KitchenComponent(name=name, category=category, width=width, depth=depth,
                            height=height)


def write_component_library(directory, specs):
    """specs: list of (name, category, w, d, h); writes JSON + OBJ pairs."""
    directory.mkdir(parents=True, exist_ok=True)
    for name, category, w, d, h in specs:
        mesh = make_box(w, d, h, slots={"countertop": "top", "handles": "front"})
        write_obj(directory / f"{name}.obj", mesh)
        meta = {
            "name": name,
            "category": category,
            "width_m": w,
            "depth_m": d,
            "height_m": h,
            "mesh": f"{name}.obj",
            "material_slots": ["body", "countertop", "handles"],
        }
        (directory / f"{name}.json").write_text(json.dumps(meta, indent=2))


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
