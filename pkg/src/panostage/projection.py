"""Direction/pixel mappings between equirectangular, fisheye and perspective.

Conventions (shared by every projection here):
  - world frame: +z up, +x is the front lens axis, +y to the image right
    of the panorama center;
  - theta is the zenith angle (0 = straight up), phi the azimuth with
    phi = 0 on the front axis, increasing toward +y;
  - equirect columns span azimuth (center column = front axis), rows span
    zenith (top row theta = 0); continuous pixel coords put (w/2, h/2) on
    the front horizon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from panostage.errors import ValidationError
from panostage.image import HdrPanorama

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SphericalDirection:
    """Zenith angle theta in [0, pi], azimuth phi in [0, 2*pi)."""

    theta: float
    phi: float

    def __post_init__(self):
        if not (0.0 <= self.theta <= np.pi):
            raise ValidationError(f"theta out of [0, pi]: {self.theta}")
        if not (0.0 <= self.phi < TWO_PI):
            raise ValidationError(f"phi out of [0, 2*pi): {self.phi}")

    def to_unit(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.array([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])

    @staticmethod
    def from_unit(v) -> "SphericalDirection":
        v = np.asarray(v, dtype=np.float64)
        v = v / np.linalg.norm(v)
        theta = float(np.arccos(np.clip(v[2], -1.0, 1.0)))
        phi = float(np.arctan2(v[1], v[0])) % TWO_PI
        return SphericalDirection(theta, phi)


@dataclass(frozen=True)
class PerspectiveView:
    """Gnomonic view: horizontal fov (deg), yaw/pitch (deg), output size."""

    fov: float
    yaw: float
    pitch: float
    width: int
    height: int

    def __post_init__(self):
        if not (0.0 < self.fov < 180.0):
            raise ValidationError(f"fov must be in (0, 180), got {self.fov}")
        if abs(self.pitch) > 90.0:
            raise ValidationError(f"|pitch| must be <= 90, got {self.pitch}")
        if self.width < 1 or self.height < 1:
            raise ValidationError("view size must be positive")


@dataclass(frozen=True)
class OrthographicFisheye:
    """Front-hemisphere image with radius = sin(angle from the front axis).

    Pixels outside the unit disk are invalid and excluded from statistics.
    """

    pixels: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        pix = np.asarray(self.pixels, dtype=np.float32)
        mask = np.asarray(self.mask, dtype=bool)
        if pix.ndim != 3 or pix.shape[2] != 3 or pix.shape[0] != pix.shape[1]:
            raise ValidationError(f"OrthographicFisheye: expected square (s, s, 3), got {pix.shape}")
        if mask.shape != pix.shape[:2]:
            raise ValidationError("OrthographicFisheye: mask shape mismatch")
        pix = np.ascontiguousarray(pix)
        pix.flags.writeable = False
        mask = np.ascontiguousarray(mask)
        mask.flags.writeable = False
        object.__setattr__(self, "pixels", pix)
        object.__setattr__(self, "mask", mask)

    @property
    def side(self) -> int:
        return self.pixels.shape[0]


def disk_mask(side: int) -> np.ndarray:
    """Valid-disk mask: pixel centers with normalized radius <= 1."""
    u, v = _disk_coords(side)
    return u * u + v * v <= 1.0


def _disk_coords(side: int):
    c = (np.arange(side, dtype=np.float64) + 0.5) / side * 2.0 - 1.0
    u = np.broadcast_to(c, (side, side))          # +u to the right
    v = np.broadcast_to(-c[:, None], (side, side))  # +v up
    return u, v


# ------------------------------------------------------- direction <-> pixel

def dir_to_pixel(theta, phi, w: int, h: int):
    """Continuous equirect coords; (w/2, h/2) is the front horizon."""
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    x = (w / 2.0 + phi / TWO_PI * w) % w
    y = theta / np.pi * h
    return x, y


def pixel_to_dir(x, y, w: int, h: int):
    """Inverse of dir_to_pixel; returns (theta, phi) arrays."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    theta = y / h * np.pi
    phi = ((x - w / 2.0) / w * TWO_PI) % TWO_PI
    return theta, phi


def sample_equirect(pixels: np.ndarray, x, y, wrap: bool = True) -> np.ndarray:
    """Bilinear sample at continuous coords with azimuthal wraparound."""
    h, w = pixels.shape[:2]
    u = np.asarray(x, dtype=np.float64) - 0.5
    v = np.clip(np.asarray(y, dtype=np.float64) - 0.5, 0.0, h - 1.0)
    u0 = np.floor(u).astype(np.int64)
    v0 = np.floor(v).astype(np.int64)
    fu = u - u0
    fv = v - v0
    if wrap:
        u0m, u1m = u0 % w, (u0 + 1) % w
    else:
        u0m = np.clip(u0, 0, w - 1)
        u1m = np.clip(u0 + 1, 0, w - 1)
    v0m = np.clip(v0, 0, h - 1)
    v1m = np.clip(v0 + 1, 0, h - 1)
    p = pixels.astype(np.float64)
    top = p[v0m, u0m] * (1 - fu)[..., None] + p[v0m, u1m] * fu[..., None]
    bot = p[v1m, u0m] * (1 - fu)[..., None] + p[v1m, u1m] * fu[..., None]
    return top * (1 - fv)[..., None] + bot * fv[..., None]


# ------------------------------------------------------------- projections

def crop_front_hemisphere(pano: HdrPanorama) -> np.ndarray:
    """Columns [w/4, 3w/4) of all rows: the front lens's hemisphere."""
    w = pano.width
    if w % 4 != 0:
        raise ValidationError(f"crop_front_hemisphere: width {w} not divisible by 4")
    return pano.pixels[:, w // 4: 3 * w // 4].copy()


def equirect_to_orthographic(half: np.ndarray, side: int | None = None) -> OrthographicFisheye:
    """Resample a front-hemisphere half-equirect into an orthographic disk.

    Output pixel at normalized (u, v): angle from the front axis is
    asin(r); the world direction is simply (sqrt(1 - r^2), u, v).
    """
    half = np.asarray(half)
    if half.ndim != 3 or half.shape[0] != half.shape[1]:
        raise ValidationError(f"equirect_to_orthographic: expected square half image, got {half.shape}")
    hh = half.shape[0]
    if side is None:
        side = hh
    if side < 2:
        raise ValidationError("equirect_to_orthographic: side must be >= 2")

    u, v = _disk_coords(side)
    r2 = u * u + v * v
    mask = r2 <= 1.0
    front = np.sqrt(np.maximum(0.0, 1.0 - r2))
    theta = np.arccos(np.clip(v, -1.0, 1.0))
    phi = np.arctan2(u, front)  # in [-pi/2, pi/2] over the front hemisphere

    x_half = hh / 2.0 + phi / np.pi * hh
    y = theta / np.pi * hh
    out = sample_equirect(half, x_half, y, wrap=False)
    out[~mask] = 0.0
    return OrthographicFisheye(out.astype(np.float32), mask)


def _view_basis(view: PerspectiveView):
    phi_c = np.deg2rad(view.yaw)
    theta_c = np.pi / 2.0 - np.deg2rad(view.pitch)
    forward = np.array([np.sin(theta_c) * np.cos(phi_c),
                        np.sin(theta_c) * np.sin(phi_c),
                        np.cos(theta_c)])
    right = np.array([-np.sin(phi_c), np.cos(phi_c), 0.0])
    up = np.array([-np.cos(theta_c) * np.cos(phi_c),
                   -np.cos(theta_c) * np.sin(phi_c),
                   np.sin(theta_c)])
    return forward, right, up


def view_ray_grid(view: PerspectiveView) -> np.ndarray:
    """Unnormalized world ray per output pixel; the exact center ray (odd
    sizes) equals the (yaw, pitch) direction."""
    forward, right, up = _view_basis(view)
    f = (view.width / 2.0) / np.tan(np.deg2rad(view.fov) / 2.0)
    a = (np.arange(view.width) + 0.5 - view.width / 2.0) / f
    b = (view.height / 2.0 - (np.arange(view.height) + 0.5)) / f
    return (forward[None, None, :]
            + a[None, :, None] * right[None, None, :]
            + b[:, None, None] * up[None, None, :])


def pano_to_perspective(pano: HdrPanorama, view: PerspectiveView) -> np.ndarray:
    """Gnomonic extraction with bilinear sampling; returns float32 RGB."""
    d = view_ray_grid(view)
    norm = np.linalg.norm(d, axis=-1)
    theta = np.arccos(np.clip(d[..., 2] / norm, -1.0, 1.0))
    phi = np.arctan2(d[..., 1], d[..., 0])
    x, y = dir_to_pixel(theta, phi % TWO_PI, pano.width, pano.height)
    return sample_equirect(pano.pixels, x, y).astype(np.float32)


def fisheye_from_panorama(pano: HdrPanorama, side: int | None = None) -> OrthographicFisheye:
    """crop + orthographic resample in one call (side defaults to pano height)."""
    half = crop_front_hemisphere(pano)
    return equirect_to_orthographic(half, side if side is not None else pano.height)
