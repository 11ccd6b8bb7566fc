"""Linear HDR image types, exposure-bracket merging and luminance maps.

Pixels are stored as float32 RGB; every reduction or resampling runs in
float64. Luminance uses Rec. 709 weights scaled by the 179 lm/W luminous
efficacy convention of physically-based lighting tools, so a calibrated
image yields absolute cd/m^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from panostage.errors import ValidationError

REC709_WEIGHTS = np.array([0.2126, 0.7152, 0.0722], dtype=np.float64)
LUMINOUS_EFFICACY = 179.0
SATURATION_LEVEL = 0.99
HAT_EXPONENT = 2.0


def _as_rgb_f32(pixels: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(pixels)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValidationError(f"{what}: expected (h, w, 3) array, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{what}: non-finite channel values")
    if (arr < 0).any():
        raise ValidationError(f"{what}: negative channel values")
    out = np.ascontiguousarray(arr, dtype=np.float32)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class HdrPanorama:
    """Equirectangular linear-radiance image (width = 2 * height).

    `calibration` is None while the image is in camera-relative units and
    holds the positive scale factor once absolute units are established.
    """

    pixels: np.ndarray
    calibration: float | None = None

    def __post_init__(self):
        pix = _as_rgb_f32(self.pixels, "HdrPanorama")
        if pix.shape[1] != 2 * pix.shape[0]:
            raise ValidationError(
                f"HdrPanorama: width must equal 2*height, got {pix.shape[1]}x{pix.shape[0]}"
            )
        if self.calibration is not None:
            k = float(self.calibration)
            if not np.isfinite(k) or k <= 0:
                raise ValidationError(f"HdrPanorama: calibration factor must be finite > 0, got {k}")
            object.__setattr__(self, "calibration", k)
        object.__setattr__(self, "pixels", pix)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def is_calibrated(self) -> bool:
        return self.calibration is not None


@dataclass(frozen=True)
class ExposureBracket:
    """A stack of normalized LDR frames with their exposure times (s)."""

    frames: Sequence[np.ndarray]
    exposure_times: Sequence[float]

    def __post_init__(self):
        if len(self.frames) == 0:
            raise ValidationError("ExposureBracket: empty bracket")
        if len(self.frames) != len(self.exposure_times):
            raise ValidationError("ExposureBracket: frames and exposure_times length mismatch")
        shape = np.asarray(self.frames[0]).shape
        frames = []
        for i, f in enumerate(self.frames):
            arr = np.asarray(f, dtype=np.float64)
            if arr.shape != shape:
                raise ValidationError(
                    f"ExposureBracket: frame {i} shape {arr.shape} != frame 0 shape {shape}"
                )
            if not np.isfinite(arr).all() or arr.min() < 0 or arr.max() > 1:
                raise ValidationError(f"ExposureBracket: frame {i} values must be finite in [0, 1]")
            frames.append(arr)
        times = np.asarray(self.exposure_times, dtype=np.float64)
        if (times <= 0).any() or not np.isfinite(times).all():
            raise ValidationError("ExposureBracket: exposure times must be finite > 0")
        d = np.diff(times)
        if len(times) > 1 and not ((d > 0).all() or (d < 0).all()):
            raise ValidationError("ExposureBracket: exposure times must be strictly monotonic")
        object.__setattr__(self, "frames", tuple(frames))
        object.__setattr__(self, "exposure_times", tuple(float(t) for t in times))


@dataclass(frozen=True)
class LuminanceMap:
    """Scalar luminance per pixel; cd/m^2 when the source was calibrated."""

    values: np.ndarray
    absolute: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise ValidationError(f"LuminanceMap: expected 2-D array, got {vals.shape}")
        if not np.isfinite(vals).all() or (vals < 0).any():
            raise ValidationError("LuminanceMap: values must be finite and >= 0")
        vals = np.ascontiguousarray(vals)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def hat_weight(v: np.ndarray) -> np.ndarray:
    """Merging weight: peaks at mid-exposure, zero at the extremes."""
    return np.maximum(0.0, 1.0 - np.abs(2.0 * np.asarray(v, dtype=np.float64) - 1.0) ** HAT_EXPONENT)


def merge_brackets(bracket: ExposureBracket) -> HdrPanorama:
    """Merge an exposure bracket into linear radiance.

    Per channel: radiance = sum_f w(v_f) * v_f / t_f / sum_f w(v_f), where
    saturated values (v >= 0.99) are excluded from every frame except the
    shortest exposure. Pixels with zero total weight fall back to the
    shortest-exposure estimate. Output is uncalibrated.
    """
    times = np.asarray(bracket.exposure_times)
    shortest = int(np.argmin(times))
    num = np.zeros(bracket.frames[0].shape, dtype=np.float64)
    den = np.zeros_like(num)
    for i, (frame, t) in enumerate(zip(bracket.frames, times)):
        w = hat_weight(frame)
        if i != shortest:
            w = np.where(frame >= SATURATION_LEVEL, 0.0, w)
        num += w * (frame / t)
        den += w
    fallback = bracket.frames[shortest] / times[shortest]
    radiance = np.where(den > 0, num / np.where(den > 0, den, 1.0), fallback)
    if radiance.shape[1] != 2 * radiance.shape[0]:
        raise ValidationError(
            "merge_brackets: frames must be equirectangular (width = 2 * height)"
        )
    return HdrPanorama(radiance.astype(np.float32))


def luminance_map(image) -> LuminanceMap:
    """Photometric luminance per pixel: 179 * (Rec. 709 luma) of linear RGB."""
    pixels = getattr(image, "pixels", image)
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValidationError(f"luminance_map: expected (h, w, 3) input, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError("luminance_map: non-finite channel values")
    if (arr < 0).any():
        raise ValidationError("luminance_map: negative channel values")
    # contiguity pins the per-pixel dot product order, keeping the result
    # bit-identical for any traversal/layout of the same pixels
    lum = LUMINOUS_EFFICACY * (np.ascontiguousarray(arr) @ REC709_WEIGHTS)
    absolute = bool(getattr(image, "is_calibrated", False))
    return LuminanceMap(lum, absolute=absolute)


def scale_radiance(pano: HdrPanorama, k: float) -> HdrPanorama:
    """Multiply every channel by k and record it in the calibration state."""
    k = float(k)
    if not np.isfinite(k) or k <= 0:
        raise ValidationError(f"scale_radiance: k must be finite > 0, got {k}")
    scaled = (pano.pixels.astype(np.float64) * k).astype(np.float32)
    new_k = k if pano.calibration is None else pano.calibration * k
    return HdrPanorama(scaled, calibration=new_k)
