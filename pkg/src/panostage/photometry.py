"""Illuminance integration and single-measurement photometric calibration.

Under the orthographic (sine) fisheye mapping, the hemispherical
cosine-weighted luminance integral collapses to an unweighted disk mean:
the projected solid angle of each pixel is constant, so

    illuminance = pi * mean(luminance over the valid disk).

Calibration compares that disk mean against the uniform luminance implied
by a handheld lux-meter reading and rescales the panorama accordingly; the
indoor factor transfers verbatim to the paired outdoor capture.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from panostage.errors import NumericError, ValidationError
from panostage.image import HdrPanorama, luminance_map, scale_radiance
from panostage.projection import OrthographicFisheye, fisheye_from_panorama


@dataclass(frozen=True)
class PhotometricRecord:
    """On-site measurements attached to a captured scene pair."""

    indoor_illuminance: float   # lux
    outdoor_illuminance: float  # lux
    target_luminance: float     # cd/m^2, reference-meter whiteboard reading
    room_orientation: float     # compass degrees [0, 360)

    def __post_init__(self):
        for name in ("indoor_illuminance", "outdoor_illuminance", "target_luminance"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v < 0:
                raise ValidationError(f"PhotometricRecord: {name} must be finite >= 0, got {v}")
            object.__setattr__(self, name, v)
        ori = float(self.room_orientation)
        if not (0.0 <= ori < 360.0):
            raise ValidationError(f"PhotometricRecord: orientation out of [0, 360): {ori}")
        object.__setattr__(self, "room_orientation", ori)


@dataclass(frozen=True)
class CalibrationResult:
    factor: float               # k
    uniform_luminance: float    # cd/m^2
    mean_disk_luminance: float  # displayed (pre-calibration) cd/m^2
    illuminance_used: float     # lux

    def __post_init__(self):
        if not np.isfinite(self.factor) or self.factor <= 0:
            raise ValidationError(f"CalibrationResult: factor must be finite > 0, got {self.factor}")


@dataclass(frozen=True)
class ErrorStats:
    abs_errors: tuple      # cd/m^2 per scene
    pct_errors: tuple      # % per scene
    mean_abs_error: float  # cd/m^2


def illuminance_from_fisheye(fisheye: OrthographicFisheye) -> float:
    """Horizontal illuminance (lux) seen by the hemisphere the disk covers."""
    mask = fisheye.mask
    n = int(mask.sum())
    if n == 0:
        raise NumericError("illuminance_from_fisheye: no valid disk pixels")
    lum = luminance_map(fisheye).values
    return float(np.pi * lum[mask].sum() / n)


def mean_disk_luminance(fisheye: OrthographicFisheye) -> float:
    mask = fisheye.mask
    n = int(mask.sum())
    if n == 0:
        raise NumericError("mean_disk_luminance: no valid disk pixels")
    return float(luminance_map(fisheye).values[mask].sum() / n)


def uniform_luminance(illuminance: float) -> float:
    """Luminance of the uniform hemisphere producing this illuminance."""
    e = float(illuminance)
    if e < 0 or not np.isfinite(e):
        raise ValidationError(f"uniform_luminance: illuminance must be finite >= 0, got {e}")
    return e / np.pi


def calibration_factor(measured_illuminance: float, fisheye: OrthographicFisheye) -> CalibrationResult:
    """Scale factor between the lux-meter reading and the displayed values."""
    e = float(measured_illuminance)
    if e <= 0 or not np.isfinite(e):
        raise ValidationError(f"calibration_factor: illuminance must be finite > 0, got {e}")
    mean = mean_disk_luminance(fisheye)
    if mean <= 0:
        raise NumericError("calibration_factor: zero mean disk luminance (unusable capture)")
    uniform = uniform_luminance(e)
    return CalibrationResult(
        factor=uniform / mean,
        uniform_luminance=uniform,
        mean_disk_luminance=mean,
        illuminance_used=e,
    )


def calibrate_pair(indoor: HdrPanorama, outdoor: HdrPanorama, measured_illuminance: float,
                   fisheye_side: int | None = None):
    """Run the full calibration on the indoor capture and transfer the
    factor to the paired outdoor capture.

    Stages: crop front hemisphere -> orthographic fisheye -> luminance map
    -> factor against the uniform luminance -> rescale both panoramas.
    Returns (indoor', outdoor', CalibrationResult). Re-calibrating an
    already calibrated pair composes multiplicatively and is logged.
    """
    if indoor.is_calibrated or outdoor.is_calibrated:
        logging.getLogger(__name__).info(
            "re-calibrating a calibrated pair (indoor k=%s, outdoor k=%s); factors compose",
            indoor.calibration, outdoor.calibration)
    fisheye = fisheye_from_panorama(indoor, fisheye_side)
    result = calibration_factor(measured_illuminance, fisheye)
    return (
        scale_radiance(indoor, result.factor),
        scale_radiance(outdoor, result.factor),
        result,
    )


def error_stats(estimates: Sequence[tuple]) -> ErrorStats:
    """Per-scene and aggregate error between estimated and reference luminance.

    estimates: iterable of (estimated, reference) cd/m^2 pairs; percentage
    error uses the reference meter value as denominator.
    """
    pairs = list(estimates)
    if not pairs:
        raise ValidationError("error_stats: empty estimate list")
    abs_errs, pct_errs = [], []
    for est, ref in pairs:
        est, ref = float(est), float(ref)
        if ref <= 0:
            raise ValidationError(f"error_stats: reference luminance must be > 0, got {ref}")
        abs_errs.append(abs(est - ref))
        pct_errs.append(100.0 * abs(est - ref) / ref)
    return ErrorStats(
        abs_errors=tuple(abs_errs),
        pct_errors=tuple(pct_errs),
        mean_abs_error=float(np.mean(abs_errs)),
    )


STATS_CSV_FIELDS = ["scene_id", "E_measured_lux", "L_std_cdm2", "L_lowcost_cdm2",
                    "abs_err_cdm2", "pct_err"]


def stats_csv(rows: Sequence[dict]) -> str:
    """Serialize per-scene stats rows to the documented CSV schema."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=STATS_CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row[k] for k in STATS_CSV_FIELDS})
    return buf.getvalue()
