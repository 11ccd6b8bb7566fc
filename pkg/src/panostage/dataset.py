"""Manifest ingestion and statistics for paired indoor/outdoor captures.

A manifest is a CSV (or equivalent JSON list) with one row per scene:
scene_id, indoor_path, outdoor_path, E_in_lux, E_out_lux, L_tgt_cdm2,
orientation_deg, timestamp_iso8601. Bad rows are reported individually
and skipped, never fatal.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from panostage.errors import ValidationError
from panostage.photometry import PhotometricRecord, error_stats, stats_csv

MANIFEST_FIELDS = ["scene_id", "indoor_path", "outdoor_path", "E_in_lux", "E_out_lux",
                   "L_tgt_cdm2", "orientation_deg", "timestamp_iso8601"]
PAIR_WINDOW_MINUTES = 10.0


@dataclass(frozen=True)
class SceneEntry:
    scene_id: str
    indoor_path: str
    outdoor_path: str
    record: PhotometricRecord
    timestamp: str

    def as_row(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "indoor_path": self.indoor_path,
            "outdoor_path": self.outdoor_path,
            "E_in_lux": repr(self.record.indoor_illuminance),
            "E_out_lux": repr(self.record.outdoor_illuminance),
            "L_tgt_cdm2": repr(self.record.target_luminance),
            "orientation_deg": repr(self.record.room_orientation),
            "timestamp_iso8601": self.timestamp,
        }


def _entry_from_row(row: dict, base: Path | None, check_files: bool) -> SceneEntry:
    try:
        record = PhotometricRecord(
            indoor_illuminance=float(row["E_in_lux"]),
            outdoor_illuminance=float(row["E_out_lux"]),
            target_luminance=float(row["L_tgt_cdm2"]),
            room_orientation=float(row["orientation_deg"]),
        )
    except (KeyError, TypeError) as e:
        raise ValidationError(f"missing field: {e}") from e
    except ValueError as e:
        raise ValidationError(f"non-numeric field: {e}") from e
    ts = str(row.get("timestamp_iso8601", "")).strip()
    if ts:
        try:
            datetime.fromisoformat(ts)
        except ValueError as e:
            raise ValidationError(f"bad timestamp {ts!r}: {e}") from e
    entry = SceneEntry(
        scene_id=str(row["scene_id"]),
        indoor_path=str(row["indoor_path"]),
        outdoor_path=str(row["outdoor_path"]),
        record=record,
        timestamp=ts,
    )
    if check_files:
        for p in (entry.indoor_path, entry.outdoor_path):
            path = Path(p) if Path(p).is_absolute() or base is None else base / p
            if not path.exists():
                raise ValidationError(f"panorama file missing: {p}")
    return entry


def load_manifest(path, check_files: bool = False):
    """Parse a CSV or JSON manifest; returns (entries, diagnostics).

    diagnostics is a list of (row_number, message) for rejected rows.
    """
    path = Path(path)
    text = path.read_text()
    rows: list
    if path.suffix.lower() == ".json":
        data = json.loads(text) if text.strip() else []
        if not isinstance(data, list):
            raise ValidationError(f"{path}: JSON manifest must be a list of objects")
        rows = data
    else:
        rows = list(csv.DictReader(io.StringIO(text)))
    entries, diagnostics = [], []
    for i, row in enumerate(rows):
        try:
            entries.append(_entry_from_row(row, path.parent, check_files))
        except ValidationError as e:
            diagnostics.append((i, str(e)))
    if not rows:
        diagnostics.append((-1, "manifest is empty"))
    return entries, diagnostics


def save_manifest(path, entries) -> None:
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps([e.as_row() for e in entries], indent=2) + "\n")
        return
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=MANIFEST_FIELDS, lineterminator="\n")
    writer.writeheader()
    for e in entries:
        writer.writerow(e.as_row())
    path.write_text(buf.getvalue())


def dataset_stats(entries, calibrated_estimates):
    """Error statistics across scenes plus the plot-ready CSV series.

    calibrated_estimates maps scene_id -> estimated whiteboard luminance
    (cd/m^2) obtained through the low-cost calibration; the reference is
    each entry's standard-meter target luminance. Returns (ErrorStats, csv
    text with x = measured illuminance, y = % error, color key = reference
    luminance).
    """
    entries = [e for e in entries if e.scene_id in calibrated_estimates]
    if not entries:
        raise ValidationError("dataset_stats: no entries with estimates")
    pairs = [(calibrated_estimates[e.scene_id], e.record.target_luminance) for e in entries]
    stats = error_stats(pairs)
    rows = []
    for e, abs_err, pct in zip(entries, stats.abs_errors, stats.pct_errors):
        rows.append({
            "scene_id": e.scene_id,
            "E_measured_lux": repr(e.record.indoor_illuminance),
            "L_std_cdm2": repr(e.record.target_luminance),
            "L_lowcost_cdm2": repr(float(calibrated_estimates[e.scene_id])),
            "abs_err_cdm2": repr(abs_err),
            "pct_err": repr(pct),
        })
    return stats, stats_csv(rows)
