"""HDR image files: OpenEXR scanline read/write, Radiance RGBE, PNG brackets.

The EXR codec is self-contained (no bindings needed): it writes float32 RGB
scanline files with NONE or ZIP compression and reads NONE/ZIPS/ZIP files
with HALF or FLOAT channels, which covers the panoramas this toolkit
produces and the common files it ingests. A private float attribute
`calibrationFactor` carries the calibration state through a round trip;
standard readers ignore it.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import cv2
import numpy as np

from panostage.errors import ValidationError
from panostage.image import ExposureBracket, HdrPanorama, luminance_map

_EXR_MAGIC = b"\x76\x2f\x31\x01"
_PT_UINT, _PT_HALF, _PT_FLOAT = 0, 1, 2
_COMP_NONE, _COMP_RLE, _COMP_ZIPS, _COMP_ZIP = 0, 1, 2, 3
_ZIP_LINES = 16
_CALIBRATION_ATTR = "calibrationFactor"


# ---------------------------------------------------------------- EXR write

def _attr(name: str, typ: str, payload: bytes) -> bytes:
    return name.encode() + b"\0" + typ.encode() + b"\0" + struct.pack("<i", len(payload)) + payload


def _chlist_rgb(pixel_type: int) -> bytes:
    out = b""
    for name in (b"B", b"G", b"R"):  # EXR requires alphabetical channel order
        out += name + b"\0" + struct.pack("<i", pixel_type) + b"\0\0\0\0" + struct.pack("<ii", 1, 1)
    return out + b"\0"


def _zip_compress(raw: bytes) -> bytes:
    buf = np.frombuffer(raw, dtype=np.uint8)
    n = buf.size
    half = (n + 1) // 2
    reordered = np.empty(n, dtype=np.uint8)
    reordered[:half] = buf[0::2]
    reordered[half:] = buf[1::2]
    # delta predictor over the reordered bytes
    pred = reordered.astype(np.int16)
    pred[1:] = np.diff(reordered.astype(np.int16)) + 128
    packed = zlib.compress(pred.astype(np.uint8).tobytes(), 6)
    return packed if len(packed) < n else raw


def _zip_decompress(data: bytes, expected: int) -> bytes:
    if len(data) == expected:
        return data
    raw = np.frombuffer(zlib.decompress(data), dtype=np.uint8)
    if raw.size != expected:
        raise ValidationError(f"EXR: corrupt chunk ({raw.size} != {expected} bytes)")
    undone = (np.cumsum(raw.astype(np.int64) - 128) + 128).astype(np.uint8)
    half = (expected + 1) // 2
    merged = np.empty(expected, dtype=np.uint8)
    merged[0::2] = undone[:half]
    merged[1::2] = undone[half:]
    return merged.tobytes()


def write_exr(path, pixels: np.ndarray, calibration: float | None = None,
              compression: str = "zip") -> None:
    """Write float32 RGB scanline EXR. compression: 'none' or 'zip'."""
    arr = np.asarray(pixels)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValidationError(f"write_exr: expected (h, w, 3) array, got {arr.shape}")
    arr = np.ascontiguousarray(arr, dtype=np.float32)
    h, w = arr.shape[:2]
    comp = {"none": _COMP_NONE, "zip": _COMP_ZIP}.get(compression)
    if comp is None:
        raise ValidationError(f"write_exr: unsupported compression {compression!r}")

    header = b""
    if calibration is not None:
        header += _attr(_CALIBRATION_ATTR, "float", struct.pack("<f", float(calibration)))
    header += _attr("channels", "chlist", _chlist_rgb(_PT_FLOAT))
    header += _attr("compression", "compression", struct.pack("<B", comp))
    box = struct.pack("<iiii", 0, 0, w - 1, h - 1)
    header += _attr("dataWindow", "box2i", box)
    header += _attr("displayWindow", "box2i", box)
    header += _attr("lineOrder", "lineOrder", b"\x00")
    header += _attr("pixelAspectRatio", "float", struct.pack("<f", 1.0))
    header += _attr("screenWindowCenter", "v2f", struct.pack("<ff", 0.0, 0.0))
    header += _attr("screenWindowWidth", "float", struct.pack("<f", 1.0))
    header += b"\0"

    lines_per_chunk = 1 if comp == _COMP_NONE else _ZIP_LINES
    n_chunks = (h + lines_per_chunk - 1) // lines_per_chunk
    chunks = []
    for c in range(n_chunks):
        y0 = c * lines_per_chunk
        y1 = min(y0 + lines_per_chunk, h)
        block = arr[y0:y1]
        # per scanline, channels in alphabetical order (B, G, R)
        raw = np.concatenate(
            [np.stack([block[j, :, 2], block[j, :, 1], block[j, :, 0]]) for j in range(y1 - y0)]
        ).tobytes()
        payload = raw if comp == _COMP_NONE else _zip_compress(raw)
        chunks.append(struct.pack("<ii", y0, len(payload)) + payload)

    with open(path, "wb") as f:
        f.write(_EXR_MAGIC)
        f.write(struct.pack("<i", 2))  # version 2, scanline flags
        f.write(header)
        offset = f.tell() + 8 * n_chunks
        for ch in chunks:
            f.write(struct.pack("<Q", offset))
            offset += len(ch)
        for ch in chunks:
            f.write(ch)


# ----------------------------------------------------------------- EXR read

def _parse_header(f):
    attrs = {}
    while True:
        name = _read_cstr(f)
        if name == b"":
            break
        typ = _read_cstr(f).decode()
        size = struct.unpack("<i", f.read(4))[0]
        attrs[name.decode()] = (typ, f.read(size))
    return attrs


def _read_cstr(f) -> bytes:
    out = b""
    while True:
        c = f.read(1)
        if c in (b"", b"\0"):
            return out
        out += c


def _parse_chlist(raw: bytes):
    channels = []
    pos = 0
    while raw[pos] != 0:
        end = raw.index(b"\0", pos)
        name = raw[pos:end].decode()
        ptype = struct.unpack_from("<i", raw, end + 1)[0]
        channels.append((name, ptype))
        pos = end + 1 + 16
    return channels


def read_exr(path):
    """Read a scanline EXR into (float32 (h, w, 3) array, calibration | None)."""
    with open(path, "rb") as f:
        if f.read(4) != _EXR_MAGIC:
            raise ValidationError(f"{path}: not an OpenEXR file")
        version = struct.unpack("<i", f.read(4))[0]
        if version & 0x200:
            raise ValidationError(f"{path}: tiled EXR not supported")
        attrs = _parse_header(f)
        channels = _parse_chlist(attrs["channels"][1])
        comp = attrs["compression"][1][0]
        if comp not in (_COMP_NONE, _COMP_ZIPS, _COMP_ZIP):
            raise ValidationError(f"{path}: unsupported EXR compression {comp}")
        x0, y0, x1, y1 = struct.unpack("<iiii", attrs["dataWindow"][1])
        w, h = x1 - x0 + 1, y1 - y0 + 1
        # lineOrder only affects chunk storage order; chunk y coordinates are
        # absolute, so coordinate-addressed placement below handles both
        calibration = None
        if _CALIBRATION_ATTR in attrs:
            calibration = float(struct.unpack("<f", attrs[_CALIBRATION_ATTR][1])[0])

        lines_per_chunk = _ZIP_LINES if comp == _COMP_ZIP else 1
        n_chunks = (h + lines_per_chunk - 1) // lines_per_chunk
        f.read(8 * n_chunks)  # offset table; chunks follow contiguously

        dtypes = {name: (np.dtype("<f2") if pt == _PT_HALF else np.dtype("<f4"))
                  for name, pt in channels}
        if any(pt == _PT_UINT for _, pt in channels):
            raise ValidationError(f"{path}: UINT channels not supported")
        planes = {name: np.zeros((h, w), dtype=np.float32) for name, _ in channels}
        line_bytes = sum(w * dtypes[name].itemsize for name, _ in channels)

        for _ in range(n_chunks):
            y, size = struct.unpack("<ii", f.read(8))
            data = f.read(size)
            rows = min(lines_per_chunk, y1 - y + 1)
            raw = data if comp == _COMP_NONE else _zip_decompress(data, rows * line_bytes)
            pos = 0
            for r in range(rows):
                for name, _pt in channels:
                    nbytes = w * dtypes[name].itemsize
                    vals = np.frombuffer(raw, dtype=dtypes[name], count=w, offset=pos)
                    planes[name][y - y0 + r] = vals.astype(np.float32)
                    pos += nbytes

    for name in ("R", "G", "B"):
        if name not in planes:
            raise ValidationError(f"{path}: missing channel {name}")
    img = np.stack([planes["R"], planes["G"], planes["B"]], axis=-1)
    return np.ascontiguousarray(img), calibration


# -------------------------------------------------------------- RGBE (.hdr)

def _float_to_rgbe(rgb: np.ndarray) -> np.ndarray:
    rgb = np.asarray(rgb, dtype=np.float64)
    peak = rgb.max(axis=-1)
    mant, exp = np.frexp(peak)
    scale = np.where(peak > 1e-32, mant * 255.9999999 / np.where(peak > 0, peak, 1.0), 0.0)
    out = np.zeros(rgb.shape[:-1] + (4,), dtype=np.uint8)
    out[..., :3] = (rgb * scale[..., None]).astype(np.uint8)
    out[..., 3] = np.where(peak > 1e-32, exp + 128, 0).astype(np.uint8)
    return out


def _rgbe_to_float(rgbe: np.ndarray) -> np.ndarray:
    rgbe = np.asarray(rgbe)
    exp = rgbe[..., 3].astype(np.int32)
    scale = np.where(exp > 0, np.ldexp(1.0, exp - 136), 0.0)
    return ((rgbe[..., :3].astype(np.float64) + 0.5) * scale[..., None] * (exp > 0)[..., None]).astype(np.float32)


def _rle_encode_component(comp: np.ndarray) -> bytes:
    out = bytearray()
    n = comp.size
    i = 0
    while i < n:
        run = 1
        while i + run < n and run < 127 and comp[i + run] == comp[i]:
            run += 1
        if run >= 4:
            out += bytes((128 + run, int(comp[i])))
            i += run
        else:
            j = i
            while j < n and j - i < 128:
                r = 1
                while j + r < n and r < 4 and comp[j + r] == comp[j]:
                    r += 1
                if r >= 4:
                    break
                j += 1
            out += bytes((j - i,)) + comp[i:j].tobytes()
            i = j
    return bytes(out)


def write_hdr(path, pixels: np.ndarray) -> None:
    """Write Radiance RGBE with new-style RLE scanlines."""
    arr = np.asarray(pixels, dtype=np.float32)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValidationError(f"write_hdr: expected (h, w, 3) array, got {arr.shape}")
    h, w = arr.shape[:2]
    rgbe = _float_to_rgbe(arr)
    with open(path, "wb") as f:
        f.write(b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n")
        f.write(f"-Y {h} +X {w}\n".encode())
        if 8 <= w <= 0x7FFF:
            for row in rgbe:
                f.write(bytes((2, 2, w >> 8, w & 0xFF)))
                for c in range(4):
                    f.write(_rle_encode_component(row[:, c]))
        else:
            f.write(rgbe.tobytes())


def read_hdr(path) -> np.ndarray:
    """Read a Radiance RGBE file into a float32 (h, w, 3) array."""
    with open(path, "rb") as f:
        magic = f.readline()
        if not magic.startswith(b"#?"):
            raise ValidationError(f"{path}: not a Radiance HDR file")
        while True:
            line = f.readline()
            if line in (b"\n", b"\r\n"):
                break
            if line == b"":
                raise ValidationError(f"{path}: truncated header")
        dims = f.readline().split()
        if len(dims) != 4 or dims[0] != b"-Y" or dims[2] != b"+X":
            raise ValidationError(f"{path}: unsupported orientation {dims}")
        h, w = int(dims[1]), int(dims[3])
        data = f.read()

    rgbe = np.zeros((h, w, 4), dtype=np.uint8)
    pos = 0
    for y in range(h):
        if 8 <= w <= 0x7FFF and pos + 4 <= len(data) and data[pos] == 2 and data[pos + 1] == 2 \
                and (data[pos + 2] << 8 | data[pos + 3]) == w:
            pos += 4
            for c in range(4):
                x = 0
                while x < w:
                    count = data[pos]
                    pos += 1
                    if count > 128:
                        rgbe[y, x:x + count - 128, c] = data[pos]
                        pos += 1
                        x += count - 128
                    else:
                        rgbe[y, x:x + count, c] = np.frombuffer(data, np.uint8, count, pos)
                        pos += count
                        x += count
        else:
            flat = np.frombuffer(data, np.uint8, w * 4, pos).reshape(w, 4)
            rgbe[y] = flat
            pos += w * 4
    return _rgbe_to_float(rgbe)


# ----------------------------------------------------- panoramas and brackets

def save_panorama(path, pano: HdrPanorama) -> None:
    path = Path(path)
    if path.suffix.lower() == ".exr":
        write_exr(path, pano.pixels, calibration=pano.calibration)
    elif path.suffix.lower() == ".hdr":
        write_hdr(path, pano.pixels)
    else:
        raise ValidationError(f"save_panorama: unsupported extension {path.suffix!r}")


def load_panorama(path) -> HdrPanorama:
    path = Path(path)
    if path.suffix.lower() == ".exr":
        pixels, calibration = read_exr(path)
        return HdrPanorama(np.maximum(pixels, 0.0), calibration=calibration)
    if path.suffix.lower() == ".hdr":
        return HdrPanorama(read_hdr(path))
    raise ValidationError(f"load_panorama: unsupported extension {path.suffix!r}")


def load_ldr_frame(path) -> np.ndarray:
    """Load an 8/16-bit PNG as linear values normalized to [0, 1]."""
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise ValidationError(f"{path}: unreadable image")
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    img = img[:, :, :3][:, :, ::-1]  # BGR -> RGB
    if img.dtype == np.uint8:
        return img.astype(np.float64) / 255.0
    if img.dtype == np.uint16:
        return img.astype(np.float64) / 65535.0
    raise ValidationError(f"{path}: unsupported PNG bit depth {img.dtype}")


def load_bracket(sidecar_path) -> ExposureBracket:
    """Load a bracket from sidecar JSON: {"frames": [{"path", "exposure_s"}]}."""
    sidecar_path = Path(sidecar_path)
    spec = json.loads(sidecar_path.read_text())
    frames, times = [], []
    for entry in spec.get("frames", []):
        frame_path = Path(entry["path"])
        if not frame_path.is_absolute():
            frame_path = sidecar_path.parent / frame_path
        frames.append(load_ldr_frame(frame_path))
        times.append(float(entry["exposure_s"]))
    return ExposureBracket(frames, times)


# ------------------------------------------------------------ LDR previews

def tone_map(pixels: np.ndarray, percentile: float = 95.0, target: float = 0.9,
             gamma: float = 2.2) -> np.ndarray:
    """Exposure + gamma preview mapping; display only, never photometric."""
    arr = np.asarray(pixels, dtype=np.float64)
    lum = luminance_map(arr).values
    p = np.percentile(lum, percentile)
    scale = target / p if p > 0 else 1.0
    # scale luminance, so divide out the 179 lm/W factor baked into lum
    ldr = np.clip(arr * (scale * 179.0), 0.0, 1.0) ** (1.0 / gamma)
    return (ldr * 255.0 + 0.5).astype(np.uint8)


def save_png(path, rgb8: np.ndarray) -> None:
    ok = cv2.imwrite(str(path), np.asarray(rgb8)[:, :, ::-1])
    if not ok:
        raise ValidationError(f"save_png: failed to write {path}")


def encode_png(rgb8: np.ndarray) -> bytes:
    ok, buf = cv2.imencode(".png", np.asarray(rgb8)[:, :, ::-1])
    if not ok:
        raise ValidationError("encode_png: PNG encoding failed")
    return buf.tobytes()
