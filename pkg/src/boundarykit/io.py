"""File formats: BWTF tensors, index-PNG label maps, RGB PNGs, JSON reports.

BWTF layout (little-endian)::

    offset  size        field
    0       4           magic b"BWTF"
    4       4           u32 format version (1)
    8       1           u8 rank
    9       4 * rank    u32 dims
    ...     4 * prod    float32 values, row-major

All writers go through a temporary file that is renamed into place, so a
failed write never leaves a partial artifact behind.
"""
from __future__ import annotations

import contextlib
import json
import os
import struct
import tempfile
from io import BytesIO
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import FormatError, ShapeError
from .grid import DEFAULT_IGNORE_INDEX, DisplacementField, LabelMap

MAGIC = b"BWTF"
VERSION = 1


@contextlib.contextmanager
def atomic_path(path):
    """Yield a temporary sibling path; rename onto ``path`` on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".part")
    os.close(fd)
    try:
        yield Path(tmp)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def encode_tensor(value) -> bytes:
    if isinstance(value, DisplacementField):
        value = value.to_array()
    arr = np.ascontiguousarray(value, dtype="<f4")
    if arr.ndim > 255:
        raise ShapeError("rank too large for BWTF")
    header = MAGIC + struct.pack("<IB", VERSION, arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    return header + arr.tobytes()


def decode_tensor(buf: bytes) -> np.ndarray:
    if len(buf) < 9:
        raise FormatError("truncated BWTF header", offset=len(buf))
    if buf[:4] != MAGIC:
        raise FormatError(f"bad magic {buf[:4]!r}, expected {MAGIC!r}", offset=0)
    version, rank = struct.unpack_from("<IB", buf, 4)
    if version != VERSION:
        raise FormatError(f"unsupported BWTF version {version}", offset=4)
    dims_end = 9 + 4 * rank
    if len(buf) < dims_end:
        raise FormatError(f"truncated dims for rank {rank}", offset=len(buf))
    dims = struct.unpack_from(f"<{rank}I", buf, 9)
    expected = dims_end + 4 * int(np.prod(dims, dtype=np.int64))
    if len(buf) < expected:
        raise FormatError(
            f"truncated payload: need {expected} bytes for dims {dims}, file has {len(buf)}",
            offset=len(buf),
        )
    if len(buf) > expected:
        raise FormatError(f"{len(buf) - expected} trailing bytes after payload", offset=expected)
    arr = np.frombuffer(buf, dtype="<f4", offset=dims_end, count=int(np.prod(dims)))
    return arr.reshape(dims).astype(np.float32)


def write_tensor(value, path):
    write_bytes(path, encode_tensor(value))


def read_tensor(path) -> np.ndarray:
    return decode_tensor(Path(path).read_bytes())


def read_feature_map(path) -> np.ndarray:
    arr = read_tensor(path)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise FormatError(f"{path}: expected rank 3 (C x H x W), got rank {arr.ndim}", offset=8)
    return arr


def read_displacement(path) -> DisplacementField:
    arr = read_tensor(path)
    if arr.ndim != 3 or arr.shape[0] != 2:
        raise FormatError(f"{path}: expected a 2 x H x W displacement tensor, got {arr.shape}", offset=8)
    return DisplacementField.from_array(arr)


def read_label_png(path, num_classes=None, ignore_index=DEFAULT_IGNORE_INDEX) -> LabelMap:
    """Read an 8-bit grayscale or paletted PNG as class indices.

    Palette indices are taken as-is, never the palette colours. When
    ``num_classes`` is omitted it is inferred as the largest non-ignore
    index plus one.
    """
    with Image.open(path) as im:
        if im.mode not in ("L", "P"):
            hint = (
                " store labels as a single-channel index image, not colours"
                if im.mode in ("RGB", "RGBA")
                else ""
            )
            raise FormatError(f"{path}: label PNG must be 8-bit L or P mode, got {im.mode!r};{hint}")
        data = np.array(im, dtype=np.uint8)
    if num_classes is None:
        valid = data[data != ignore_index]
        num_classes = int(valid.max()) + 1 if valid.size else 1
    return LabelMap(data, num_classes, ignore_index)


def _png_bytes(arr) -> bytes:
    buf = BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


def encode_label_png(labels: LabelMap) -> bytes:
    data = labels.data
    if data.min(initial=0) < 0 or data.max(initial=0) > 255:
        raise FormatError("label values must fit in 8 bits for PNG output")
    return _png_bytes(data.astype(np.uint8))


def write_label_png(labels: LabelMap, path):
    write_bytes(path, encode_label_png(labels))


def read_rgb_png(path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("RGB", "RGBA", "L", "P"):
            raise FormatError(f"{path}: unsupported image mode {im.mode!r}")
        return np.array(im.convert("RGB"), dtype=np.uint8)


def encode_rgb_png(img) -> bytes:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ShapeError(f"expected an H x W x 3 uint8 image, got {img.shape} {img.dtype}")
    return _png_bytes(img)


def write_rgb_png(img, path):
    write_bytes(path, encode_rgb_png(img))


def encode_mask_png(mask) -> bytes:
    """Binary mask as an 8-bit PNG holding 0 / 255."""
    return _png_bytes(np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8))


def write_mask_png(mask, path):
    write_bytes(path, encode_mask_png(mask))


def encode_json(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")


def write_json(obj, path):
    write_bytes(path, encode_json(obj))


def write_bytes(path, data: bytes):
    with atomic_path(path) as tmp:
        tmp.write_bytes(data)


def write_files(files: dict):
    """Write several ``{path: bytes}`` outputs as a unit.

    Each file is renamed into place once complete; if any write fails the
    files already committed by this call are removed again.
    """
    done = []
    try:
        for path, data in files.items():
            write_bytes(path, data)
            done.append(Path(path))
    except BaseException:
        for p in done:
            with contextlib.suppress(FileNotFoundError):
                p.unlink()
        raise
