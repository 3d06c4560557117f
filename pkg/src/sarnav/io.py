"""Binary containers for data matrices (.sarc) and complex images (.sari).

Layout::

    b"SARNAV1\\0"                    8 bytes magic
    u32 little-endian                header length in bytes
    header                           UTF-8 JSON object, sorted keys
    payload                          row-major little-endian float64 (re, im) pairs

Image files append a second block of little-endian float64 holding the
per-pixel skipped fraction.  Writes go to a temporary file in the target
directory and are moved into place with :func:`os.replace`.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .backprojection import ComplexImage, ImageGrid
from .waveform import DataMatrix

MAGIC = b"SARNAV1\0"
VERSION = 1
_F8 = np.dtype("<f8")


class ContainerError(ValueError):
    """File is not a valid container or has an unexpected kind."""


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def _pack(header: dict, blocks) -> bytes:
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [MAGIC, struct.pack("<I", len(head)), head]
    parts.extend(np.ascontiguousarray(b, dtype=_F8).tobytes() for b in blocks)
    return b"".join(parts)


def _complex_to_f8(values: np.ndarray) -> np.ndarray:
    v = np.ascontiguousarray(values, dtype=np.complex128)
    return v.view(np.float64).astype(_F8, copy=False)


def _unpack(path) -> tuple[dict, bytes]:
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:8] != MAGIC:
        raise ContainerError(f"{path}: not a SARNAV1 container")
    (n,) = struct.unpack("<I", raw[8:12])
    try:
        header = json.loads(raw[12 : 12 + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ContainerError(f"{path}: corrupt header ({exc})") from None
    return header, raw[12 + n :]


def _read_complex(payload: bytes, shape, offset: int = 0) -> tuple[np.ndarray, int]:
    count = 2 * int(np.prod(shape))
    nbytes = 8 * count
    if len(payload) < offset + nbytes:
        raise ContainerError("payload shorter than header dimensions")
    f = np.frombuffer(payload, dtype=_F8, count=count, offset=offset)
    v = f.astype(np.float64).view(np.complex128).reshape(shape)
    return v, offset + nbytes


def save_data(path, dm: DataMatrix, prf: float | None = None) -> None:
    header = {
        "version": VERSION,
        "kind": dm.kind,
        "dims": [dm.n_pulses, dm.n_fast],
        "fs": dm.fs,
        "t_start": dm.t_start,
        "mf_delay": dm.mf_delay,
        "prf": prf,
    }
    atomic_write_bytes(path, _pack(header, [_complex_to_f8(dm.values)]))


def load_data(path) -> DataMatrix:
    header, payload = _unpack(path)
    if header.get("kind") not in ("raw", "range_compressed"):
        raise ContainerError(f"{path}: expected a data matrix, got kind {header.get('kind')!r}")
    values, end = _read_complex(payload, tuple(header["dims"]))
    if end != len(payload):
        raise ContainerError(f"{path}: trailing bytes after payload")
    return DataMatrix(values, header["t_start"], header["fs"], header["kind"], header.get("mf_delay", 0.0))


def _grid_header(grid: ImageGrid) -> dict:
    return {
        "origin": grid.origin.tolist(),
        "axis_along": grid.axis_along.tolist(),
        "axis_cross": grid.axis_cross.tolist(),
        "spacing_along": grid.spacing_along,
        "spacing_cross": grid.spacing_cross,
        "n_along": grid.n_along,
        "n_cross": grid.n_cross,
    }


def save_image(path, img: ComplexImage) -> None:
    header = {
        "version": VERSION,
        "kind": "image",
        "dims": list(img.grid.shape),
        "grid": _grid_header(img.grid),
        "blocks": ["values", "skipped_fraction"],
    }
    skipped = np.ascontiguousarray(img.skipped_fraction, dtype=_F8)
    atomic_write_bytes(path, _pack(header, [_complex_to_f8(img.values), skipped]))


def load_image(path) -> ComplexImage:
    header, payload = _unpack(path)
    if header.get("kind") != "image":
        raise ContainerError(f"{path}: expected an image, got kind {header.get('kind')!r}")
    grid = ImageGrid(**header["grid"])
    shape = tuple(header["dims"])
    values, off = _read_complex(payload, shape)
    count = int(np.prod(shape))
    if len(payload) != off + 8 * count:
        raise ContainerError(f"{path}: payload size does not match dimensions")
    skipped = np.frombuffer(payload, dtype=_F8, count=count, offset=off).astype(np.float64).reshape(shape)
    return ComplexImage(grid, values, skipped)
