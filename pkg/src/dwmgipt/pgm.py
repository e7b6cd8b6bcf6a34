"""8-bit grayscale image I/O: PGM (P2/P5) read/write, optional PNG read."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

__all__ = ["read_pgm", "write_pgm", "read_image", "atomic_write_bytes"]


class ImageFormatError(ValueError):
    pass


def _read_tokens(data: bytes, count: int, start: int) -> tuple[list[int], int]:
    """Read whitespace-separated integer tokens, skipping # comments."""
    tokens = []
    i = start
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i : i + 1] == b"#":
            while i < n and data[i : i + 1] != b"\n":
                i += 1
            continue
        j = i
        while j < n and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
            j += 1
        if j == i:
            raise ImageFormatError("truncated header")
        try:
            tokens.append(int(data[i:j]))
        except ValueError as exc:
            raise ImageFormatError(f"bad header token {data[i:j]!r}") from exc
        i = j
    return tokens, i


def read_pgm(path) -> np.ndarray:
    """Read a P2 (ASCII) or P5 (binary) PGM into a float64 array."""
    data = Path(path).read_bytes()
    if data[:2] not in (b"P2", b"P5"):
        raise ImageFormatError(f"{path}: not a PGM file")
    binary = data[:2] == b"P5"
    (width, height, maxval), pos = _read_tokens(data, 3, 2)
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise ImageFormatError(f"{path}: bad PGM dimensions")
    if binary:
        pos += 1  # single whitespace byte after maxval
        if maxval > 255:
            raise ImageFormatError(f"{path}: 16-bit binary PGM not supported")
        raster = np.frombuffer(data, dtype=np.uint8, offset=pos)
        if raster.size < width * height:
            raise ImageFormatError(f"{path}: truncated raster")
        raster = raster[: width * height]
    else:
        values, _ = _read_tokens(data, width * height + 3, 2)
        raster = np.asarray(values[3:], dtype=float)
        if np.any(raster < 0) or np.any(raster > maxval):
            raise ImageFormatError(f"{path}: sample out of range")
    return raster.reshape(height, width).astype(float)


def write_pgm(path, img: np.ndarray, binary: bool = True) -> None:
    """Write an image as 8-bit PGM, clipping and rounding to [0, 255]."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise ValueError("expected a 2-D image")
    raster = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    h, w = raster.shape
    if binary:
        payload = b"P5\n%d %d\n255\n" % (w, h) + raster.tobytes()
    else:
        rows = "\n".join(" ".join(str(v) for v in row) for row in raster)
        payload = ("P2\n%d %d\n255\n" % (w, h) + rows + "\n").encode("ascii")
    atomic_write_bytes(path, payload)


def atomic_write_bytes(path, payload: bytes) -> None:
    """Write-temp-then-rename so readers never observe a partial file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_image(path) -> np.ndarray:
    """Read a grayscale image: PGM natively, PNG via Pillow when available."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in (".pgm", ".pnm"):
        return read_pgm(path)
    if suffix == ".png":
        try:
            from PIL import Image
        except ImportError as exc:
            raise ImageFormatError(
                f"{path}: PNG support requires Pillow; convert to PGM instead"
            ) from exc
        with Image.open(path) as im:
            return np.asarray(im.convert("L"), dtype=float)
    raise ImageFormatError(f"{path}: unsupported image format {suffix!r}")
