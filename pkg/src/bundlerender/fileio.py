"""Image and depth-map file formats.

Color images are 8-bit PNG, normalized to [0, 1] floats in memory.  Depth
maps use the PFM format: header line ``Pf`` (single channel), a dimensions
line ``W H``, a scale line whose sign encodes byte order (we always write
``-1.0`` = little-endian float32), then rows bottom-to-top.  Infinite depths
round-trip as float32 +inf.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .validation import check_color_image


def write_png(path, image) -> None:
    img = check_color_image(image, "image")
    data = np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(data, mode="RGB").save(path, format="PNG")


def read_png(path) -> np.ndarray:
    with Image.open(path) as img:
        data = np.asarray(img.convert("RGB"), dtype=np.float64)
    return data / 255.0


def write_pfm(path, depth) -> None:
    arr = np.asarray(depth, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError(f"depth map must be 2-D, got shape {arr.shape}")
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(b"Pf\n")
        fh.write(f"{w} {h}\n".encode("ascii"))
        fh.write(b"-1.0\n")
        fh.write(arr[::-1].astype("<f4").tobytes())


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.readline().strip()
        if header not in (b"Pf", b"PF"):
            raise ValueError(f"not a PFM file: header {header!r}")
        channels = 3 if header == b"PF" else 1
        dims = fh.readline().split()
        if len(dims) != 2:
            raise ValueError(f"malformed PFM dimensions line: {dims!r}")
        w, h = int(dims[0]), int(dims[1])
        scale = float(fh.readline().strip())
        endian = "<" if scale < 0 else ">"
        count = w * h * channels
        data = np.frombuffer(fh.read(count * 4), dtype=f"{endian}f4", count=count)
    data = data.reshape((h, w) if channels == 1 else (h, w, channels))
    return np.asarray(data[::-1], dtype=np.float64)
