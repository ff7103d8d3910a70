"""Image encoding for rendered frames: binary PPM (P6) and PNG."""

from __future__ import annotations

import io

import numpy as np
from PIL import Image


def write_ppm(path: str, pixels: np.ndarray) -> None:
    """Write RGB(A) uint8 pixels of shape (h, w, 3|4) as binary PPM;
    an alpha channel is dropped."""
    rgb = _as_rgb(pixels)
    h, w = rgb.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


def read_ppm(path: str) -> np.ndarray:
    """Read a binary PPM back into (h, w, 3) uint8."""
    with open(path, "rb") as fh:
        data = fh.read()
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos] in b" \t\r\n":
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos] not in b" \t\r\n":
            pos += 1
        fields.append(data[start:pos])
    if fields[0] != b"P6":
        raise ValueError(f"{path}: not a binary PPM (magic {fields[0]!r})")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    pos += 1  # single whitespace after maxval
    pix = np.frombuffer(data, np.uint8, count=w * h * 3, offset=pos)
    return pix.reshape(h, w, 3).copy()


def write_png(path: str, pixels: np.ndarray) -> None:
    Image.fromarray(_as_rgb(pixels), "RGB").save(path, format="PNG")


def png_bytes(pixels: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(_as_rgb(pixels), "RGB").save(buf, format="PNG")
    return buf.getvalue()


def _as_rgb(pixels: np.ndarray) -> np.ndarray:
    if pixels.ndim != 3 or pixels.shape[2] not in (3, 4):
        raise ValueError(f"expected (h, w, 3|4) pixels, got shape {pixels.shape}")
    return np.ascontiguousarray(pixels[:, :, :3], np.uint8)
