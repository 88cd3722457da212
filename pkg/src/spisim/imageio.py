"""Grayscale image I/O for scenes and exported reconstructions.

Reads 8/16-bit binary PGM (P5) and grayscale PNG into float arrays in
[0, 1]; writes 8-bit binary PGM.  Exported reconstructions are clipped
to non-negative values and max-normalized before quantization.
"""

from __future__ import annotations

import numpy as np
from PIL import Image


def read_image(path) -> np.ndarray:
    """Load a grayscale image as a 2-D float array scaled to [0, 1]."""
    with open(path, "rb") as f:
        magic = f.read(2)
    if magic == b"P5":
        return _read_pgm(path)
    img = Image.open(path).convert("L")
    return np.asarray(img, dtype=float) / 255.0


def _read_pgm(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    fields = []
    pos = 0
    while len(fields) < 4:
        if pos >= len(data):
            raise ValueError(f"{path}: truncated PGM header")
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        if data[pos:pos + 1].isspace():
            pos += 1
            continue
        end = pos
        while end < len(data) and not data[end:end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    if fields[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM file")
    width, height, maxval = (int(v) for v in fields[1:])
    pos += 1  # single whitespace after maxval
    if maxval < 256:
        raster = np.frombuffer(data, dtype=np.uint8, count=width * height,
                               offset=pos)
    else:
        raster = np.frombuffer(data, dtype=">u2", count=width * height,
                               offset=pos)
    return raster.reshape(height, width).astype(float) / maxval


def write_pgm(path, image: np.ndarray) -> None:
    """Write a [0, 1] float image as 8-bit binary PGM."""
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise ValueError("expected a 2-D image")
    quant = np.clip(np.rint(image * 255.0), 0, 255).astype(np.uint8)
    header = f"P5\n{image.shape[1]} {image.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as f:
        f.write(header)
        f.write(quant.tobytes())


def export_reconstruction(path, raw_image: np.ndarray) -> None:
    """Export an estimate: clip to >= 0, max-normalize, write 8-bit PGM."""
    img = np.clip(np.asarray(raw_image, dtype=float), 0.0, None)
    peak = img.max()
    if peak > 0.0:
        img = img / peak
    write_pgm(path, img)


def resample(image: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinearly resample a 2-D float image to width x height."""
    image = np.asarray(image, dtype=float)
    if image.shape == (height, width):
        return image
    pil = Image.fromarray(image.astype(np.float32), mode="F")
    return np.asarray(pil.resize((width, height), Image.BILINEAR), dtype=float)
