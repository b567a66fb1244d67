"""Grayscale image output: binary PGM (P5), with a PGM reader for tests."""
from __future__ import annotations

import os

import numpy as np

from .errors import FormatError


def write_pgm(path: str | os.PathLike, pixels: np.ndarray) -> None:
    """Write an 8-bit grayscale image as binary PGM."""
    arr = np.ascontiguousarray(pixels, dtype=np.uint8)
    if arr.ndim != 2:
        raise FormatError("PGM output requires a 2-D array")
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(arr.tobytes())


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    fields: list[bytes] = []
    off = 0
    while len(fields) < 4:
        while off < len(data) and data[off:off + 1].isspace():
            off += 1
        if data[off:off + 1] == b"#":  # comment line
            off = data.index(b"\n", off) + 1
            continue
        start = off
        while off < len(data) and not data[off:off + 1].isspace():
            off += 1
        fields.append(data[start:off])
    if fields[0] != b"P5":
        raise FormatError(f"not a binary PGM: {fields[0]!r}")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise FormatError("only 8-bit PGM supported")
    off += 1  # single whitespace after maxval
    return np.frombuffer(data, dtype=np.uint8, count=w * h, offset=off).reshape(h, w)
