"""File formats: binary graymaps, symbol series, and CSV fields."""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from ..core import DataError
from .render import ComplexityField, GreyImage

_TOKEN = re.compile(rb"#[^\n]*\n?|\s+")


def read_pgm(path) -> GreyImage:
    """Read a binary (P5) graymap with maxval at most 255."""
    data = Path(path).read_bytes()
    fields, pos = [], 0
    while len(fields) < 4:
        m = _TOKEN.match(data, pos)
        if m:
            pos = m.end()
            continue
        end = pos
        while end < len(data) and not data[end:end + 1].isspace() and data[end:end + 1] != b"#":
            end += 1
        if end == pos:
            raise DataError(f"{path}: truncated graymap header")
        fields.append(data[pos:end])
        pos = end
    if fields[0] != b"P5":
        raise DataError(f"{path}: not a binary graymap (magic {fields[0]!r})")
    try:
        width, height, maxval = (int(f) for f in fields[1:])
    except ValueError:
        raise DataError(f"{path}: malformed graymap header") from None
    if width < 1 or height < 1 or not 0 < maxval < 256:
        raise DataError(f"{path}: unsupported graymap dimensions or maxval")
    pos += 1  # single whitespace byte before the raster
    raster = data[pos:pos + width * height]
    if len(raster) != width * height:
        raise DataError(f"{path}: raster is shorter than {width}x{height}")
    return GreyImage(np.frombuffer(raster, dtype=np.uint8).reshape(height, width))


def write_pgm(path, img: GreyImage):
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + np.ascontiguousarray(img.pixels, dtype=np.uint8).tobytes())


def read_series(path):
    """Symbols from a text file, as codes into the sorted alphabet.

    Tokens are whitespace separated; a file holding a single token is read
    one character per symbol.
    """
    tokens = Path(path).read_text().split()
    if len(tokens) == 1:
        tokens = list(tokens[0])
    if not tokens:
        raise DataError(f"{path}: no symbols")
    alphabet = sorted(set(tokens))
    index = {a: k for k, a in enumerate(alphabet)}
    return np.array([index[t] for t in tokens], dtype=np.int64), tuple(alphabet)


def field_csv(f: ComplexityField) -> str:
    """Rows of the full grid; margin cells are empty."""
    lines = []
    for row in f.full():
        lines.append(",".join("" if np.isnan(v) else f"{v:.12g}" for v in row))
    return "\n".join(lines) + "\n"


def write_field_csv(path, f: ComplexityField):
    Path(path).write_text(field_csv(f))
