"""Complexity fields and their greyscale rendering."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import DataError, ParameterError

MARGIN_GREY = 128  # pixels that have no value
RAW = "raw"
RANK = "rank"


@dataclass(frozen=True, eq=False)
class GreyImage:
    """8-bit greyscale image, ``pixels[row, col]`` in 0..255."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels)
        if p.ndim != 2 or p.size == 0:
            raise DataError("an image needs a non-empty 2-D pixel grid")
        if np.issubdtype(p.dtype, np.floating) and not np.all(p == np.round(p)):
            raise DataError("grey levels must be integers")
        if p.min() < 0 or p.max() > 255:
            raise DataError("grey levels must lie in 0..255")
        p = p.astype(np.uint8)
        p.setflags(write=False)
        object.__setattr__(self, "pixels", p)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True, eq=False)
class ComplexityField:
    """Local complexities (bits) on the interior of a grid.

    ``margins`` is (top, bottom, left, right): rows and columns of the source
    grid that carry no value.
    """

    values: np.ndarray
    margins: tuple = (0, 0, 0, 0)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.size == 0:
            raise DataError("a complexity field needs a non-empty 2-D grid")
        if not np.all(v >= 0):
            raise DataError("complexities must be finite and non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "margins", tuple(int(m) for m in self.margins))

    @property
    def shape(self) -> tuple:
        """Shape of the source grid, margins included."""
        t, b, l, r = self.margins
        return (self.values.shape[0] + t + b, self.values.shape[1] + l + r)

    def full(self) -> np.ndarray:
        """Values on the source grid, NaN where there is none."""
        t, _, l, _ = self.margins
        out = np.full(self.shape, np.nan)
        out[t:t + self.values.shape[0], l:l + self.values.shape[1]] = self.values
        return out


def dense_ranks(values: np.ndarray) -> np.ndarray:
    """Rank of each value among the distinct values (ties share a rank)."""
    return np.unique(values, return_inverse=True)[1].reshape(values.shape)


def _stretch(v: np.ndarray) -> np.ndarray:
    # low -> white (255), high -> black (0); halves round to even
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return np.full(v.shape, 255, dtype=np.uint8)
    return (255 - np.rint(255.0 * (v - lo) / (hi - lo))).astype(np.uint8)


def render_field(f: ComplexityField, mode: str = RAW) -> GreyImage:
    """Greyscale picture of a field: white is the minimum, black the maximum.

    ``raw`` stretches the values linearly; ``rank`` stretches their dense
    ranks, so only the ordering matters. Margins are mid-grey.
    """
    if mode == RAW:
        grey = _stretch(f.values)
    elif mode == RANK:
        grey = _stretch(dense_ranks(f.values).astype(float))
    else:
        raise ParameterError(f"unknown render mode {mode!r}")
    out = np.full(f.shape, MARGIN_GREY, dtype=np.uint8)
    t, _, l, _ = f.margins
    out[t:t + grey.shape[0], l:l + grey.shape[1]] = grey
    return GreyImage(out)


def cells_image(cells: np.ndarray) -> GreyImage:
    """Binary cells as pixels: 0 is white, 1 is black."""
    return GreyImage(np.where(np.asarray(cells) > 0, 0, 255))
