"""Pixel-neighbourhood reconstruction for greyscale images."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..compare import MatchSpec, Metric
from ..core import DataError, ObservationSet, ParameterError, UtilityKind, make_utility
from ..density import DEFAULT_CUTOFF, build_kde
from .analysis import Reconstruction, reconstruct
from .render import ComplexityField, GreyImage

NONE = "none"
SUBTRACT_MIN = "subtract-min"
RADIUS = 2
GREY_LEVELS = np.arange(256, dtype=float).reshape(-1, 1)

# 5x5 block without its corners and center, row by row
NEIGHBOR_OFFSETS = np.array([(dy, dx) for dy in range(-RADIUS, RADIUS + 1)
                             for dx in range(-RADIUS, RADIUS + 1)
                             if (dy, dx) != (0, 0) and not (abs(dy) == abs(dx) == RADIUS)])


@dataclass(frozen=True, eq=False)
class ImageObservations:
    observations: ObservationSet
    shift: np.ndarray  # value subtracted from each pair (zeros without preprocessing)
    interior: tuple    # (rows, cols) of pixels that have a pair

    def restore(self):
        """Original (x, z) values, undoing the per-pair shift."""
        O = self.observations
        return O.x + self.shift[:, None], O.z + self.shift[:, None]


def image_to_observations(img: GreyImage, preprocess: str = NONE) -> ImageObservations:
    """One pair per pixel at least two pixels from every border.

    ``x`` is the 20-pixel neighbourhood, ``z`` the center pixel. With
    ``subtract-min`` the smallest of the 21 values is subtracted from all of
    them and recorded in ``shift``.
    """
    if preprocess not in (NONE, SUBTRACT_MIN):
        raise ParameterError(f"unknown preprocessing {preprocess!r}")
    if img.width < 2 * RADIUS + 1 or img.height < 2 * RADIUS + 1:
        raise DataError("image must be at least 5x5")
    p = img.pixels.astype(float)
    rows = np.arange(RADIUS, img.height - RADIUS)
    cols = np.arange(RADIUS, img.width - RADIUS)
    r = rows[:, None, None] + NEIGHBOR_OFFSETS[None, None, :, 0]
    c = cols[None, :, None] + NEIGHBOR_OFFSETS[None, None, :, 1]
    x = p[r, c].reshape(-1, NEIGHBOR_OFFSETS.shape[0])
    z = p[RADIUS:-RADIUS, RADIUS:-RADIUS].reshape(-1, 1)
    shift = np.zeros(z.shape[0])
    if preprocess == SUBTRACT_MIN:
        shift = np.minimum(x.min(axis=1), z[:, 0])
        x = x - shift[:, None]
        z = z - shift[:, None]
    return ImageObservations(ObservationSet(x, z), shift, (rows.size, cols.size))


@dataclass(frozen=True, eq=False)
class ImageResult:
    image: GreyImage
    pairs: ImageObservations
    reconstruction: Reconstruction

    def complexity_field(self, measure: str = "D") -> ComplexityField:
        values = self.reconstruction.local(measure).reshape(self.pairs.interior)
        return ComplexityField(values, (RADIUS,) * 4)


def image_filter(img: GreyImage, h: Optional[float] = 5.0, tau: float = 15.0,
                 preprocess: str = SUBTRACT_MIN, delta: float = 0.05,
                 cutoff: float = DEFAULT_CUTOFF, metric=Metric.BHATTACHARYYA) -> ImageResult:
    """Decisional states of pixel neighbourhoods.

    Conditionals p(center | neighbourhood) are kernel estimates over all 256
    grey levels, states are Bhattacharyya matches within ``delta``, and the
    decision is the grey level that maximises the thresholded-absolute
    utility with free band ``tau``. Kernel estimates carry no raw counts, so
    ``metric`` cannot be the chi-square test.
    """
    pairs = image_to_observations(img, preprocess)
    O = pairs.observations
    model = build_kde(O, h, GREY_LEVELS, cutoff=cutoff)
    r = reconstruct(O, model, MatchSpec(metric, delta),
                    make_utility(UtilityKind.THRESHOLDED_ABSOLUTE, tau=tau),
                    candidates=GREY_LEVELS)
    return ImageResult(img, pairs, r)
