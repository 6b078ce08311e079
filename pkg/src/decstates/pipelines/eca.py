"""Elementary cellular automata and light-cone complexity filtering."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..compare import MatchSpec, Metric
from ..core import DataError, ObservationSet, ParameterError, UtilityKind, make_utility
from ..density import build_discrete
from .analysis import Reconstruction, reconstruct
from .render import ComplexityField


@dataclass(frozen=True, eq=False)
class EcaField:
    """Space-time diagram: ``cells[t, i]`` is cell ``i`` at row ``t`` (0 or 1)."""

    cells: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.cells, dtype=np.uint8)
        if c.ndim != 2 or c.size == 0:
            raise DataError("a field needs a non-empty 2-D grid")
        if c.max() > 1:
            raise DataError("cells must be 0 or 1")
        c.setflags(write=False)
        object.__setattr__(self, "cells", c)

    @property
    def steps(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]


def rule_table(rule: int) -> np.ndarray:
    """Output for each neighborhood value ``4*left + 2*center + right``."""
    if not 0 <= rule <= 255:
        raise ParameterError("rule must lie in 0..255")
    return np.array([(rule >> k) & 1 for k in range(8)], dtype=np.uint8)


def step(row: np.ndarray, table: np.ndarray) -> np.ndarray:
    return table[4 * np.roll(row, 1) + 2 * row + np.roll(row, -1)]


def run_eca(rule: int, width: int, steps: int, drop: int = 0, seed: int = 42) -> EcaField:
    """Evolve a random row for ``drop + steps`` rows and keep the last ``steps``.

    Row 0 is the random initial row (each cell 1 with probability 1/2); the
    boundary is cyclic.
    """
    if width < 3:
        raise ParameterError("width must be at least 3")
    if steps < 1 or drop < 0:
        raise ParameterError("steps must be positive and drop non-negative")
    table = rule_table(rule)
    rng = np.random.default_rng(seed)
    rows = np.empty((drop + steps, width), dtype=np.uint8)
    rows[0] = rng.integers(0, 2, width, dtype=np.uint8)
    for t in range(1, rows.shape[0]):
        rows[t] = step(rows[t - 1], table)
    return EcaField(rows[drop:])


def cone_offsets(depth: int, past: bool) -> np.ndarray:
    """``(dt, dj)`` rows of a light cone in raster order (earliest row first, left to right).

    The past cone covers ``dt = -(depth-1) .. 0`` (present cell included,
    ``depth**2`` cells); the future cone covers ``dt = 1 .. depth-1``
    (``depth**2 - 1`` cells).
    """
    ks = range(depth - 1, -1, -1) if past else range(1, depth)
    out = [((-k if past else k), j) for k in ks for j in range(-k, k + 1)]
    return np.array(out, dtype=np.intp).reshape(-1, 2)


def extract_light_cones(field: EcaField, d_past: int, d_future: int) -> ObservationSet:
    """Pool (past cone, future cone) pairs over every cell whose cones fit in time.

    Columns wrap around, so only the first ``d_past - 1`` and last
    ``d_future - 1`` rows lack pairs. Observations are ordered row by row.
    """
    if d_past < 1 or d_future < 2:
        raise ParameterError("need d_past >= 1 and d_future >= 2")
    if field.steps < d_past + d_future - 1:
        raise DataError("field has too few rows for these cone depths")
    if field.width < 2 * max(d_past, d_future) - 1:
        raise DataError("field is narrower than the widest cone row")
    rows = np.arange(d_past - 1, field.steps - d_future + 1)
    cols = np.arange(field.width)

    def gather(off):
        tt = rows[:, None] + off[None, :, 0]
        jj = (cols[:, None] + off[None, :, 1]) % field.width
        g = field.cells[tt[:, None, :], jj[None, :, :]]
        return g.reshape(-1, off.shape[0]).astype(float)

    return ObservationSet(gather(cone_offsets(d_past, True)),
                          gather(cone_offsets(d_future, False)))


def cone_margins(field: EcaField, d_past: int, d_future: int) -> tuple:
    """(top, bottom, left, right) rows/columns without a value."""
    return (d_past - 1, d_future - 1, 0, 0)


@dataclass(frozen=True, eq=False)
class CaResult:
    field: EcaField
    reconstruction: Reconstruction
    d_past: int
    d_future: int

    def complexity_field(self, measure: str) -> ComplexityField:
        """Local complexity of ``measure`` (C, D, P or V) laid out on the grid."""
        values = self.reconstruction.local(measure)
        n_rows = self.field.steps - self.d_past - self.d_future + 2
        return ComplexityField(values.reshape(n_rows, self.field.width),
                               cone_margins(self.field, self.d_past, self.d_future))


def ca_filter(field: EcaField, d_past: int = 6, d_future: int = 4) -> CaResult:
    """Light-cone reconstruction with exact-match states and cone-match utility.

    Conditionals come from the counting estimator over observed future cones,
    states are exact-match classes, and the prediction is chosen among the
    observed future cones to maximise the expected number of matching cells.
    """
    O = extract_light_cones(field, d_past, d_future)
    model = build_discrete(O)
    r = reconstruct(O, model, MatchSpec(Metric.EXACT, 0.0),
                    make_utility(UtilityKind.CONE_MATCH_COUNT), candidates=model.samples)
    return CaResult(field, r, d_past, d_future)
