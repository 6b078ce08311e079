"""Shared domain types: observations, distributions, utilities and partitions.

Points are plain 1-D float arrays. Discrete data (symbols, cell states, grey
levels) is embedded as integer-valued reals, so equality of two discrete points
is exact coordinate equality.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class DecStatesError(Exception):
    """Base class for all library errors."""


class ParameterError(DecStatesError, ValueError):
    """A parameter is outside its declared range."""


class DimensionMismatch(DecStatesError, ValueError):
    """Two objects that must share a shape or sample set do not."""


class DataError(DecStatesError, ValueError):
    """The data cannot support the requested computation."""


class UnseenConfiguration(DataError, KeyError):
    """A discrete estimator was queried at a configuration never observed."""

    def __str__(self):
        return ValueError.__str__(self)


class ZeroMass(DataError):
    """Every kernel contribution at the query point fell below the cutoff."""


class NumericError(DecStatesError, ArithmeticError):
    """A computed result violates an invariant it must satisfy."""


def _frozen(a, dtype=float, ndim=None) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    if ndim == 2 and arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    arr.setflags(write=False)
    return arr


def as_point(p, dim: Optional[int] = None) -> np.ndarray:
    """Coerce ``p`` to a 1-D float vector, checking its length against ``dim``."""
    arr = np.atleast_1d(np.asarray(p, dtype=float)).ravel()
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatch(f"point has dimension {arr.shape[0]}, expected {dim}")
    return arr


def as_points(ps, dim: Optional[int] = None) -> np.ndarray:
    """Coerce a sequence of points to an ``(n, dim)`` float array."""
    arr = np.asarray(ps, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim in (None, 1) else arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionMismatch("expected a 2-D array of points")
    if dim is not None and arr.shape[1] != dim:
        raise DimensionMismatch(f"points have dimension {arr.shape[1]}, expected {dim}")
    return arr


def unique_rows(a: np.ndarray):
    """Distinct rows of ``a`` in order of first appearance.

    Returns ``(rows, inverse, counts)`` where ``rows[inverse] == a``.
    """
    a = np.ascontiguousarray(a)
    if a.dtype.kind == "f":
        a = a + 0.0  # fold -0.0 into 0.0 so byte keys match value equality
    if a.shape[0] == 0:
        return a, np.zeros(0, dtype=np.intp), np.zeros(0, dtype=np.intp)
    keys = a.view(np.dtype((np.void, a.dtype.itemsize * a.shape[1]))).ravel()
    _, first, inverse, counts = np.unique(
        keys, return_index=True, return_inverse=True, return_counts=True)
    # np.unique sorts by bytes; re-rank by first appearance
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return a[first[order]], rank[inverse.ravel()], counts[order]


def first_appearance_labels(labels) -> np.ndarray:
    """Relabel arbitrary hashable-valued labels to dense ids 0..K-1 by first appearance."""
    labels = np.asarray(labels)
    if labels.size == 0:
        return np.zeros(0, dtype=np.intp)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return rank[inverse.ravel()].astype(np.intp)


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """Configuration/outcome pairs ``(x_i, z_i)``, with optional transition symbols.

    ``symbols[i]`` is the symbol emitted on the transition ``x_i -> x_{i+1}``.
    """

    x: np.ndarray
    z: np.ndarray
    symbols: Optional[np.ndarray] = None
    sequential: bool = False

    def __post_init__(self):
        x = _frozen(self.x, ndim=2)
        z = _frozen(self.z, ndim=2)
        if x.ndim != 2 or z.ndim != 2:
            raise DimensionMismatch("x and z must be 2-D arrays of points")
        if x.shape[0] < 1:
            raise DataError("an observation set needs at least one pair")
        if x.shape[0] != z.shape[0]:
            raise DimensionMismatch("x and z must hold the same number of points")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z))):
            raise DataError("observations must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        if self.symbols is not None:
            if not self.sequential:
                raise DataError("transition symbols require sequential data")
            s = _frozen(self.symbols, dtype=np.int64)
            if s.shape != (x.shape[0] - 1,):
                raise DimensionMismatch("need exactly one symbol per transition")
            if s.size and s.min() < 0:
                raise DataError("symbols must be non-negative codes")
            object.__setattr__(self, "symbols", s)

    def __len__(self):
        return self.x.shape[0]

    @property
    def x_dim(self) -> int:
        return self.x.shape[1]

    @property
    def z_dim(self) -> int:
        return self.z.shape[1]

    @property
    def alphabet_size(self) -> int:
        if self.symbols is None or self.symbols.size == 0:
            return 0
        return int(self.symbols.max()) + 1


@dataclass(frozen=True, eq=False)
class Distribution:
    """Weights over an ordered sample set ``S`` of points in Z."""

    samples: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        s = _frozen(self.samples, ndim=2)
        w = _frozen(self.weights)
        if w.shape != (s.shape[0],):
            raise DimensionMismatch("one weight per sample is required")
        if not np.all((w >= 0) & np.isfinite(w)):
            raise ParameterError("weights must be finite and non-negative")
        if unique_rows(s)[0].shape[0] != s.shape[0]:
            raise ParameterError("sample points must be pairwise distinct")
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "weights", w)

    @property
    def normalized(self) -> bool:
        return abs(float(self.weights.sum()) - 1.0) <= 1e-9

    def normalize(self) -> "Distribution":
        total = self.weights.sum()
        if total <= 0:
            raise DataError("cannot normalize a distribution with zero mass")
        return Distribution(self.samples, self.weights / total)

    def same_support(self, other: "Distribution") -> bool:
        return (self.samples is other.samples
                or (self.samples.shape == other.samples.shape
                    and np.array_equal(self.samples, other.samples)))

    def mean(self) -> np.ndarray:
        return self.weights @ self.samples / self.weights.sum()


class UtilityKind(str, enum.Enum):
    DELTA = "delta"
    NEG_SQUARED_ERROR = "neg-squared-error"
    THRESHOLDED_ABSOLUTE = "thresholded-absolute"
    CONE_MATCH_COUNT = "cone-match-count"
    TABLE = "table"


@dataclass(frozen=True, eq=False)
class UtilitySpec:
    """A two-argument utility ``U(y, z)``: the payoff of acting on ``y`` when ``z`` happens.

    Use :func:`make_utility` to build one. Instances are callable, and
    :meth:`matrix` evaluates every (prediction, outcome) pair at once.
    """

    kind: UtilityKind
    tau: float = 0.0
    table: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None

    def __call__(self, y, z) -> float:
        return eval_utility(self, y, z)

    @property
    def symmetric(self) -> bool:
        if self.kind is UtilityKind.TABLE:
            return bool(np.array_equal(self.table, self.table.T))
        return True

    def _table_index(self, pts: np.ndarray) -> np.ndarray:
        labels = self.labels
        idx = np.empty(pts.shape[0], dtype=np.intp)
        for k, p in enumerate(pts):
            hit = np.flatnonzero(np.all(labels == p, axis=1))
            if hit.size == 0:
                raise DimensionMismatch(f"point {p} is not a row of the utility table")
            idx[k] = hit[0]
        return idx

    def matrix(self, ys, zs) -> np.ndarray:
        """``U[i, j] = U(ys[i], zs[j])`` for all pairs."""
        ys = np.asarray(ys, dtype=float)
        zs = np.asarray(zs, dtype=float)
        if ys.ndim == 1:
            ys = ys.reshape(-1, 1)
        if zs.ndim == 1:
            zs = zs.reshape(-1, 1)
        if ys.shape[1] != zs.shape[1]:
            raise DimensionMismatch("predictions and outcomes differ in dimension")
        kind = self.kind
        if kind is UtilityKind.TABLE:
            if ys.shape[1] != self.labels.shape[1]:
                raise DimensionMismatch("points do not match the table labels")
            return self.table[np.ix_(self._table_index(ys), self._table_index(zs))]
        if kind is UtilityKind.DELTA:
            if ys.shape[1] == 1:
                return (ys[:, :1] == zs[:, 0][None, :]).astype(float)
            return np.all(ys[:, None, :] == zs[None, :, :], axis=2).astype(float)
        if kind is UtilityKind.CONE_MATCH_COUNT:
            if np.all((ys == 0) | (ys == 1)) and np.all((zs == 0) | (zs == 1)):
                # binary cones: matches = ones agreeing + zeros agreeing
                return ys @ zs.T + (1.0 - ys) @ (1.0 - zs).T
            return (ys[:, None, :] == zs[None, :, :]).sum(axis=2).astype(float)
        if kind is UtilityKind.NEG_SQUARED_ERROR:
            d = ys[:, None, :] - zs[None, :, :]
            return -np.einsum("ijk,ijk->ij", d, d)
        if kind is UtilityKind.THRESHOLDED_ABSOLUTE:
            if ys.shape[1] != 1:
                raise DimensionMismatch("thresholded-absolute utility needs a 1-D Z")
            return -np.maximum(0.0, np.abs(ys[:, :1] - zs[:, 0][None, :]) - self.tau)
        raise ParameterError(f"unknown utility kind {kind!r}")


def make_utility(kind, tau: Optional[float] = None, table=None, labels=None) -> UtilitySpec:
    """Build a :class:`UtilitySpec`.

    ``tau`` is the free-error band of the thresholded-absolute utility.
    ``table`` is a square payoff table whose rows (predictions) and columns
    (outcomes) follow the order of ``labels``; labels default to the integer
    codes ``0..n-1``.
    """
    try:
        kind = UtilityKind(kind)
    except ValueError:
        raise ParameterError(f"unknown utility kind {kind!r}") from None
    if kind is UtilityKind.THRESHOLDED_ABSOLUTE:
        tau = 0.0 if tau is None else float(tau)
        if not np.isfinite(tau) or tau < 0:
            raise ParameterError("tau must be a finite non-negative number")
        return UtilitySpec(kind, tau=tau)
    if kind is UtilityKind.TABLE:
        if table is None:
            raise ParameterError("a table utility needs a table")
        t = np.array(table, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] == 0:
            raise ParameterError("utility table must be square")
        if not np.all(np.isfinite(t)):
            raise ParameterError("utility values must be finite")
        if labels is None:
            labels = np.arange(t.shape[0], dtype=float).reshape(-1, 1)
        labels = as_points(labels)
        if labels.shape[0] != t.shape[0]:
            raise ParameterError("need one label per table row")
        t.setflags(write=False)
        labels = _frozen(labels, ndim=2)
        return UtilitySpec(kind, table=t, labels=labels)
    if tau is not None or table is not None:
        raise ParameterError(f"{kind.value} utility takes no parameters")
    return UtilitySpec(kind)


def eval_utility(U: UtilitySpec, y, z) -> float:
    y = as_point(y)
    z = as_point(z)
    if y.shape != z.shape:
        raise DimensionMismatch("prediction and outcome differ in dimension")
    return float(U.matrix(y[None, :], z[None, :])[0, 0])


class PartitionKind(str, enum.Enum):
    CAUSAL = "causal"
    ISO_UTILITY = "iso-utility"
    ISO_PREDICTION = "iso-prediction"
    DECISIONAL = "decisional"


@dataclass(frozen=True, eq=False)
class StatePartition:
    """Assignment of every observation index to a state id.

    State ids are dense integers ordered by first appearance. Decision-layer
    partitions may carry the optimal prediction sets (``predictions``) and
    maximal expected utilities (``utilities``) of their states.
    """

    kind: PartitionKind
    assignment: np.ndarray
    predictions: Optional[tuple] = None
    utilities: Optional[np.ndarray] = None
    counts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a = np.asarray(self.assignment)
        if a.ndim != 1 or a.size == 0:
            raise DataError("a partition needs at least one observation")
        a = _frozen(first_appearance_labels(a), dtype=np.intp)
        object.__setattr__(self, "assignment", a)
        object.__setattr__(self, "kind", PartitionKind(self.kind))
        object.__setattr__(self, "counts", _frozen(np.bincount(a), dtype=np.intp))

    @classmethod
    def from_labels(cls, kind, labels, **kw) -> "StatePartition":
        return cls(kind, np.asarray(labels), **kw)

    def __len__(self):
        return self.assignment.size

    @property
    def n_states(self) -> int:
        return self.counts.size

    @property
    def masses(self) -> np.ndarray:
        return self.counts / self.assignment.size

    def members(self, state: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == state)

    def blocks(self) -> list:
        """The partition as a list of index arrays, one per state."""
        order = np.argsort(self.assignment, kind="stable")
        return np.split(order, np.cumsum(self.counts)[:-1])

    def refines(self, other: "StatePartition") -> bool:
        """True when every state of ``self`` lies inside one state of ``other``."""
        if len(self) != len(other):
            raise DimensionMismatch("partitions cover different index sets")
        mapped = np.full(self.n_states, -1, dtype=np.intp)
        mapped[self.assignment] = other.assignment
        return bool(np.array_equal(mapped[self.assignment], other.assignment))

    def same_as(self, other: "StatePartition") -> bool:
        return len(self) == len(other) and bool(
            np.array_equal(self.assignment, other.assignment))


def blocks_as_sets(partition: StatePartition) -> set:
    """Set-of-frozensets view, for comparing partitions up to relabeling."""
    return {frozenset(b.tolist()) for b in partition.blocks()}


def check_finite(values: Sequence[float], what: str = "value"):
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{what} must be finite")
    return arr
