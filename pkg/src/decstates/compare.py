"""Distances and match predicates between conditional distributions.

The array functions (``*_rows``) compare one distribution ``q`` against every
row of a matrix ``P`` at once; clustering relies on them. The scalar
:func:`distance` and :func:`match` wrap them for :class:`Distribution` inputs.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaincc

from .core import DimensionMismatch, Distribution, ParameterError


class Metric(str, enum.Enum):
    CHI_SQUARE = "chi-square"
    BHATTACHARYYA = "bhattacharyya"
    JENSEN_SHANNON = "jensen-shannon"
    VARIATIONAL = "variational"
    HARMONIC_MEAN = "harmonic-mean"
    EXACT = "exact"


@dataclass(frozen=True)
class MatchSpec:
    """Match predicate: a metric and its threshold.

    For ``CHI_SQUARE`` the threshold is the significance level alpha and two
    count vectors match when the test p-value is at least alpha. For the other
    metrics it is the largest accepted distance. ``EXACT`` matches identical
    distributions only and ignores the threshold.
    """

    metric: Metric = Metric.CHI_SQUARE
    threshold: float = 0.05

    def __post_init__(self):
        try:
            metric = Metric(self.metric)
        except ValueError:
            raise ParameterError(f"unknown metric {self.metric!r}") from None
        object.__setattr__(self, "metric", metric)
        t = float(self.threshold)
        if metric is Metric.CHI_SQUARE:
            if not 0 < t < 1:
                raise ParameterError("chi-square significance level must lie in (0, 1)")
        elif not (t >= 0 and math.isfinite(t)):
            raise ParameterError("distance threshold must be a finite number >= 0")
        object.__setattr__(self, "threshold", t)

    @property
    def needs_counts(self) -> bool:
        return self.metric is Metric.CHI_SQUARE


def bhattacharyya_rows(P: np.ndarray, q: np.ndarray) -> np.ndarray:
    bc = np.sqrt(P * q).sum(axis=-1)
    with np.errstate(divide="ignore"):
        d = -np.log(bc)
    # rounding can leave bc a hair off 1 for identical rows
    return np.where(np.all(P == q, axis=-1), 0.0, np.maximum(d, 0.0))


def jensen_shannon_rows(P: np.ndarray, q: np.ndarray) -> np.ndarray:
    m = 0.5 * (P + q)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(P > 0, P * np.log(P / m), 0.0)
        b = np.where(q > 0, q * np.log(q / m), 0.0)
    return np.maximum(0.5 * a.sum(axis=-1) + 0.5 * b.sum(axis=-1), 0.0)


def variational_rows(P: np.ndarray, q: np.ndarray) -> np.ndarray:
    return 0.5 * np.abs(P - q).sum(axis=-1)


def harmonic_mean_rows(P: np.ndarray, q: np.ndarray) -> np.ndarray:
    s = P + q
    with np.errstate(divide="ignore", invalid="ignore"):
        hm = np.where(s > 0, 2.0 * P * q / s, 0.0).sum(axis=-1)
        d = -np.log(hm)
    return np.where(np.all(P == q, axis=-1), 0.0, np.maximum(d, 0.0))


def chi_square_divergence_rows(P: np.ndarray, q: np.ndarray) -> np.ndarray:
    s = P + q
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(s > 0, (P - q) ** 2 / s, 0.0).sum(axis=-1)


def exact_rows(P: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.where(np.all(P == q, axis=-1), 0.0, np.inf)


_ROWS = {
    Metric.BHATTACHARYYA: bhattacharyya_rows,
    Metric.JENSEN_SHANNON: jensen_shannon_rows,
    Metric.VARIATIONAL: variational_rows,
    Metric.HARMONIC_MEAN: harmonic_mean_rows,
    Metric.CHI_SQUARE: chi_square_divergence_rows,
    Metric.EXACT: exact_rows,
}


def distance_rows(P: np.ndarray, q: np.ndarray, metric) -> np.ndarray:
    return _ROWS[Metric(metric)](P, q)


def chi_square_rows(A: np.ndarray, b: np.ndarray):
    """Two-sample chi-square test of count vector ``b`` against every row of ``A``.

    Bins where both counts are zero are dropped; ``dof`` is the number of
    remaining bins minus one. Returns ``(statistic, dof, p_value)`` arrays.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    na = A.sum(axis=-1, keepdims=True)
    nb = b.sum()
    pooled = A + b
    used = pooled > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ra = np.sqrt(nb / na)
        rb = np.sqrt(na / nb)
        terms = np.where(used, (A * ra - b * rb) ** 2 / pooled, 0.0)
    stat = terms.sum(axis=-1)
    dof = used.sum(axis=-1) - 1
    p = np.ones_like(stat)
    ok = dof > 0
    p[ok] = gammaincc(dof[ok] / 2.0, stat[ok] / 2.0)
    return stat, dof, p


def chi_square_test(a, b):
    """Scalar form of :func:`chi_square_rows`: ``(statistic, dof, p_value)``."""
    stat, dof, p = chi_square_rows(np.asarray(a, dtype=float)[None, :], b)
    return float(stat[0]), int(dof[0]), float(p[0])


def _check_pair(p: Distribution, q: Distribution):
    if not p.same_support(q):
        raise DimensionMismatch("distributions are defined over different sample sets")


def distance(p: Distribution, q: Distribution, metric) -> float:
    """Dissimilarity between two distributions over the same sample set.

    Bhattacharyya and harmonic-mean distances are ``inf`` for disjoint supports.
    ``CHI_SQUARE`` here gives the symmetric chi-square divergence
    ``sum (p - q)^2 / (p + q)``; the test itself is :func:`match`.
    """
    _check_pair(p, q)
    return float(distance_rows(p.weights[None, :], q.weights, metric)[0])


def match(p: Distribution, q: Distribution, spec: MatchSpec,
          counts: Optional[tuple] = None) -> bool:
    """Whether ``p`` and ``q`` are considered the same distribution under ``spec``.

    The chi-square predicate needs the raw count vectors behind ``p`` and ``q``.
    """
    _check_pair(p, q)
    if spec.metric is Metric.CHI_SQUARE:
        if counts is None:
            raise ParameterError("the chi-square test needs raw count vectors")
        a, b = (np.asarray(c, dtype=float) for c in counts)
        if a.shape != p.weights.shape or b.shape != q.weights.shape:
            raise DimensionMismatch("count vectors must align with the sample set")
        return chi_square_test(a, b)[2] >= spec.threshold
    if spec.metric is Metric.EXACT:
        return bool(np.array_equal(p.weights, q.weights))
    return distance(p, q, spec.metric) <= spec.threshold
