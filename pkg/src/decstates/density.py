"""Conditional distribution estimators p(Z|x): observation counting and kernel density.

The kernel is ``K(a, b) = exp(-|a - b|^2 / h)`` on the joint (x, z) space, so
``K(a, a) = 1`` and ``h`` divides the squared distance directly (it is not
squared). Contributions below ``cutoff`` are dropped; a KD-tree over the
configuration space restricts the sum to points that can reach the cutoff.
"""
from __future__ import annotations

import math
import os
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .core import (DataError, Distribution, ObservationSet, ParameterError,
                   UnseenConfiguration, ZeroMass, as_point, as_points, unique_rows)

DEFAULT_CUTOFF = 1e-6
DISCRETE = "discrete"
KERNEL = "kernel"


def default_workers() -> int:
    """Worker count from ``DECSTATES_WORKERS``, defaulting to 1."""
    try:
        return max(1, int(os.environ.get("DECSTATES_WORKERS", "1")))
    except ValueError:
        return 1


class DensityModel:
    """Estimator of p(Z|x) over a fixed ordered sample set ``S``.

    Built by :func:`build_discrete` or :func:`build_kde`; immutable afterwards
    apart from the per-configuration result cache. Distinct configurations are
    numbered in order of first appearance ("nodes"); ``node_of[i]`` is the node
    of observation ``i``.
    """

    def __init__(self, mode, observations: ObservationSet, samples, *, h=None,
                 cutoff=DEFAULT_CUTOFF, exact=False, counts=None, cache_size=None):
        self.mode = mode
        self.observations = observations
        self.samples = samples
        self.h = h
        self.cutoff = cutoff
        self.exact = exact
        self.cache_size = cache_size
        self.configs, self.node_of, self.node_counts = unique_rows(observations.x)
        self._index = {row.tobytes(): k for k, row in enumerate(self.configs)}
        self._counts = counts
        self._cache = OrderedDict()
        self._tree = None
        if mode == KERNEL and not exact and cutoff > 0:
            self._tree = cKDTree(observations.x)

    def __repr__(self):
        extra = f", h={self.h:g}" if self.mode == KERNEL and not self.exact else ""
        return (f"DensityModel({self.mode}{', exact' if self.exact else ''}{extra}, "
                f"N={len(self.observations)}, |S|={self.n_samples})")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.configs.shape[0]

    @property
    def has_counts(self) -> bool:
        return self._counts is not None

    def node_index(self, x) -> Optional[int]:
        x = as_point(x, self.observations.x_dim) + 0.0
        return self._index.get(x.tobytes())

    def count_matrix(self) -> sparse.csr_matrix:
        """Raw ``count(x, s)`` per node and sample (discrete mode only)."""
        if self._counts is None:
            raise DataError("raw counts exist only for discrete estimators")
        return self._counts

    def weights(self, x) -> np.ndarray:
        """Normalized conditional weights over ``S`` at configuration ``x``."""
        x = as_point(x, self.observations.x_dim) + 0.0
        key = x.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            self._cache.move_to_end(key)
            return hit
        if self.mode == DISCRETE:
            w = self._discrete_weights(key)
        elif self.exact:
            w = self._exact_weights(x)
        else:
            w = self._kernel_weights(x)
        w.setflags(write=False)
        self._cache[key] = w
        if self.cache_size is not None and len(self._cache) > self.cache_size:
            self._cache.popitem(last=False)
        return w

    def _discrete_weights(self, key) -> np.ndarray:
        node = self._index.get(key)
        if node is None:
            raise UnseenConfiguration("configuration was never observed")
        row = self._counts.getrow(node)
        w = np.zeros(self.n_samples)
        w[row.indices] = row.data / self.node_counts[node]
        return w

    def _exact_weights(self, x) -> np.ndarray:
        obs = self.observations
        hit = np.all(obs.x == x, axis=1)
        n = int(hit.sum())
        if n == 0:
            raise ZeroMass("no observation matches the query configuration exactly")
        zs = obs.z[hit]
        counts = np.zeros(self.n_samples)
        for k, s in enumerate(self.samples):
            counts[k] = np.count_nonzero(np.all(zs == s, axis=1))
        if counts.sum() == 0:
            raise ZeroMass("observed outcomes at this configuration are not in S")
        return counts / n

    def _kernel_weights(self, x) -> np.ndarray:
        obs = self.observations
        h = self.h
        if self._tree is not None:
            radius = math.sqrt(h * math.log(1.0 / self.cutoff))
            idx = np.asarray(self._tree.query_ball_point(x, radius), dtype=np.intp)
        else:
            idx = np.arange(len(obs))
        if idx.size == 0:
            raise ZeroMass("query configuration is too far from all observations")
        dx = obs.x[idx] - x
        dx2 = np.einsum("ij,ij->i", dx, dx)
        k = np.exp(-(dx2[:, None] + cdist(obs.z[idx], self.samples, "sqeuclidean")) / h)
        if self.cutoff > 0:
            k[k < self.cutoff] = 0.0
        w = k.sum(axis=0)
        total = w.sum()
        if not total > 0:
            raise ZeroMass("every kernel contribution fell below the cutoff")
        return w / total

    def node_distributions(self, workers: Optional[int] = None):
        """Row ``k`` holds the conditional at node ``k``.

        Sparse CSR for discrete models, dense otherwise.
        """
        if self.mode == DISCRETE:
            inv = sparse.diags(1.0 / self.node_counts.astype(float))
            p = (inv @ self._counts).tocsr()
            p.sort_indices()
            return p
        workers = workers or default_workers()
        rows = list(self.configs)
        if workers > 1 and len(rows) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                out = list(pool.map(self.weights, rows))
        else:
            out = [self.weights(r) for r in rows]
        return np.vstack(out)


def _sample_index(samples: np.ndarray, z: np.ndarray) -> np.ndarray:
    lookup = {row.tobytes(): k for k, row in enumerate(samples + 0.0)}
    idx = np.empty(z.shape[0], dtype=np.intp)
    for i, row in enumerate(z + 0.0):
        k = lookup.get(row.tobytes())
        if k is None:
            raise DataError(f"observed outcome {row} is missing from the sample set")
        idx[i] = k
    return idx


def build_discrete(O: ObservationSet, S=None, cache_size=None) -> DensityModel:
    """Counting estimator ``p(z|x) = count(x, z) / count(x)``.

    ``S`` defaults to the distinct observed outcomes in order of first
    appearance; a user-supplied ``S`` must contain every observed outcome.
    """
    if S is None:
        S, z_idx, _ = unique_rows(O.z)
    else:
        S = as_points(S, O.z_dim) + 0.0
        if unique_rows(S)[0].shape[0] != S.shape[0]:
            raise ParameterError("sample set has duplicate points")
        z_idx = _sample_index(S, O.z)
    S = np.array(S, dtype=float)
    S.setflags(write=False)
    model = DensityModel(DISCRETE, O, S, cache_size=cache_size)
    counts = sparse.coo_matrix(
        (np.ones(len(O)), (model.node_of, z_idx)),
        shape=(model.n_nodes, S.shape[0])).tocsr()
    counts.sum_duplicates()
    counts.sort_indices()
    model._counts = counts
    return model


def default_bandwidth(O: ObservationSet) -> float:
    """Mean distance from each joint point (x_i, z_i) to its nearest distinct joint point."""
    joint = np.hstack([O.x, O.z])
    distinct, inverse, _ = unique_rows(joint)
    if distinct.shape[0] < 2:
        raise DataError("all joint points are identical; pass an explicit bandwidth h")
    d, _ = cKDTree(distinct).query(distinct, k=2)
    return float(d[inverse, 1].mean())


def grid_samples(O: ObservationSet, n: int = 256) -> np.ndarray:
    """Uniform grid of ``n`` points over the observed range of a 1-D Z."""
    if O.z_dim != 1:
        raise ParameterError("a default grid sample set needs a 1-D Z; pass S explicitly")
    lo, hi = float(O.z.min()), float(O.z.max())
    return np.linspace(lo, hi, n if hi > lo else 1).reshape(-1, 1)


def build_kde(O: ObservationSet, h: Optional[float], S, cutoff: float = DEFAULT_CUTOFF,
              exact: bool = False, cache_size=None) -> DensityModel:
    """Kernel density estimator on the joint space, conditioned on x over ``S``.

    ``exact=True`` selects the delta kernel (exact joint-point match), which
    reproduces the counting estimator; ``h`` is then ignored.
    """
    if S is None:
        S = grid_samples(O)
    S = as_points(S, O.z_dim) + 0.0
    if S.shape[0] == 0:
        raise ParameterError("sample set S is empty")
    S.setflags(write=False)
    if not exact:
        if h is None:
            h = default_bandwidth(O)
        if not (h > 0 and np.isfinite(h)):
            raise ParameterError("bandwidth h must be positive")
        if not 0 <= cutoff <= 1:
            raise ParameterError("cutoff must lie in [0, 1]")
        h = float(h)
    return DensityModel(KERNEL, O, S, h=h, cutoff=float(cutoff), exact=exact,
                        cache_size=cache_size)


def conditional(model: DensityModel, x) -> Distribution:
    """p(Z|x) as a normalized :class:`Distribution` over the model's sample set."""
    return Distribution(model.samples, model.weights(x))
