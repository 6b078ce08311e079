"""Causal-state clustering and epsilon-machine determinism enforcement.

Clustering works on distinct configurations ("nodes"): identical x values have
identical conditionals and always share a state. Two nodes end up in the same
causal state iff a chain of pairwise matches links them (connected components
of the match graph, i.e. single-link clustering cut at the match threshold).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import sparse

from .compare import MatchSpec, Metric, chi_square_rows, distance_rows
from .core import (DataError, Distribution, ObservationSet, ParameterError, PartitionKind,
                   StatePartition, first_appearance_labels)
from .density import DensityModel

log = logging.getLogger(__name__)


class UnionFind:
    """Disjoint sets over ``0..n-1`` with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True

    def labels(self) -> np.ndarray:
        return np.array([self.find(i) for i in range(len(self.parent))], dtype=np.intp)


@dataclass(frozen=True, eq=False)
class CausalStateSet:
    """Causal partition plus the averaged conditional of every state.

    ``node_state[k]`` is the state of distinct configuration ``k``;
    ``distributions[s]`` is the representative p(Z|s) over ``samples``.
    """

    partition: StatePartition
    node_of: np.ndarray
    node_state: np.ndarray
    model: Optional[DensityModel] = None
    distributions: Optional[np.ndarray] = None
    converged: bool = True
    iterations: int = 0

    @property
    def n_states(self) -> int:
        return self.partition.n_states

    @property
    def samples(self) -> Optional[np.ndarray]:
        return None if self.model is None else self.model.samples

    def distribution(self, state: int) -> Distribution:
        if self.distributions is None:
            raise DataError("state distributions have not been averaged yet")
        return Distribution(self.samples, self.distributions[state])

    @classmethod
    def from_node_labels(cls, node_of, node_labels, model=None, **kw) -> "CausalStateSet":
        node_of = np.asarray(node_of, dtype=np.intp)
        node_labels = np.asarray(node_labels)
        obs = first_appearance_labels(node_labels[node_of])
        node_state = np.full(node_labels.shape[0], -1, dtype=np.intp)
        node_state[node_of] = obs
        # nodes never referenced by an observation keep a label of their own
        missing = np.flatnonzero(node_state < 0)
        node_state[missing] = obs.max() + 1 + np.arange(missing.size)
        return cls(StatePartition(PartitionKind.CAUSAL, obs), node_of, node_state,
                   model=model, **kw)

    @classmethod
    def from_labels(cls, model: DensityModel, labels) -> "CausalStateSet":
        """Wrap per-observation labels; observations sharing x must share a label."""
        labels = np.asarray(labels)
        node_labels = np.empty(model.n_nodes, dtype=labels.dtype)
        node_labels[model.node_of] = labels
        if not np.array_equal(node_labels[model.node_of], labels):
            raise DataError("identical configurations must carry the same label")
        return cls.from_node_labels(model.node_of, node_labels, model=model)


def _dense(P, rows) -> np.ndarray:
    if sparse.issparse(P):
        return P[rows].toarray()
    return P[rows]


def _exact_groups(P) -> np.ndarray:
    keys = {}
    labels = np.empty(P.shape[0], dtype=np.intp)
    if sparse.issparse(P):
        P = P.tocsr()
        for k in range(P.shape[0]):
            lo, hi = P.indptr[k], P.indptr[k + 1]
            key = (P.indices[lo:hi].tobytes(), P.data[lo:hi].tobytes())
            labels[k] = keys.setdefault(key, len(keys))
    else:
        for k, row in enumerate(np.ascontiguousarray(P)):
            labels[k] = keys.setdefault(row.tobytes(), len(keys))
    return labels


def _match_components(P, spec: MatchSpec, counts=None, block: int = 4096) -> np.ndarray:
    """Component label per row of ``P`` under the match predicate."""
    m = P.shape[0]
    labels = np.arange(m)
    if spec.metric is Metric.BHATTACHARYYA:
        root = np.sqrt(_dense(P, np.arange(m)))

        def test(i, cand):
            bc = root[cand] @ root[i]
            with np.errstate(divide="ignore"):
                d = np.maximum(-np.log(bc), 0.0)
            d[np.all(root[cand] == root[i], axis=1)] = 0.0
            return d <= spec.threshold
    elif spec.metric is Metric.CHI_SQUARE:
        C = counts

        def test(i, cand):
            return chi_square_rows(_dense(C, cand), _dense(C, [i])[0])[2] >= spec.threshold
    else:
        def test(i, cand):
            return distance_rows(_dense(P, cand), _dense(P, [i])[0], spec.metric) <= spec.threshold

    for i in range(m - 1):
        # early skip: pairs already joined need no test
        cand = np.flatnonzero(labels[i + 1:] != labels[i]) + i + 1
        hits = []
        for lo in range(0, cand.size, block):
            c = cand[lo:lo + block]
            hits.append(c[test(i, c)])
        hit = np.concatenate(hits) if hits else cand[:0]
        if hit.size:
            merged = np.isin(labels, labels[hit])
            labels[merged] = labels[i]
    return labels


def cluster_causal(O: ObservationSet, model: DensityModel, spec: MatchSpec) -> CausalStateSet:
    """Group observations into causal states by connected components of matching conditionals.

    State ids follow first appearance in observation order. The returned set
    already carries averaged representative distributions.
    """
    if model.observations is not O and len(model.observations) != len(O):
        raise DataError("density model was built over different observations")
    P = model.node_distributions()
    if spec.metric is Metric.EXACT:
        node_labels = _exact_groups(P)
    else:
        counts = None
        if spec.needs_counts:
            if not model.has_counts:
                raise ParameterError("the chi-square test needs a counting estimator")
            counts = model.count_matrix()
        node_labels = _match_components(P, spec, counts)
    states = CausalStateSet.from_node_labels(model.node_of, node_labels, model=model)
    log.debug("clustered %d configurations into %d causal states",
              model.n_nodes, states.n_states)
    return average_distributions(states, model)


def average_distributions(states: CausalStateSet,
                          model: Optional[DensityModel] = None) -> CausalStateSet:
    """Representative p(Z|state): mean of member observations' conditionals, renormalized."""
    model = model or states.model
    if model is None:
        raise DataError("averaging needs the density model")
    P = model.node_distributions()
    k = states.n_states
    weights = sparse.coo_matrix(
        (model.node_counts.astype(float), (states.node_state, np.arange(model.n_nodes))),
        shape=(k, model.n_nodes)).tocsr()
    summed = weights @ P
    summed = summed.toarray() if sparse.issparse(summed) else np.asarray(summed)
    mean = summed / states.partition.counts[:, None]
    mean /= mean.sum(axis=1, keepdims=True)
    mean.setflags(write=False)
    return replace(states, model=model, distributions=mean)


def _transition_table(O: ObservationSet, node_of: np.ndarray):
    if O.symbols is None or not O.sequential:
        raise DataError("determinism enforcement needs sequential data with symbols")
    trip = np.stack([node_of[:-1], O.symbols, node_of[1:]], axis=1)
    if trip.shape[0] == 0:
        return trip, np.zeros(0, dtype=np.intp)
    uniq, counts = np.unique(trip, axis=0, return_counts=True)
    return uniq, counts


def _group_bounds(keys: np.ndarray):
    """Start/stop offsets of runs of equal rows in a sorted 2-D key array."""
    if keys.shape[0] == 0:
        return []
    change = np.flatnonzero(np.any(keys[1:] != keys[:-1], axis=1)) + 1
    starts = np.concatenate([[0], change])
    stops = np.concatenate([change, [keys.shape[0]]])
    return list(zip(starts, stops))


def _dominant(targets: np.ndarray, counts: np.ndarray, theta: float):
    """``(target_states, totals, dominant_or_None)`` for one transition group."""
    uniq, inv = np.unique(targets, return_inverse=True)
    totals = np.bincount(inv.ravel(), weights=counts)
    best = int(np.argmax(totals))
    if uniq.size == 1 or totals[best] / totals.sum() > theta:
        return uniq, totals, int(uniq[best])
    return uniq, totals, None


def _merge_pass(trip, counts, node_state, theta) -> bool:
    """Put successors of the same (configuration, symbol) into one state."""
    order = np.lexsort((trip[:, 2], trip[:, 1], trip[:, 0]))
    trip, counts = trip[order], counts[order]
    uf = None
    for lo, hi in _group_bounds(trip[:, :2]):
        if hi - lo < 2:
            continue
        uniq, _, dom = _dominant(node_state[trip[lo:hi, 2]], counts[lo:hi], theta)
        if dom is not None or uniq.size < 2:
            continue
        if uf is None:
            uf = UnionFind(int(node_state.max()) + 1)
        for t in uniq[1:]:
            uf.union(int(uniq[0]), int(t))
    if uf is None:
        return False
    roots = uf.labels()
    new = roots[node_state]
    changed = not np.array_equal(first_appearance_labels(new),
                                 first_appearance_labels(node_state))
    node_state[:] = new
    return changed


def _split_pass(trip, counts, node_state, node_mass, theta) -> bool:
    """Split every state whose (state, symbol) successors disagree with no dominant target."""
    src_state = node_state[trip[:, 0]]
    keys = np.stack([src_state, trip[:, 1]], axis=1)
    order = np.lexsort((trip[:, 0], keys[:, 1], keys[:, 0]))
    keys, trip, counts = keys[order], trip[order], counts[order]
    done = set()
    next_id = int(node_state.max()) + 1
    new_state = node_state.copy()
    changed = False
    for lo, hi in _group_bounds(keys):
        sigma = int(keys[lo, 0])
        if sigma in done:
            continue
        tgt = node_state[trip[lo:hi, 2]]
        uniq, _, dom = _dominant(tgt, counts[lo:hi], theta)
        if dom is not None:
            continue
        # each member node follows its own majority successor state
        part_of = {}
        for nlo, nhi in _group_bounds(trip[lo:hi, :1]):
            node = int(trip[lo + nlo, 0])
            u, tot, _ = _dominant(tgt[nlo:nhi], counts[lo + nlo:lo + nhi], 1.0)
            part_of[node] = int(u[int(np.argmax(tot))])
        members = np.flatnonzero(node_state == sigma)
        part_mass = {}
        for node in members:
            p = part_of.get(int(node))
            if p is not None:
                part_mass[p] = part_mass.get(p, 0.0) + node_mass[node]
        largest = max(sorted(part_mass), key=lambda p: part_mass[p])
        ids = {largest: sigma}
        for p in sorted(part_mass):
            if p != largest:
                ids[p] = next_id
                next_id += 1
        for node in members:
            new_state[node] = ids[part_of.get(int(node), largest)]
        done.add(sigma)
        changed = True
    node_state[:] = new_state
    return changed


def enforce_determinism(states: CausalStateSet, O: ObservationSet, theta: float = 0.95,
                        max_iter: int = 64) -> CausalStateSet:
    """Make symbol-labelled transitions between causal states deterministic.

    Successors reached from the same configuration with the same symbol are
    first placed in one state. Then split and merge steps alternate until a
    fixpoint: a state whose members disagree on the successor state for some
    symbol is split by successor, unless one successor state receives more than
    ``theta`` of those transitions, in which case the others are treated as
    spurious and ignored. The same ``theta`` rule gates merges. Reaching
    ``max_iter`` or revisiting a partition stops the loop with
    ``converged=False``; this is reported, not raised.

    Observations whose successor lies outside the data (the last one) stay in
    their state and do not enter the transition statistics.
    """
    if not 0.5 < theta <= 1.0:
        raise ParameterError("theta must lie in (0.5, 1]")
    if max_iter < 1:
        raise ParameterError("max_iter must be at least 1")
    trip, counts = _transition_table(O, states.node_of)
    node_state = states.node_state.copy()
    node_mass = np.bincount(states.node_of, minlength=node_state.size).astype(float)

    _merge_pass(trip, counts, node_state, theta)
    seen = {first_appearance_labels(node_state).tobytes()}
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        changed = _split_pass(trip, counts, node_state, node_mass, theta)
        changed |= _merge_pass(trip, counts, node_state, theta)
        if not changed:
            converged = True
            break
        key = first_appearance_labels(node_state).tobytes()
        if key in seen:
            log.warning("determinism constraints are incompatible; stopping at a cycle")
            break
        seen.add(key)
    if not converged:
        log.warning("determinism enforcement did not converge after %d iterations", it)
    out = CausalStateSet.from_node_labels(states.node_of, node_state, model=states.model,
                                          converged=converged, iterations=it)
    if states.model is not None:
        out = average_distributions(out)
    return out


def transition_targets(states: CausalStateSet, O: ObservationSet) -> dict:
    """``{(state, symbol): {target_state: count}}`` over observed transitions."""
    trip, counts = _transition_table(O, states.node_of)
    out = {}
    ns = states.node_state
    for (src, a, dst), c in zip(trip, counts):
        d = out.setdefault((int(ns[src]), int(a)), {})
        d[int(ns[dst])] = d.get(int(ns[dst]), 0) + int(c)
    return out
