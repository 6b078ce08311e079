"""Transition graphs over state partitions, recurrent states, and complexities."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .core import DataError, ObservationSet, PartitionKind, StatePartition


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    probability: float
    # symbol -> p(symbol, target | source); empty for non-causal graphs
    labels: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class TransitionGraph:
    kind: PartitionKind
    masses: np.ndarray
    edges: dict  # (source, target) -> Edge

    @property
    def n_nodes(self) -> int:
        return self.masses.size

    def out_edges(self, state: int) -> list:
        return [e for (s, _), e in sorted(self.edges.items()) if s == state]

    def out_probability(self, state: int) -> float:
        return sum(e.probability for e in self.out_edges(state))

    def emission(self, state: int) -> dict:
        """``{symbol: p(symbol | state)}`` (causal graphs with symbols only)."""
        out = {}
        for e in self.out_edges(state):
            for a, p in e.labels.items():
                out[a] = out.get(a, 0.0) + p
        return out

    def successors(self, state: int, symbol: int) -> list:
        return [e.target for e in self.out_edges(state) if symbol in e.labels]

    def adjacency(self) -> sparse.csr_matrix:
        if not self.edges:
            return sparse.csr_matrix((self.n_nodes, self.n_nodes))
        src, dst = zip(*self.edges)
        return sparse.csr_matrix((np.ones(len(src)), (src, dst)),
                                 shape=(self.n_nodes, self.n_nodes))


def build_transition_graph(partition: StatePartition, O: ObservationSet,
                           theta: Optional[float] = None) -> TransitionGraph:
    """Count state-to-state transitions along the observation sequence.

    Edge probability is the fraction of transitions out of the source landing
    on the target. Causal partitions over symbol-labelled data also record
    ``p(symbol, target | source)``. With ``theta`` set, a (state, symbol) pair
    whose dominant target takes more than ``theta`` of its transitions is
    collapsed onto that target, dropping the spurious remainder.
    """
    if not O.sequential:
        raise DataError("transition graphs need time-ordered observations")
    if len(partition) != len(O):
        raise DataError("partition and observations differ in length")
    a = partition.assignment
    src, dst = a[:-1], a[1:]
    labelled = partition.kind is PartitionKind.CAUSAL and O.symbols is not None
    edges = {}
    if src.size:
        totals = np.bincount(src, minlength=partition.n_states).astype(float)
        if labelled:
            trip, counts = np.unique(np.stack([src, O.symbols, dst], axis=1), axis=0,
                                     return_counts=True)
            if theta is not None:
                trip = _collapse(trip, counts, theta)
                trip, inv = np.unique(trip, axis=0, return_inverse=True)
                counts = np.bincount(inv.ravel(), weights=counts)
            acc = {}
            for (s, sym, t), c in zip(trip.tolist(), counts.tolist()):
                acc.setdefault((s, t), {})[sym] = float(c / totals[s])
            for (s, t), labels in acc.items():
                edges[(s, t)] = Edge(s, t, float(sum(labels.values())), labels)
        else:
            pairs, counts = np.unique(np.stack([src, dst], axis=1), axis=0, return_counts=True)
            for (s, t), c in zip(pairs.tolist(), counts.tolist()):
                edges[(s, t)] = Edge(s, t, float(c / totals[s]))
    return TransitionGraph(partition.kind, partition.masses, dict(sorted(edges.items())))


def _collapse(trip: np.ndarray, counts: np.ndarray, theta: float) -> np.ndarray:
    trip = trip.copy()
    keys = trip[:, :2]
    change = np.flatnonzero(np.any(keys[1:] != keys[:-1], axis=1)) + 1
    for lo, hi in zip(np.r_[0, change], np.r_[change, len(trip)]):
        c = counts[lo:hi]
        best = int(np.argmax(c))
        if c[best] / c.sum() > theta:
            trip[lo:hi, 2] = trip[lo + best, 2]
    return trip


def strongly_connected(g: TransitionGraph) -> np.ndarray:
    """SCC label per node."""
    return connected_components(g.adjacency(), directed=True, connection="strong")[1]


def recurrent_states(g: TransitionGraph) -> set:
    """Nodes inside closed strongly connected components (no edge leaves the component)."""
    comp = strongly_connected(g)
    leaks = {comp[s] for (s, t) in g.edges if comp[s] != comp[t]}
    return {n for n in range(g.n_nodes) if comp[n] not in leaks}


def global_complexity(partition: StatePartition) -> float:
    """Entropy in bits of the empirical state distribution."""
    p = partition.masses
    return float(-(p * np.log2(p)).sum())


def local_complexities(partition: StatePartition) -> np.ndarray:
    """``-log2 p(state(i))`` for every observation ``i``."""
    return -np.log2(partition.masses)[partition.assignment]


def local_complexity(partition: StatePartition, i: int) -> float:
    if not 0 <= i < len(partition):
        raise IndexError(f"observation index {i} out of range")
    return float(-np.log2(partition.masses[partition.assignment[i]]))


def export_dot(g: TransitionGraph, name: Optional[str] = None) -> str:
    """Graphviz text for ``g``; recurrent nodes are double circles."""
    rec = recurrent_states(g)
    name = name or g.kind.value.replace("-", "_")
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    for n in range(g.n_nodes):
        shape = "doublecircle" if n in rec else "circle"
        lines.append(f'  {n} [label="{n} (p={g.masses[n]:.4f})", shape={shape}];')
    for (s, t), e in g.edges.items():
        if e.labels:
            text = "\\n".join(f"{a}:{p:.4f}" for a, p in sorted(e.labels.items()))
        else:
            text = f"{e.probability:.4f}"
        lines.append(f'  {s} -> {t} [label="{text}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
