"""Expected utility, optimal prediction sets, and the decision-layer partitions.

Expected utilities are computed once per causal state from its averaged
distribution; every observation in the state inherits them.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

from .core import (DimensionMismatch, Distribution, ParameterError, PartitionKind,
                   StatePartition, UtilitySpec, as_point, as_points, first_appearance_labels)
from .states import CausalStateSet, UnionFind

ARGMAX_RTOL = 1e-9
ISO_UTILITY_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class DecisionSummary:
    """Optimal predictions ``Y`` (rows are points in Z) and the utility ``u_star`` they attain."""

    state_id: int
    Y: np.ndarray
    u_star: float
    y_index: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.Y.shape[0] == 0:
            raise ParameterError("an optimal prediction set cannot be empty")


def default_tol(u_star: float) -> float:
    return ARGMAX_RTOL * max(1.0, abs(u_star))


def expected_utility(p: Distribution, U: UtilitySpec, y) -> float:
    """Sum over samples s of p(s) U(y, s), divided by the total weight."""
    y = as_point(y, p.samples.shape[1])
    return float(U.matrix(y[None, :], p.samples)[0] @ p.weights / p.weights.sum())


def optimal_predictions(p: Distribution, U: UtilitySpec, candidates=None,
                        tol: Optional[float] = None, state_id: int = -1) -> DecisionSummary:
    """Exhaustive argmax of the expected utility over ``candidates`` (default: the samples).

    Every candidate within ``tol`` of the best value is kept, in candidate order.
    """
    C = p.samples if candidates is None else as_points(candidates, p.samples.shape[1])
    if C.shape[0] == 0:
        raise ParameterError("no candidate predictions to search")
    eu = U.matrix(C, p.samples) @ p.weights / p.weights.sum()
    u_star = float(eu.max())
    t = default_tol(u_star) if tol is None else float(tol)
    keep = np.flatnonzero(eu >= u_star - t)
    return DecisionSummary(state_id, C[keep], u_star, keep)


def summarize_states(states: CausalStateSet, U: UtilitySpec, candidates=None,
                     tol: Optional[float] = None, chunk: int = 2048) -> list:
    """One :class:`DecisionSummary` per causal state, in state-id order."""
    P = states.distributions
    S = states.samples
    if P is None:
        raise ParameterError("causal states need averaged distributions")
    C = S if candidates is None else as_points(candidates, S.shape[1])
    if C.shape[0] == 0:
        raise ParameterError("no candidate predictions to search")
    P = P / P.sum(axis=1, keepdims=True)
    blocks = [(lo, min(lo + chunk, C.shape[0])) for lo in range(0, C.shape[0], chunk)]

    def eu_block(lo, hi):
        return P @ U.matrix(C[lo:hi], S).T

    if len(blocks) == 1:
        E = eu_block(*blocks[0])
        u_star = E.max(axis=1)
        get = lambda lo, hi: E
    else:
        u_star = np.full(P.shape[0], -np.inf)
        for lo, hi in blocks:
            u_star = np.maximum(u_star, eu_block(lo, hi).max(axis=1))
        get = eu_block
    tols = (np.array([default_tol(u) for u in u_star]) if tol is None
            else np.full(u_star.shape, float(tol)))
    picked = [[] for _ in range(P.shape[0])]
    for lo, hi in blocks:
        E = get(lo, hi)
        rows, cols = np.nonzero(E >= (u_star - tols)[:, None])
        for r, c in zip(rows, cols):
            picked[r].append(lo + c)
    return [DecisionSummary(k, C[np.array(idx)], float(u_star[k]), np.array(idx))
            for k, idx in enumerate(picked)]


def random_restart_argmax(p: Distribution, U: UtilitySpec, lower, upper, restarts: int = 20,
                          seed: int = 0, tol: Optional[float] = None,
                          merge_tol: float = 1e-3) -> DecisionSummary:
    """Multi-start local search for the argmax set over a continuous box in Z.

    Local maxima within ``tol`` of the best are kept; maxima closer than
    ``merge_tol`` to an earlier one are dropped as duplicates. Best suited to
    smooth utilities; exhaustive search over a candidate grid is the default
    everywhere else.
    """
    lower = as_point(lower, p.samples.shape[1])
    upper = as_point(upper, p.samples.shape[1])
    rng = np.random.default_rng(seed)
    w = p.weights / p.weights.sum()

    def neg(y):
        return -float(U.matrix(y[None, :], p.samples)[0] @ w)

    found = []
    for _ in range(restarts):
        y0 = rng.uniform(lower, upper)
        res = minimize(neg, y0, method="L-BFGS-B", bounds=list(zip(lower, upper)))
        found.append((res.x, -res.fun))
    u_star = max(u for _, u in found)
    t = default_tol(u_star) if tol is None else tol
    Y = []
    for y, u in found:
        if u >= u_star - t and all(np.linalg.norm(y - q) > merge_tol for q in Y):
            Y.append(y)
    return DecisionSummary(-1, np.array(Y), u_star)


def _first_members(p: StatePartition) -> np.ndarray:
    """Index of the first observation in each state."""
    return np.unique(p.assignment, return_index=True)[1]


def _inherit(group_of_state: np.ndarray, causal: StatePartition) -> np.ndarray:
    return group_of_state[causal.assignment]


def _sets_match(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    d = cdist(a, b)
    return bool(np.all(d.min(axis=1) <= tol) and np.all(d.min(axis=0) <= tol))


def cluster_iso_prediction(summaries: Sequence[DecisionSummary], causal: StatePartition,
                           y_match_tol: float = 0.0) -> StatePartition:
    """Group causal states whose optimal prediction sets coincide.

    Two sets match when every element of each lies within ``y_match_tol`` of
    some element of the other; groups are connected components of that relation.
    """
    k = len(summaries)
    if k != causal.n_states:
        raise DimensionMismatch("need one summary per causal state")
    summaries = sorted(summaries, key=lambda s: s.state_id)
    if y_match_tol == 0:
        keys = {}
        group = np.array([keys.setdefault((s.Y.shape, np.ascontiguousarray(s.Y + 0.0).tobytes()),
                                          len(keys)) for s in summaries])
    else:
        uf = UnionFind(k)
        for i in range(k):
            for j in range(i + 1, k):
                if uf.find(i) != uf.find(j) and _sets_match(summaries[i].Y, summaries[j].Y,
                                                            y_match_tol):
                    uf.union(i, j)
        group = uf.labels()
    labels = _inherit(group, causal)
    dense = first_appearance_labels(labels)
    first = _first_members(causal)
    preds = [None] * (dense.max() + 1)
    for st, s in enumerate(summaries):
        g = dense[first[st]]
        if preds[g] is None:
            preds[g] = s.Y
    return StatePartition(PartitionKind.ISO_PREDICTION, dense, predictions=tuple(preds))


def default_delta_u(values) -> float:
    values = np.asarray(values, dtype=float)
    span = float(values.max() - values.min()) if values.size else 0.0
    return ISO_UTILITY_RTOL * span


def cluster_iso_utility(summaries: Sequence[DecisionSummary], causal: StatePartition,
                        delta_u: Optional[float] = None) -> StatePartition:
    """Group causal states whose maximal expected utilities chain within ``delta_u``."""
    if len(summaries) != causal.n_states:
        raise DimensionMismatch("need one summary per causal state")
    summaries = sorted(summaries, key=lambda s: s.state_id)
    u = np.array([s.u_star for s in summaries])
    delta = default_delta_u(u) if delta_u is None else float(delta_u)
    if delta < 0:
        raise ParameterError("delta_u must be non-negative")
    # single link on a line: sort and cut wherever the gap exceeds delta
    order = np.argsort(u, kind="stable")
    gaps = np.diff(u[order]) > delta
    comp = np.concatenate([[0], np.cumsum(gaps)])
    group = np.empty_like(comp)
    group[order] = comp
    labels = first_appearance_labels(_inherit(group, causal))
    util = np.empty(labels.max() + 1)
    util[labels] = u[causal.assignment]
    return StatePartition(PartitionKind.ISO_UTILITY, labels, utilities=util)


def intersect_partitions(psi: StatePartition, upsilon: StatePartition) -> StatePartition:
    """Decisional states: observations sharing both an iso-prediction and an iso-utility state."""
    if len(psi) != len(upsilon):
        raise DimensionMismatch("partitions cover different index sets")
    pair = psi.assignment.astype(np.int64) * upsilon.n_states + upsilon.assignment
    labels = first_appearance_labels(pair)
    k = labels.max() + 1
    preds = util = None
    if psi.predictions is not None:
        first = np.unique(labels, return_index=True)[1]
        preds = tuple(psi.predictions[psi.assignment[i]] for i in first)
    if upsilon.utilities is not None:
        util = np.empty(k)
        util[labels] = upsilon.utilities[upsilon.assignment]
    return StatePartition(PartitionKind.DECISIONAL, labels, predictions=preds, utilities=util)
