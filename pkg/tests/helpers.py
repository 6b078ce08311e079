"""Independent oracles and fixtures shared by several test modules."""
import math

import numpy as np

from decstates.density import build_discrete
from decstates.pipelines.even import gen_even_process, series_to_observations
from decstates.states import CausalStateSet


def components(n, linked):
    """Connected components by breadth-first search over ``linked(i, j)``."""
    label = [-1] * n
    comp = 0
    for s in range(n):
        if label[s] >= 0:
            continue
        label[s] = comp
        queue = [s]
        while queue:
            i = queue.pop()
            for j in range(n):
                if label[j] < 0 and linked(i, j):
                    label[j] = comp
                    queue.append(j)
        comp += 1
    return label


def as_blocks(labels):
    out = {}
    for i, l in enumerate(labels):
        out.setdefault(l, set()).add(i)
    return {frozenset(b) for b in out.values()}


def reachable(n, edges):
    """Boolean reachability matrix (reflexive) by repeated relaxation."""
    R = np.eye(n, dtype=bool)
    for s, t in edges:
        R[s, t] = True
    changed = True
    while changed:
        new = R | ((R.astype(int) @ R.astype(int)) > 0)
        changed = not np.array_equal(new, R)
        R = new
    return R


def brute_recurrent(n, edges):
    """States from which every reachable state can reach back."""
    R = reachable(n, edges)
    return {i for i in range(n) if all(R[j, i] for j in range(n) if R[i, j])}


def even_window_class(window):
    """0 (A) after an even run of trailing 1s, 1 (B) after an odd one, 2 when all ones."""
    w = list(window)
    if 0 not in w:
        return 2
    trailing = len(w) - 1 - max(i for i, v in enumerate(w) if v == 0)
    return trailing % 2


def symbol_series(text, L):
    codes = {c: k for k, c in enumerate(sorted(set(text)))}
    return series_to_observations(np.array([codes[c] for c in text]), L), codes


def dense_kde_oracle(X, Z, S, x, h, cutoff=0.0):
    """All-pairs kernel sum written directly from the formula."""
    w = np.zeros(len(S))
    for xi, zi in zip(X, Z):
        for k, s in enumerate(S):
            d2 = sum((a - b) ** 2 for a, b in zip(xi, x)) + sum((a - b) ** 2 for a, b in zip(zi, s))
            v = math.exp(-d2 / h)
            if v >= cutoff:
                w[k] += v
    return w / w.sum()


def deterministic_fixture():
    # A -0-> A, A -1-> B, B -1-> A with windows labeled by their true class
    series, _ = gen_even_process(20_000, seed=7)
    O = series_to_observations(series, 10)
    m = build_discrete(O, [[0], [1]])
    labels = [even_window_class(x.astype(int)) for x in O.x]
    return O, m, CausalStateSet.from_labels(m, labels)


def aaba_abba_fixture():
    """aaba and abba share a state; their c-successors abac and bbac do not."""
    O, codes = symbol_series("aabacabbac" * 20, 4)
    m = build_discrete(O)
    key = lambda w: tuple(float(codes[c]) for c in w)
    shared = {key("aaba"), key("abba")}
    labels = [0 if tuple(x) in shared else 1 + m.node_index(x) for x in O.x]
    return (O, m, CausalStateSet.from_labels(m, labels),
            m.node_index(key("aaba")), m.node_index(key("abba")))


def mislabel_rare_node(O, m):
    """Truth labels with one rare B-type configuration moved into A.

    Its 1-transitions (and those of its predecessors) now give (A, 1) a
    second, rare target.
    """
    cls = np.array([even_window_class(c.astype(int)) for c in m.configs])
    a_mass = m.node_counts[cls == 0].sum()
    cand = np.flatnonzero(cls == 1)
    # the B-type node whose visits are closest to 0.1% of A's
    pick = cand[np.argmin(np.abs(m.node_counts[cand] / a_mass - 1e-3))]
    cls[pick] = 0
    return CausalStateSet.from_node_labels(m.node_of, cls, model=m)
