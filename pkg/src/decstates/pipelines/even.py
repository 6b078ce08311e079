"""Symbolic series: the Even process generator and sliding-window reconstruction."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..compare import MatchSpec, Metric
from ..core import DataError, ObservationSet, ParameterError, UtilityKind, make_utility
from ..density import build_discrete
from ..graph import TransitionGraph, export_dot, recurrent_states
from .analysis import Reconstruction, reconstruct

STATE_A, STATE_B = 0, 1


def gen_even_process(n: int, seed: int = 42, p_zero: float = 0.5):
    """Sample ``n`` symbols of the Even process.

    From state A emit 0 and stay, or emit 1 and move to B, with probability
    ``p_zero`` and ``1 - p_zero``; B always emits 1 and returns to A. The
    start state is drawn from the stationary distribution.

    Returns
    -------
    series : ndarray of int8
    states : ndarray of int8
        State (``STATE_A`` or ``STATE_B``) the process was in before each symbol.
    """
    if n < 1:
        raise ParameterError("series length must be at least 1")
    rng = np.random.default_rng(seed)
    # the walk is a sequence of tokens "0" (from A) and "11" (A then B)
    pair = rng.random(n + 1) >= p_zero
    lengths = 1 + pair.astype(np.int64)
    start = np.concatenate([[0], np.cumsum(lengths)[:-1]])
    series = np.zeros(int(lengths.sum()), dtype=np.int8)
    states = np.zeros_like(series)
    s = start[pair]
    series[s] = 1
    series[s + 1] = 1
    states[s + 1] = STATE_B
    series, states = series[:n], states[:n]
    if rng.random() < (1 - p_zero) / (2 - p_zero):
        # stationary start in B: one 1 back to A, then the walk from A
        series = np.concatenate([[1], series[:-1]]).astype(np.int8)
        states = np.concatenate([[STATE_B], states[:-1]]).astype(np.int8)
    return series, states


def series_to_observations(series, L: int) -> ObservationSet:
    """Windows of ``L`` past symbols paired with the following symbol.

    The symbol on the transition from window ``i`` to window ``i + 1`` is
    ``z_i``, the symbol that enters the window.
    """
    series = np.asarray(series)
    if L < 1:
        raise ParameterError("window length must be at least 1")
    if series.ndim != 1 or series.size <= L:
        raise DataError(f"series of length {series.size} is too short for windows of {L}")
    x = sliding_window_view(series, L)[: series.size - L]
    z = series[L:]
    return ObservationSet(x.astype(float), z.astype(float)[:, None],
                          symbols=z[:-1].astype(np.int64), sequential=True)


@dataclass(frozen=True, eq=False)
class SeriesResult:
    L: int
    alphabet: tuple
    reconstruction: Reconstruction
    graph: TransitionGraph
    recurrent: frozenset

    @property
    def n_recurrent(self) -> int:
        return len(self.recurrent)


def reconstruct_series(series, L: int, alpha: float = 0.05, theta: float = 0.95,
                       alphabet: Optional[Iterable] = None, max_iter: int = 64,
                       match: Optional[MatchSpec] = None) -> SeriesResult:
    """Causal and decisional states of a symbol series, with its epsilon-machine.

    Conditionals come from the counting estimator, states are matched by the
    chi-square test at level ``alpha``, transitions are made deterministic with
    threshold ``theta`` and the decision layer uses the delta utility (guess
    the next symbol). ``match`` replaces the chi-square predicate.
    """
    series = np.asarray(series)
    # series holds codes 0..k-1 into ``alphabet``
    k = int(series.max()) + 1 if alphabet is None else len(tuple(alphabet))
    alphabet = tuple(range(k)) if alphabet is None else tuple(alphabet)
    codes = np.arange(k)
    O = series_to_observations(series, L)
    model = build_discrete(O, S=np.asarray(codes, dtype=float)[:, None])
    match = MatchSpec(Metric.CHI_SQUARE, alpha) if match is None else match
    r = reconstruct(O, model, match,
                    make_utility(UtilityKind.DELTA), theta=theta, max_iter=max_iter)
    g = r.graph("C", theta)
    return SeriesResult(L, alphabet, r, g, frozenset(recurrent_states(g)))


def matches_even_process(g: TransitionGraph, recurrent=None) -> bool:
    """Whether the recurrent part of ``g`` is the Even process automaton.

    Exactly two recurrent states A and B with A -0-> A, A -1-> B, B -1-> A and
    no other recurrent transitions.
    """
    rec = recurrent_states(g) if recurrent is None else set(recurrent)
    if len(rec) != 2:
        return False
    moves = {}
    for (s, t), e in g.edges.items():
        if s in rec:
            for a in e.labels:
                moves.setdefault((s, a), set()).add(t)
    for a_state in rec:
        (b_state,) = rec - {a_state}
        want = {(a_state, 0): {a_state}, (a_state, 1): {b_state}, (b_state, 1): {a_state}}
        if moves == want:
            return True
    return False


def report(res: SeriesResult) -> str:
    """Stable ``key: value`` text describing a series reconstruction."""
    r = res.reconstruction
    h = r.complexities
    lines = [
        f"window: {res.L}",
        f"observations: {len(r.observations)}",
        f"alphabet: {' '.join(str(a) for a in res.alphabet)}",
        f"causal_states: {r.causal.n_states}",
        f"recurrent_states: {res.n_recurrent}",
        f"transient_states: {res.graph.n_nodes - res.n_recurrent}",
        f"recurrent_ids: {' '.join(str(s) for s in sorted(res.recurrent))}",
        f"determinism_converged: {str(r.causal.converged).lower()}",
        f"determinism_iterations: {r.causal.iterations}",
        f"matches_even_process: {str(matches_even_process(res.graph, res.recurrent)).lower()}",
        f"C_estimated_bits: {h['C']:.6f}",
        f"D_estimated_bits: {h['D']:.6f}",
        f"P_estimated_bits: {h['P']:.6f}",
        f"V_estimated_bits: {h['V']:.6f}",
        f"decisional_states: {r.decisional.n_states}",
    ]
    for s in range(res.graph.n_nodes):
        lines.append(f"state: {s} mass={res.graph.masses[s]:.6f} "
                     f"recurrent={str(s in res.recurrent).lower()}")
    for (s, t), e in res.graph.edges.items():
        for a, p in sorted(e.labels.items()):
            lines.append(f"transition: {s} {res.alphabet[a]} {t} {p:.6f}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict:
    """Inverse of :func:`report` for the scalar keys; repeated keys become lists."""
    out = {}
    for line in text.splitlines():
        key, _, value = line.partition(": ")
        if key in ("state", "transition"):
            out.setdefault(key, []).append(value)
        else:
            out[key] = value
    return out


def window_sweep(L_values, n: int, trials: int, seed: int = 42, alpha: float = 0.05,
                 theta: float = 0.95, match: Optional[MatchSpec] = None) -> list:
    """Recurrent-state counts over independent Even process samples.

    Trial ``t`` uses seed ``seed + t`` for every window length. Returns one
    dict per (L, trial).
    """
    rows = []
    for t in range(trials):
        series, _ = gen_even_process(n, seed + t)
        for L in L_values:
            res = reconstruct_series(series, L, alpha, theta, match=match)
            rows.append({"L": L, "trial": t, "recurrent": res.n_recurrent,
                         "matches": matches_even_process(res.graph, res.recurrent)})
    return rows


def sweep_csv(rows: list) -> str:
    """Per-L summary: mean recurrent count and the share of trials that match."""
    by_L = {}
    for row in rows:
        by_L.setdefault(row["L"], []).append(row)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["L", "mean_recurrent_states", "fraction_two_recurrent", "fraction_even_match",
                "trials"])
    for L in sorted(by_L):
        rs = by_L[L]
        rec = np.array([r["recurrent"] for r in rs], dtype=float)
        w.writerow([L, f"{rec.mean():.4f}", f"{np.mean(rec == 2):.4f}",
                    f"{np.mean([r['matches'] for r in rs]):.4f}", len(rs)])
    return buf.getvalue()


__all__ = ["gen_even_process", "series_to_observations", "reconstruct_series", "SeriesResult",
           "matches_even_process", "report", "parse_report", "window_sweep", "sweep_csv",
           "export_dot", "STATE_A", "STATE_B"]
