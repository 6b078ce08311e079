"""The full reconstruction chain: causal states, decision layer, complexities."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..compare import MatchSpec
from ..core import NumericError, ObservationSet, StatePartition, UtilitySpec
from ..decision import (cluster_iso_prediction, cluster_iso_utility, intersect_partitions,
                        summarize_states)
from ..density import DensityModel
from ..graph import TransitionGraph, build_transition_graph, global_complexity, local_complexities
from ..states import CausalStateSet, cluster_causal, enforce_determinism

log = logging.getLogger(__name__)

# C: causal, D: decisional, P: iso-prediction, V: iso-utility
MEASURES = ("C", "D", "P", "V")
CHAIN_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class Reconstruction:
    observations: ObservationSet
    causal: CausalStateSet
    summaries: list
    iso_prediction: StatePartition
    iso_utility: StatePartition
    decisional: StatePartition

    def partition(self, measure: str) -> StatePartition:
        return {"C": self.causal.partition, "D": self.decisional,
                "P": self.iso_prediction, "V": self.iso_utility}[measure]

    @property
    def complexities(self) -> dict:
        """Global complexity (bits) of each partition, keyed by C, D, P, V."""
        return {m: global_complexity(self.partition(m)) for m in MEASURES}

    def local(self, measure: str) -> np.ndarray:
        return local_complexities(self.partition(measure))

    def graph(self, measure: str = "C", theta: Optional[float] = None) -> TransitionGraph:
        return build_transition_graph(self.partition(measure), self.observations, theta)


def check_invariants(r: Reconstruction, atol: float = CHAIN_ATOL):
    """Refinement chain, entropy ordering and the local/global identity.

    Raises :class:`NumericError` listing every violated property.
    """
    C = r.causal.partition
    bad = []
    if not C.refines(r.decisional):
        bad.append("causal does not refine decisional")
    for name, coarse in (("iso-prediction", r.iso_prediction), ("iso-utility", r.iso_utility)):
        if not r.decisional.refines(coarse):
            bad.append(f"decisional does not refine {name}")
    h = r.complexities
    for m in "DPV":
        if h[m] > h["C"] + atol:
            bad.append(f"{m} = {h[m]!r} exceeds C = {h['C']!r}")
    for m in MEASURES:
        gap = abs(float(np.mean(r.local(m))) - h[m])
        if gap > atol:
            bad.append(f"mean local {m} differs from global by {gap:.3g}")
    if bad:
        raise NumericError("; ".join(bad))


def reconstruct(O: ObservationSet, model: DensityModel, match: MatchSpec, utility: UtilitySpec, *,
                theta: Optional[float] = None, max_iter: int = 64, candidates=None,
                tol: Optional[float] = None, y_match_tol: float = 0.0,
                delta_u: Optional[float] = None) -> Reconstruction:
    """Run every stage from estimated conditionals to decisional states.

    ``theta`` turns on determinism enforcement; it needs sequential data with
    symbols. The refinement and entropy checks run before returning.
    """
    causal = cluster_causal(O, model, match)
    if theta is not None:
        causal = enforce_determinism(causal, O, theta, max_iter)
    summaries = summarize_states(causal, utility, candidates, tol)
    psi = cluster_iso_prediction(summaries, causal.partition, y_match_tol)
    ups = cluster_iso_utility(summaries, causal.partition, delta_u)
    omega = intersect_partitions(psi, ups)
    r = Reconstruction(O, causal, summaries, psi, ups, omega)
    check_invariants(r)
    log.info("states: C=%d D=%d P=%d V=%d", causal.n_states, omega.n_states,
             psi.n_states, ups.n_states)
    return r
