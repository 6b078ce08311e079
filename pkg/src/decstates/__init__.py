"""Causal and decisional state reconstruction from observation data.

Typical use: build a :class:`~decstates.core.ObservationSet`, estimate
conditionals with :func:`build_discrete` or :func:`build_kde`, then run
:func:`~decstates.pipelines.analysis.reconstruct` with a match predicate and a
utility.
"""
from .compare import MatchSpec, Metric, distance, match
from .core import (DataError, DecStatesError, DimensionMismatch, Distribution, NumericError,
                   ObservationSet, ParameterError, PartitionKind, StatePartition,
                   UnseenConfiguration, UtilityKind, UtilitySpec, ZeroMass, eval_utility,
                   make_utility)
from .decision import (cluster_iso_prediction, cluster_iso_utility, expected_utility,
                       intersect_partitions, optimal_predictions, summarize_states)
from .density import build_discrete, build_kde, conditional, default_bandwidth
from .graph import (TransitionGraph, build_transition_graph, export_dot, global_complexity,
                    local_complexity, recurrent_states)
from .pipelines.analysis import Reconstruction, reconstruct
from .states import CausalStateSet, average_distributions, cluster_causal, enforce_determinism

__version__ = "0.1.0"
