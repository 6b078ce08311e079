import numpy as np
import pytest
from hypothesis import given, strategies as st

from decstates.core import (DataError, DimensionMismatch, Distribution, ObservationSet,
                            ParameterError, PartitionKind, StatePartition, UtilityKind,
                            blocks_as_sets, eval_utility, make_utility, unique_rows)


class TestUtilities:
    def test_thresholded_absolute_inside_band(self):
        U = make_utility(UtilityKind.THRESHOLDED_ABSOLUTE, tau=5)
        assert eval_utility(U, [100], [103]) == 0.0

    def test_thresholded_absolute_outside_band(self):
        U = make_utility("thresholded-absolute", tau=5)
        assert eval_utility(U, [100], [110]) == -5.0

    def test_delta(self):
        U = make_utility(UtilityKind.DELTA)
        assert eval_utility(U, [1], [1]) == 1.0
        assert eval_utility(U, [0], [1]) == 0.0
        for a in range(-3, 4):
            assert U([a], [a]) == 1.0

    def test_neg_squared_error(self):
        U = make_utility(UtilityKind.NEG_SQUARED_ERROR)
        assert eval_utility(U, [2], [5]) == -9.0

    def test_cone_match_count(self):
        U = make_utility(UtilityKind.CONE_MATCH_COUNT)
        assert eval_utility(U, [1, 0, 1], [1, 1, 1]) == 2.0
        # non-binary cones go through the generic path
        assert eval_utility(U, [1, 2, 3], [1, 5, 3]) == 2.0

    def test_weather_table(self):
        U = make_utility(UtilityKind.TABLE, table=[[1, -2], [-1, 0]])
        sunny, rain = [0], [1]
        assert U(sunny, sunny) == 1.0
        assert U(sunny, rain) == -2.0
        assert U(rain, sunny) == -1.0
        assert U(rain, rain) == 0.0
        assert not U.symmetric

    def test_table_round_trip_with_labels(self, rng):
        t = rng.normal(size=(4, 4))
        labels = [[10.0], [20.0], [30.0], [40.0]]
        U = make_utility(UtilityKind.TABLE, table=t, labels=labels)
        for i in range(4):
            for j in range(4):
                assert U(labels[i], labels[j]) == t[i, j]

    @pytest.mark.parametrize("kw", [
        dict(kind="thresholded-absolute", tau=-1),
        dict(kind="thresholded-absolute", tau=float("inf")),
        dict(kind="table", table=[[1, 2, 3], [4, 5, 6]]),
        dict(kind="table", table=[[1, float("inf")], [0, 0]]),
        dict(kind="table"),
        dict(kind="delta", tau=1.0),
        dict(kind="nope"),
    ])
    def test_invalid_parameters(self, kw):
        with pytest.raises(ParameterError):
            make_utility(**kw)

    def test_dimension_mismatch(self):
        U = make_utility(UtilityKind.NEG_SQUARED_ERROR)
        with pytest.raises(DimensionMismatch):
            eval_utility(U, [1, 2], [1])
        T = make_utility(UtilityKind.THRESHOLDED_ABSOLUTE, tau=1)
        with pytest.raises(DimensionMismatch):
            T.matrix([[1, 2]], [[1, 2]])

    def test_table_unknown_point(self):
        U = make_utility(UtilityKind.TABLE, table=[[1, 0], [0, 1]])
        with pytest.raises(DimensionMismatch):
            U([7], [0])

    @given(st.lists(st.integers(-5, 5), min_size=1, max_size=4),
           st.lists(st.integers(-5, 5), min_size=1, max_size=4),
           st.floats(0, 10))
    def test_builtins_are_symmetric(self, a, b, tau):
        n = min(len(a), len(b))
        y, z = a[:n], b[:n]
        kinds = [make_utility(UtilityKind.DELTA), make_utility(UtilityKind.NEG_SQUARED_ERROR),
                 make_utility(UtilityKind.CONE_MATCH_COUNT)]
        for U in kinds:
            assert U(y, z) == U(z, y)
        T = make_utility(UtilityKind.THRESHOLDED_ABSOLUTE, tau=tau)
        assert T(y[:1], z[:1]) == T(z[:1], y[:1])

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=12).flatmap(
        lambda y: st.tuples(st.just(y), st.lists(st.integers(0, 1), min_size=len(y),
                                                  max_size=len(y)))))
    def test_cone_match_fast_path_agrees_with_count(self, yz):
        y, z = yz
        U = make_utility(UtilityKind.CONE_MATCH_COUNT)
        assert U(y, z) == sum(int(a == b) for a, b in zip(y, z))


class TestObservationSet:
    def test_basic(self):
        O = ObservationSet([[0], [1], [1]], [[1], [1], [0]], symbols=[1, 1], sequential=True)
        assert len(O) == 3 and O.x_dim == 1 and O.z_dim == 1 and O.alphabet_size == 2

    def test_symbols_need_sequential(self):
        with pytest.raises(DataError):
            ObservationSet([[0], [1]], [[0], [1]], symbols=[0])

    def test_symbol_count(self):
        with pytest.raises(DimensionMismatch):
            ObservationSet([[0], [1]], [[0], [1]], symbols=[0, 1], sequential=True)

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            ObservationSet([[0], [1]], [[0]])

    def test_non_finite(self):
        with pytest.raises(DataError):
            ObservationSet([[np.nan]], [[0]])

    def test_empty(self):
        with pytest.raises(DataError):
            ObservationSet(np.zeros((0, 1)), np.zeros((0, 1)))

    def test_immutable(self):
        O = ObservationSet([[0.0]], [[1.0]])
        with pytest.raises(ValueError):
            O.x[0, 0] = 3


class TestDistribution:
    def test_normalize(self):
        d = Distribution([[0], [1]], [1.0, 3.0])
        assert not d.normalized
        n = d.normalize()
        assert n.normalized
        np.testing.assert_allclose(n.weights, [0.25, 0.75])
        np.testing.assert_allclose(n.mean(), [0.75])

    def test_duplicate_samples(self):
        with pytest.raises(ValueError):
            Distribution([[0], [0]], [0.5, 0.5])

    def test_negative_weight(self):
        with pytest.raises(ValueError):
            Distribution([[0], [1]], [-0.1, 1.1])


class TestStatePartition:
    def test_first_appearance_labels(self):
        p = StatePartition(PartitionKind.CAUSAL, [5, 5, 2, 9, 2])
        assert p.assignment.tolist() == [0, 0, 1, 2, 1]
        assert p.counts.tolist() == [2, 2, 1]
        assert abs(p.masses.sum() - 1) < 1e-12

    def test_refines(self):
        fine = StatePartition("causal", [0, 1, 2, 2])
        coarse = StatePartition("decisional", [0, 0, 1, 1])
        assert fine.refines(coarse)
        assert not coarse.refines(fine)

    def test_blocks(self):
        p = StatePartition("causal", [0, 1, 0, 2])
        assert blocks_as_sets(p) == {frozenset({0, 2}), frozenset({1}), frozenset({3})}

    @given(st.lists(st.integers(0, 6), min_size=1, max_size=40))
    def test_partition_total_and_masses(self, labels):
        p = StatePartition("causal", labels)
        assert len(p) == len(labels)
        assert abs(p.masses.sum() - 1) < 1e-9
        # relabeling preserves the block structure
        a = np.asarray(labels)
        assert np.array_equal(a[:, None] == a[None, :],
                              p.assignment[:, None] == p.assignment[None, :])


def test_unique_rows_folds_signed_zero():
    rows, inv, counts = unique_rows(np.array([[0.0, 1.0], [-0.0, 1.0], [2.0, 1.0]]))
    assert rows.shape[0] == 2
    assert inv.tolist() == [0, 0, 1]
    assert counts.tolist() == [2, 1]
