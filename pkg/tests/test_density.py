import numpy as np
import pytest
from hypothesis import given, strategies as st

from decstates.core import (DataError, ObservationSet, ParameterError, UnseenConfiguration,
                            ZeroMass)
from decstates.density import (build_discrete, build_kde, conditional, default_bandwidth,
                               grid_samples)
from decstates.pipelines.even import gen_even_process, series_to_observations

from helpers import dense_kde_oracle

A, B, C = [0.0, 0.0], [1.0, 0.0], [5.0, 5.0]


class TestDiscrete:
    def test_counting(self):
        O = ObservationSet([A, A, A], [[0], [1], [1]])
        p = conditional(build_discrete(O), A)
        np.testing.assert_array_equal(p.samples, [[0], [1]])
        np.testing.assert_allclose(p.weights, [1 / 3, 2 / 3], rtol=0, atol=1e-15)

    def test_singletons(self):
        O = ObservationSet([A, B], [[0], [1]])
        m = build_discrete(O)
        assert conditional(m, A).weights.tolist() == [1.0, 0.0]
        assert conditional(m, B).weights.tolist() == [0.0, 1.0]

    def test_unseen(self):
        m = build_discrete(ObservationSet([A, B], [[0], [1]]))
        with pytest.raises(UnseenConfiguration):
            conditional(m, C)

    def test_user_sample_set_superset(self):
        O = ObservationSet([A, A], [[1], [1]])
        p = conditional(build_discrete(O, S=[[0], [1], [2]]), A)
        assert p.weights.tolist() == [0.0, 1.0, 0.0]

    def test_user_sample_set_missing_outcome(self):
        with pytest.raises(DataError):
            build_discrete(ObservationSet([A], [[3]]), S=[[0], [1]])

    def test_even_odd_run_forces_one(self):
        series, _ = gen_even_process(200_000, seed=3)
        O = series_to_observations(series, 2)
        m = build_discrete(O, S=[[0], [1]])
        # window "01": a run of one 1 started after a 0, so the next symbol must be 1
        assert conditional(m, [0, 1]).weights.tolist() == [0.0, 1.0]

    def test_count_matrix(self):
        O = ObservationSet([A, A, B], [[0], [1], [1]])
        c = build_discrete(O).count_matrix().toarray()
        assert c.tolist() == [[1, 1], [0, 1]]

    def test_lru_cache_bound(self):
        O = ObservationSet([[float(i)] for i in range(10)], [[0]] * 10)
        m = build_discrete(O, cache_size=3)
        for i in range(10):
            m.weights([float(i)])
        assert len(m._cache) == 3


class TestBandwidth:
    def test_hand_example(self):
        O = ObservationSet([[0.0], [1.0], [3.0]], [[0.0]] * 3)
        assert default_bandwidth(O) == pytest.approx(4 / 3)

    def test_degenerate(self):
        O = ObservationSet([[1.0], [1.0]], [[2.0], [2.0]])
        with pytest.raises(DataError):
            default_bandwidth(O)

    def test_brute_force(self):
        rng = np.random.default_rng(42)
        pts = rng.uniform(size=100)
        O = ObservationSet(pts[:, None], np.zeros((100, 1)))
        d = np.abs(pts[:, None] - pts[None, :])
        d[d == 0] = np.inf
        assert default_bandwidth(O) == pytest.approx(d.min(axis=1).mean(), rel=1e-15)

    def test_duplicates_use_nearest_distinct(self):
        O = ObservationSet([[0.0], [0.0], [2.0]], [[0.0]] * 3)
        assert default_bandwidth(O) == pytest.approx(2.0)


class TestKernel:
    def test_single_observation_peak(self):
        O = ObservationSet([[0.0]], [[2.0]])
        m = build_kde(O, h=1.0, S=[[0.0], [1.0], [2.0], [3.0]])
        w = m.weights([0.0])
        assert int(np.argmax(w)) == 2
        # unnormalized, the peak value is K(a, a) = 1
        raw = np.exp(-np.array([4.0, 1.0, 0.0, 1.0]))
        np.testing.assert_allclose(w, raw / raw.sum(), rtol=1e-14)

    def test_symmetric_pair(self):
        O = ObservationSet([[-1.0], [1.0]], [[0.0], [4.0]])
        w = build_kde(O, h=2.0, S=[[0.0], [4.0]]).weights([0.0])
        assert w[0] == pytest.approx(w[1], rel=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_dense_oracle_cutoff_zero(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(50, 2))
        Z = rng.normal(size=(50, 1))
        S = np.linspace(-2, 2, 9)[:, None]
        m = build_kde(ObservationSet(X, Z), h=0.7, S=S, cutoff=0.0)
        for x in rng.normal(size=(5, 2)):
            np.testing.assert_allclose(m.weights(x), dense_kde_oracle(X, Z, S, x, 0.7),
                                       rtol=0, atol=1e-9)

    def test_dense_oracle_with_cutoff(self):
        rng = np.random.default_rng(9)
        X = rng.uniform(0, 4, size=(200, 2))
        Z = rng.uniform(0, 4, size=(200, 1))
        S = np.linspace(0, 4, 5)[:, None]
        cutoff = 1e-3
        m = build_kde(ObservationSet(X, Z), h=0.5, S=S, cutoff=cutoff)
        for x in X[:10]:
            np.testing.assert_allclose(m.weights(x), dense_kde_oracle(X, Z, S, x, 0.5, cutoff),
                                       rtol=0, atol=1e-12)

    def test_exact_mode_equals_discrete(self):
        rng = np.random.default_rng(0)
        X = rng.integers(0, 4, size=(1000, 2)).astype(float)
        Z = rng.integers(0, 3, size=(1000, 1)).astype(float)
        O = ObservationSet(X, Z)
        d = build_discrete(O)
        k = build_kde(O, h=None, S=d.samples, exact=True)
        for x in d.configs:
            assert np.array_equal(d.weights(x), k.weights(x))

    def test_zero_mass(self):
        O = ObservationSet([[0.0]], [[0.0]])
        m = build_kde(O, h=0.01, S=[[0.0]])
        with pytest.raises(ZeroMass):
            m.weights([100.0])
        with pytest.raises(ZeroMass):
            build_kde(O, h=None, S=[[0.0]], exact=True).weights([1.0])

    @pytest.mark.parametrize("h", [0.0, -1.0, float("nan"), float("inf")])
    def test_bad_bandwidth(self, h):
        with pytest.raises(ParameterError):
            build_kde(ObservationSet([[0.0]], [[0.0]]), h=h, S=[[0.0]])

    def test_empty_sample_set(self):
        with pytest.raises(ParameterError):
            build_kde(ObservationSet([[0.0]], [[0.0]]), h=1.0, S=np.zeros((0, 1)))

    def test_bad_cutoff(self):
        with pytest.raises(ParameterError):
            build_kde(ObservationSet([[0.0]], [[0.0]]), h=1.0, S=[[0.0]], cutoff=2.0)

    def test_default_grid(self):
        O = ObservationSet([[0.0], [1.0]], [[2.0], [6.0]])
        S = grid_samples(O, 5)
        assert S[:, 0].tolist() == [2.0, 3.0, 4.0, 5.0, 6.0]

    def test_workers_do_not_change_results(self):
        rng = np.random.default_rng(5)
        O = ObservationSet(rng.normal(size=(300, 3)), rng.normal(size=(300, 1)))
        S = np.linspace(-2, 2, 11)[:, None]
        a = build_kde(O, 0.8, S).node_distributions(workers=1)
        b = build_kde(O, 0.8, S).node_distributions(workers=4)
        assert a.tobytes() == b.tobytes()

    @given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=1, max_size=30),
           st.floats(0.1, 10))
    def test_always_normalized(self, pairs, h):
        X = np.array([[p[0]] for p in pairs], dtype=float)
        Z = np.array([[p[1]] for p in pairs], dtype=float)
        m = build_kde(ObservationSet(X, Z), h, S=np.arange(6.0)[:, None], cutoff=0.0)
        for x in np.unique(X, axis=0):
            assert abs(m.weights(x).sum() - 1) <= 1e-9

    @given(st.floats(1e-3, 1e3))
    def test_kernel_scale_absorbed(self, c):
        rng = np.random.default_rng(11)
        X, Z = rng.normal(size=(30, 1)), rng.normal(size=(30, 1))
        S = np.linspace(-1, 1, 7)[:, None]
        raw = np.zeros(len(S))
        for xi, zi in zip(X, Z):
            raw += np.exp(-((xi[0] - 0.1) ** 2 + (zi[0] - S[:, 0]) ** 2) / 0.9)
        w = build_kde(ObservationSet(X, Z), 0.9, S, cutoff=0.0).weights([0.1])
        np.testing.assert_allclose(w, (c * raw) / (c * raw).sum(), rtol=1e-12)
