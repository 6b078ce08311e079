import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy.spatial.distance import jensenshannon
from scipy.stats import chi2_contingency

from decstates.compare import (MatchSpec, Metric, chi_square_test, distance, distance_rows,
                               match)
from decstates.core import DimensionMismatch, Distribution, ParameterError

S2 = np.array([[0.0], [1.0]])
ALL = list(Metric)


def D(w, samples=S2):
    return Distribution(samples, np.asarray(w, dtype=float))


def prob_vectors(k_min=2, k_max=6):
    return st.integers(k_min, k_max).flatmap(
        lambda k: st.lists(st.lists(st.integers(0, 20), min_size=k, max_size=k)
                           .filter(lambda v: sum(v) > 0), min_size=2, max_size=2))


def _norm(v):
    v = np.asarray(v, dtype=float)
    return v / v.sum()


class TestDistance:
    @pytest.mark.parametrize("metric", ALL)
    def test_identical_is_zero(self, metric):
        assert distance(D([0.5, 0.5]), D([0.5, 0.5]), metric) == 0.0

    def test_js_disjoint_is_ln2(self):
        assert distance(D([1, 0]), D([0, 1]), Metric.JENSEN_SHANNON) == pytest.approx(math.log(2))

    def test_bhattacharyya_value(self):
        d = distance(D([0.5, 0.5]), D([0.9, 0.1]), Metric.BHATTACHARYYA)
        # frozen from -ln(sqrt(0.45) + sqrt(0.05))
        assert d == pytest.approx(0.11157177565710485, abs=1e-12)

    def test_disjoint_support_is_infinite(self):
        for m in (Metric.BHATTACHARYYA, Metric.HARMONIC_MEAN):
            assert distance(D([1, 0]), D([0, 1]), m) == math.inf

    def test_variational(self):
        assert distance(D([0.2, 0.8]), D([0.6, 0.4]), Metric.VARIATIONAL) == pytest.approx(0.4)

    def test_harmonic_mean_value(self):
        p, q = np.array([0.5, 0.5]), np.array([0.9, 0.1])
        expected = -math.log(sum(2 * a * b / (a + b) for a, b in zip(p, q)))
        assert distance(D(p), D(q), Metric.HARMONIC_MEAN) == pytest.approx(expected)

    def test_sample_set_mismatch(self):
        other = Distribution([[0.0], [2.0]], [0.5, 0.5])
        with pytest.raises(DimensionMismatch):
            distance(D([0.5, 0.5]), other, Metric.VARIATIONAL)

    @given(prob_vectors())
    def test_js_matches_scipy(self, pq):
        p, q = (_norm(v) for v in pq)
        got = distance_rows(p[None, :], q, Metric.JENSEN_SHANNON)[0]
        assert got == pytest.approx(jensenshannon(p, q) ** 2, abs=1e-12)

    @given(prob_vectors(), st.sampled_from(ALL))
    def test_symmetric_and_non_negative(self, pq, metric):
        p, q = (_norm(v) for v in pq)
        a = distance_rows(p[None, :], q, metric)[0]
        b = distance_rows(q[None, :], p, metric)[0]
        assert a == b or (math.isinf(a) and math.isinf(b)) or abs(a - b) <= 1e-15
        assert a >= 0
        assert distance_rows(p[None, :], p, metric)[0] == 0.0

    @given(prob_vectors())
    def test_bounds(self, pq):
        p, q = (_norm(v) for v in pq)
        assert 0 <= distance_rows(p[None, :], q, Metric.VARIATIONAL)[0] <= 1 + 1e-15
        assert 0 <= distance_rows(p[None, :], q, Metric.JENSEN_SHANNON)[0] <= math.log(2) + 1e-12

    @given(prob_vectors())
    def test_zero_only_for_equal(self, pq):
        p, q = (_norm(v) for v in pq)
        assume(not np.array_equal(p, q))
        for m in (Metric.VARIATIONAL, Metric.JENSEN_SHANNON):
            assert distance_rows(p[None, :], q, m)[0] > 0


class TestChiSquare:
    def test_identical_counts_match(self):
        stat, dof, p = chi_square_test([30, 70], [30, 70])
        assert stat == 0 and p == 1.0
        assert match(D([0.3, 0.7]), D([0.3, 0.7]), MatchSpec(Metric.CHI_SQUARE, 0.05),
                     counts=([30, 70], [30, 70]))

    def test_reference_oracle(self):
        stat, dof, p = chi_square_test([50, 50], [90, 10])
        ref_stat, ref_p, ref_dof, _ = chi2_contingency([[50, 50], [90, 10]], correction=False)
        assert dof == ref_dof == 1
        assert stat == pytest.approx(ref_stat, rel=1e-12)
        assert p == pytest.approx(ref_p, rel=1e-10)
        assert stat > 3.841
        assert not match(D([0.5, 0.5]), D([0.9, 0.1]), MatchSpec(Metric.CHI_SQUARE, 0.05),
                         counts=([50, 50], [90, 10]))

    @given(prob_vectors(3, 8))
    def test_against_contingency_table(self, ab):
        a, b = (np.asarray(v, dtype=float) for v in ab)
        used = (a + b) > 0
        stat, dof, p = chi_square_test(a, b)
        assert dof == used.sum() - 1
        if dof >= 1:
            ref = chi2_contingency(np.vstack([a[used], b[used]]), correction=False)
            assert stat == pytest.approx(ref[0], rel=1e-9, abs=1e-12)
            assert p == pytest.approx(ref[1], rel=1e-8, abs=1e-14)

    def test_unequal_totals(self):
        # same proportions at different sample sizes is a perfect match
        stat, _, p = chi_square_test([10, 30], [100, 300])
        assert stat == pytest.approx(0, abs=1e-12) and p == pytest.approx(1)

    def test_missing_counts(self):
        with pytest.raises(ParameterError):
            match(D([0.5, 0.5]), D([0.5, 0.5]), MatchSpec())


class TestMatch:
    def test_bhattacharyya_close(self):
        spec = MatchSpec(Metric.BHATTACHARYYA, 0.05)
        assert match(D([0.5, 0.5]), D([0.51, 0.49]), spec)
        # frozen from -ln(sqrt(0.255) + sqrt(0.245))
        assert distance(D([0.5, 0.5]), D([0.51, 0.49]), Metric.BHATTACHARYYA) == pytest.approx(
            5.000750166706e-05, rel=1e-9)

    def test_infinite_never_matches(self):
        assert not match(D([1, 0]), D([0, 1]), MatchSpec(Metric.BHATTACHARYYA, 1e300))

    def test_exact(self):
        spec = MatchSpec(Metric.EXACT, 0)
        assert match(D([0.25, 0.75]), D([0.25, 0.75]), spec)
        assert not match(D([0.25, 0.75]), D([0.25 + 1e-15, 0.75 - 1e-15]), spec)

    @pytest.mark.parametrize("metric,t", [(Metric.CHI_SQUARE, 0.0), (Metric.CHI_SQUARE, 1.0),
                                          (Metric.VARIATIONAL, -0.1),
                                          (Metric.BHATTACHARYYA, float("nan"))])
    def test_threshold_ranges(self, metric, t):
        with pytest.raises(ParameterError):
            MatchSpec(metric, t)

    def test_unknown_metric(self):
        with pytest.raises(ParameterError):
            MatchSpec("euclid", 0.1)

    @given(prob_vectors(), st.sampled_from([m for m in ALL if m is not Metric.CHI_SQUARE]))
    def test_reflexive(self, pq, metric):
        p = _norm(pq[0])
        S = np.arange(p.size, dtype=float)[:, None]
        assert match(Distribution(S, p), Distribution(S, p), MatchSpec(metric, 0.0))

    @given(prob_vectors())
    def test_chi_square_reflexive(self, pq):
        c = np.asarray(pq[0], dtype=float)
        S = np.arange(c.size, dtype=float)[:, None]
        d = Distribution(S, c / c.sum())
        assert match(d, d, MatchSpec(Metric.CHI_SQUARE, 0.05), counts=(c, c))
