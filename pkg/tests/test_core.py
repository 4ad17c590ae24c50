import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from gpfusion.core import (
    SparseEstimate,
    argmax_correlation,
    as_support,
    least_squares_on_support,
    matched_filter,
    top_k_magnitude,
)
from gpfusion.ensemble import gen_sensing_matrix
from gpfusion.errors import DimensionMismatch, InsufficientCandidates, RankDeficient


def sort_oracle(v, k, exclude=()):
    """Full sort on (-|v_i|, i): the lowest index wins every tie."""
    excl = set(exclude)
    order = sorted((i for i in range(len(v)) if i not in excl), key=lambda i: (-abs(v[i]), i))
    return tuple(sorted(order[:k]))


class TestLeastSquares:
    def test_identity_single_atom(self):
        coef, r = least_squares_on_support(np.eye(4), np.array([0.0, 5, 0, 0]), [1])
        np.testing.assert_array_equal(coef, [5.0])
        np.testing.assert_array_equal(r, np.zeros(4))

    def test_empty_support_returns_b(self):
        b = np.array([0.0, 5, 0, 0])
        coef, r = least_squares_on_support(np.eye(4), b, [])
        assert coef.shape == (0,)
        np.testing.assert_array_equal(r, b)

    def test_consistent_system_recovers_coefficients(self):
        A = gen_sensing_matrix(6, 8, np.random.default_rng(3))
        b = A[:, [2, 5]] @ np.array([1.0, -2.0])
        coef, r = least_squares_on_support(A, b, [2, 5])
        np.testing.assert_allclose(coef, [1.0, -2.0], atol=1e-9)
        assert np.linalg.norm(r) <= 1e-9

    def test_coefficients_follow_support_order(self):
        A = gen_sensing_matrix(6, 8, np.random.default_rng(3))
        b = A[:, [2, 5]] @ np.array([1.0, -2.0])
        coef, _ = least_squares_on_support(A, b, [5, 2])
        np.testing.assert_allclose(coef, [-2.0, 1.0], atol=1e-9)

    def test_duplicate_column_is_rank_deficient(self):
        A = gen_sensing_matrix(6, 8, np.random.default_rng(3))
        A[:, 4] = A[:, 1]
        with pytest.raises(RankDeficient):
            least_squares_on_support(A, np.ones(6), [1, 4, 6])

    def test_more_columns_than_rows(self):
        A = gen_sensing_matrix(3, 8, np.random.default_rng(3))
        with pytest.raises(RankDeficient):
            least_squares_on_support(A, np.ones(3), [0, 1, 2, 3])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            least_squares_on_support(np.eye(4), np.ones(3), [0])

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), m=st.integers(2, 30), k=st.integers(1, 30))
    def test_residual_orthogonal_to_support(self, seed, m, k):
        rng = np.random.default_rng(seed)
        k = min(k, m)
        A = gen_sensing_matrix(m, 2 * m + 1, rng)
        b = rng.standard_normal(m)
        T = rng.choice(A.shape[1], size=k, replace=False)
        _, r = least_squares_on_support(A, b, T)
        assert np.max(np.abs(A[:, T].T @ r)) <= 1e-8 * np.linalg.norm(b)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_perturbing_a_coefficient_never_helps(self, seed):
        rng = np.random.default_rng(seed)
        A = gen_sensing_matrix(12, 30, rng)
        b = rng.standard_normal(12)
        T = rng.choice(30, size=5, replace=False)
        coef, r = least_squares_on_support(A, b, T)
        base = np.linalg.norm(r)
        for j in range(len(T)):
            for step in (1e-3, -1e-3):
                c = coef.copy()
                c[j] += step
                assert np.linalg.norm(b - A[:, T] @ c) >= base


class TestMatchedFilter:
    def test_identity(self):
        np.testing.assert_array_equal(matched_filter(np.eye(3), np.array([3.0, -1, 0])), [3, -1, 0])

    def test_equal_unit_columns(self):
        m = 9
        A = np.full((m, 5), 1 / np.sqrt(m))
        np.testing.assert_allclose(matched_filter(A, np.ones(m)), np.full(5, np.sqrt(m)), rtol=1e-15)

    def test_against_scalar_loop(self):
        rng = np.random.default_rng(8)
        A = gen_sensing_matrix(6, 8, rng)
        r = rng.standard_normal(6)
        expected = [sum(A[i, j] * r[i] for i in range(6)) for j in range(8)]
        got = matched_filter(A, r)
        assert np.max(np.abs(got - expected)) <= 1e-12
        np.testing.assert_allclose(got, expected, rtol=1e-12)

    def test_length_check(self):
        with pytest.raises(DimensionMismatch):
            matched_filter(np.eye(3), np.ones(4))


class TestTopK:
    def test_tie_goes_to_lower_index(self):
        assert top_k_magnitude(np.array([0.1, -9, 3, 3]), 2) == (1, 2)

    def test_exclusion(self):
        assert top_k_magnitude(np.array([5.0, 4, 3]), 1, exclude=[0]) == (1,)

    def test_k_zero(self):
        assert top_k_magnitude(np.array([1.0, 2.0]), 0) == ()

    def test_insufficient_candidates(self):
        with pytest.raises(InsufficientCandidates):
            top_k_magnitude(np.array([1.0, 2.0, 3.0]), 2, exclude=[0, 1])

    def test_seeded_length_500(self):
        v = np.random.default_rng(500).standard_normal(500)
        assert top_k_magnitude(v, 20) == sort_oracle(v, 20)

    def test_matches_sort_oracle_on_1000_vectors(self):
        rng = np.random.default_rng(1000)
        for _ in range(1000):
            n = int(rng.integers(1, 40))
            # coarse rounding produces plenty of ties
            v = np.round(rng.standard_normal(n), 1)
            excl = tuple(rng.choice(n, size=int(rng.integers(0, n)), replace=False))
            k = int(rng.integers(0, n - len(excl) + 1))
            got = top_k_magnitude(v, k, excl)
            assert len(got) == k
            assert not set(got) & set(excl)
            assert got == sort_oracle(v, k, excl)

    @given(arrays(np.float64, st.integers(1, 50), elements=st.floats(-1e6, 1e6)), st.data())
    def test_selected_dominate_unselected(self, v, data):
        k = data.draw(st.integers(0, len(v)))
        got = set(top_k_magnitude(v, k))
        rest = set(range(len(v))) - got
        if got and rest:
            assert min(abs(v[i]) for i in got) >= max(abs(v[j]) for j in rest)


def test_argmax_correlation_signed_and_magnitude():
    c = np.array([1.0, -3.0, 2.0])
    assert argmax_correlation(c) == 1
    assert argmax_correlation(c, magnitude=False) == 2
    assert argmax_correlation(c, exclude=[1]) == 2


def test_as_support_validation():
    assert as_support([3, 1, 2]) == (1, 2, 3)
    with pytest.raises(ValueError):
        as_support([1, 1])
    with pytest.raises(ValueError):
        as_support([5], n=5)


def test_sparse_estimate_densify():
    est = SparseEstimate((1, 3), np.array([2.0, -1.0]), 0.5, 5)
    np.testing.assert_array_equal(est.to_dense(), [0, 2, 0, -1, 0])
    with pytest.raises(ValueError):
        est.coefficients[0] = 1.0
