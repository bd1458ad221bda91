import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rlgl import analysis, engine, models
from rlgl.errors import (
    DanglingNodeError,
    InvalidDampingError,
    InvalidIndexError,
    InvalidM0Error,
    NotErgodicError,
)
from rlgl.matrix import (
    augment_pagerank,
    build_transition,
    check_distribution,
    google_matrix,
    gth_stationary,
    validate_stochastic,
)

from conftest import dense_ergodic_chain


class TestBuildTransition:
    def test_two_wheels_rows_sum_to_one(self):
        und, n = models.two_wheels()
        P = build_transition(models.symmetrize(und), n)
        assert P.n == 12
        assert np.abs(P.row_sums() - 1.0).max() <= 1e-12

    def test_single_self_loop(self):
        P = build_transition([(0, 0, 5.0)], 1)
        assert P.to_dense().tolist() == [[1.0]]

    def test_four_state_chain_rows(self, four_state):
        expected = np.array(
            [[0, 0.5, 0.5, 0], [0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0]], dtype=float
        )
        assert np.array_equal(four_state.to_dense(), expected)

    def test_duplicate_edges_merge(self):
        P = build_transition([(0, 1, 1.0), (0, 1, 1.0), (0, 0, 2.0), (1, 0, 1.0)], 2)
        assert P.out_degree.tolist() == [2.0, 1.0]
        assert np.allclose(P.to_dense()[0], [0.5, 0.5])

    def test_dangling_raises(self):
        with pytest.raises(DanglingNodeError) as exc:
            build_transition([(0, 1, 1.0)], 2)
        assert exc.value.node == 1

    def test_dangling_policies(self):
        P = build_transition([(0, 1, 1.0)], 2, dangling="uniform")
        assert np.allclose(P.to_dense()[1], [0.5, 0.5])
        P = build_transition([(0, 1, 1.0)], 2, dangling="self")
        assert np.allclose(P.to_dense()[1], [0.0, 1.0])

    def test_bad_index(self):
        with pytest.raises(InvalidIndexError):
            build_transition([(0, 5, 1.0)], 2)

    @given(st.integers(2, 12), st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_random_edge_lists_are_stochastic(self, n, seed):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(n, 4 * n))
        edges = np.column_stack(
            [rng.integers(n, size=m), rng.integers(n, size=m), rng.uniform(0.1, 2.0, size=m)]
        )
        # guarantee out-edges everywhere
        loops = np.column_stack([np.arange(n), np.arange(n), np.full(n, 0.5)])
        P = build_transition(np.vstack([edges, loops]), n)
        assert np.abs(P.row_sums() - 1.0).max() <= 1e-12
        assert P.data.min() > 0.0


class TestValidateStochastic:
    def test_exact_chain_ok(self, four_state):
        assert validate_stochastic(four_state, 1e-12) == []

    def test_detects_bad_row(self, four_state):
        P = four_state
        bad = P.data.copy()
        bad[0] *= 0.999
        broken = type(P)(P.n, P.indptr, P.indices, bad, P.out_degree)
        report = validate_stochastic(broken, 1e-12)
        assert [r for r, _ in report] == [0]

    def test_google_matrix_ok(self):
        edges, n = models.random_sbm([20, 20], 0.2, 0.05, seed=1)
        G = google_matrix(edges, 0.85, n=n)
        assert validate_stochastic(G, 1e-9) == []


class TestGoogleMatrix:
    def test_identity_hand_example(self):
        P = build_transition([(0, 0, 1.0), (1, 1, 1.0)], 2)
        G = google_matrix(P, 0.5)
        assert np.allclose(G.to_dense(), [[0.75, 0.25], [0.25, 0.75]], atol=1e-15)

    def test_dangling_row_becomes_s(self):
        G = google_matrix([(0, 1, 1.0)], 0.85, n=2)
        _, row = G.row(1)
        assert np.allclose(row, G.s, atol=1e-15)

    def test_invalid_damping(self):
        with pytest.raises(InvalidDampingError):
            google_matrix([(0, 1, 1.0), (1, 0, 1.0)], 1.5, n=2)

    def test_dobrushin_at_most_c(self):
        edges, n = models.random_sbm([15, 15], 0.3, 0.05, seed=4)
        for c in (0.5, 0.85):
            G = google_matrix(edges, c, n=n)
            assert analysis.dobrushin(G).value <= c + 1e-12

    def test_dobrushin_bound_with_dangling_rows(self):
        G = google_matrix([(0, 1, 1.0), (2, 0, 1.0)], 0.85, n=3)
        assert G.dangling.tolist() == [1]
        assert analysis.dobrushin(G).value <= 0.85 + 1e-12

    def test_mul_left_matches_dense(self):
        G = google_matrix([(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0)], 0.85, n=3)
        x = np.array([0.2, 0.5, 0.3])
        assert np.allclose(G.mul_left(x), x @ G.to_dense(), atol=1e-14)


class TestAugmentPagerank:
    def test_rows_sum_to_one(self):
        edges, n = models.random_sbm([10, 10], 0.3, 0.1, seed=3)
        A = augment_pagerank(edges, 0.85, n=n)
        assert A.n == n + 1
        assert np.abs(A.row_sums() - 1.0).max() <= 1e-12

    def test_lower_right_block_is_scaled_exactly(self, four_state):
        c = 0.85
        A = augment_pagerank(four_state, c)
        dense = A.to_dense()
        block = dense[1:, 1:]
        assert np.array_equal(block, c * four_state.to_dense())
        assert np.all(dense[1:, 0] == 1.0 - c)
        assert dense[0, 0] == c

    def test_seed_at_auxiliary_node(self, four_state):
        c = 0.85
        A = augment_pagerank(four_state, c)
        M0 = np.zeros(5)
        M0[0] = 1.0
        st = engine.init(A, M0)
        assert st.C[0] == -(1.0 - c)
        assert np.allclose(st.C[1:], (1.0 - c) * np.full(4, 0.25), atol=1e-15)
        assert np.array_equal(st.H, M0)


class TestGth:
    def test_four_state_exact(self, four_state):
        pi = gth_stationary(four_state)
        assert np.abs(pi - np.array([2, 1, 2, 2]) / 7.0).max() <= 1e-15

    def test_two_state_hand_solve(self):
        pi = gth_stationary(np.array([[0.5, 0.5], [0.3, 0.7]]))
        assert np.allclose(pi, [0.375, 0.625], atol=1e-15)

    def test_two_cycle(self):
        pi = gth_stationary(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(pi, [0.5, 0.5])

    def test_not_ergodic(self):
        with pytest.raises(NotErgodicError):
            gth_stationary(np.array([[1.0, 0.0], [0.5, 0.5]]))

    @pytest.mark.parametrize("n,seed", [(10, 0), (37, 1), (100, 2)])
    def test_stationarity_residual(self, n, seed):
        P = dense_ergodic_chain(n, seed)
        pi = gth_stationary(P)
        assert np.abs(pi @ P.to_dense() - pi).sum() <= 1e-10
        assert abs(pi.sum() - 1.0) <= 1e-12


class TestDistribution:
    def test_rejects_negative(self):
        with pytest.raises(InvalidM0Error):
            check_distribution([-0.1, 1.1])

    def test_rejects_bad_sum(self):
        with pytest.raises(InvalidM0Error):
            check_distribution([0.5, 0.4])

    def test_accepts_probability_vector(self):
        v = check_distribution([0.25, 0.75])
        assert v.dtype == float
