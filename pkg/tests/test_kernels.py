import math

import numpy as np
import pytest

from dire import (DimensionError, ParameterError, Rng, bench_kernels,
                  knn_distances, pairwise_cosine_matrix,
                  pairwise_cosine_matrix_naive, pairwise_cosine_sum,
                  pairwise_euclidean_matrix, pairwise_euclidean_matrix_naive,
                  pairwise_euclidean_sum, rng_normal)


# Pure-Python triple-loop oracles, independent of any numpy vectorization.

def oracle_cosine(a, b, eps=1e-12):
    a, b = a.tolist(), b.tolist()
    out = [[0.0] * len(b) for _ in a]
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            dot = na = nb = 0.0
            for x, y in zip(ai, bj):
                dot += x * y
                na += x * x
                nb += y * y
            out[i][j] = dot / max(math.sqrt(na) * math.sqrt(nb), eps)
    return np.array(out)


def oracle_euclidean(a, b):
    a, b = a.tolist(), b.tolist()
    out = [[0.0] * len(b) for _ in a]
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            s = 0.0
            for x, y in zip(ai, bj):
                s += (x - y) * (x - y)
            out[i][j] = math.sqrt(s)
    return np.array(out)


class TestCosineMatrix:
    def test_orthonormal_rows(self):
        out = pairwise_cosine_matrix(np.eye(2), np.eye(2))
        np.testing.assert_allclose(out, np.eye(2), atol=1e-15)

    def test_45_degrees(self):
        out = pairwise_cosine_matrix(np.array([[1.0, 1.0]]), np.array([[1.0, 0.0]]))
        np.testing.assert_allclose(out, [[1 / math.sqrt(2)]], atol=1e-15)

    def test_matches_triple_loop_oracle(self):
        rng = Rng(42)
        a = rng_normal(rng.split(0), 7, 5)
        b = rng_normal(rng.split(1), 4, 5)
        for fn in (pairwise_cosine_matrix, pairwise_cosine_matrix_naive):
            np.testing.assert_allclose(fn(a, b), oracle_cosine(a, b), atol=1e-10)

    def test_zero_row_gives_zero_similarity(self):
        a = np.array([[0.0, 0.0], [1.0, 0.0]])
        out = pairwise_cosine_matrix(a, a)
        assert out[0, 0] == 0.0 and out[0, 1] == 0.0 and out[1, 1] == 1.0

    def test_entries_bounded(self):
        m = rng_normal(Rng(3), 20, 6)
        out = pairwise_cosine_matrix(m, m)
        assert out.min() >= -1.0 - 1e-12 and out.max() <= 1.0 + 1e-12

    def test_symmetry_and_scale_invariance(self):
        m = rng_normal(Rng(4), 12, 5)
        c = pairwise_cosine_matrix(m, m)
        assert np.abs(c - c.T).max() < 1e-12
        scaled = m.copy()
        scaled[3] *= 17.0
        assert np.abs(pairwise_cosine_matrix(scaled, scaled) - c).max() < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            pairwise_cosine_matrix(np.eye(2), np.eye(3))


class TestCosineSum:
    def test_identity_sum(self):
        assert pairwise_cosine_sum(np.eye(2), np.eye(2), "sum") == pytest.approx(2.0)

    def test_identical_rows_diagonal_included(self):
        m = np.array([[1.0, 0.0], [1.0, 0.0]])
        assert pairwise_cosine_sum(m, m, "sum") == pytest.approx(4.0)

    def test_mean_matches_oracle(self):
        rng = Rng(8)
        a = rng_normal(rng.split(0), 6, 3)
        b = rng_normal(rng.split(1), 6, 3)
        expected = oracle_cosine(a, b).mean()
        assert pairwise_cosine_sum(a, b, "mean") == pytest.approx(expected, abs=1e-12)

    def test_bad_reduction(self):
        with pytest.raises(ParameterError):
            pairwise_cosine_sum(np.eye(2), np.eye(2), "median")


class TestEuclideanMatrix:
    def test_three_four_five(self):
        out = pairwise_euclidean_matrix(np.array([[0.0, 0.0]]), np.array([[3.0, 4.0]]))
        np.testing.assert_allclose(out, [[5.0]])

    def test_zero_diagonal_same_object(self):
        m = rng_normal(Rng(5), 9, 4)
        out = pairwise_euclidean_matrix(m, m)
        assert np.array_equal(np.diag(out), np.zeros(9))
        assert np.abs(out - out.T).max() < 1e-12

    def test_matches_per_pair_oracle(self):
        rng = Rng(6)
        a = rng_normal(rng.split(0), 8, 4)
        b = rng_normal(rng.split(1), 3, 4)
        for fn in (pairwise_euclidean_matrix, pairwise_euclidean_matrix_naive):
            np.testing.assert_allclose(fn(a, b), oracle_euclidean(a, b), atol=1e-9)

    def test_triangle_inequality(self):
        m = rng_normal(Rng(7), 15, 6)
        d = pairwise_euclidean_matrix(m, m)
        rng = np.random.default_rng(0)
        for _ in range(200):
            i, j, k = rng.integers(0, 15, size=3)
            assert d[i, k] <= d[i, j] + d[j, k] + 1e-9

    def test_sum_reduction(self):
        a = np.array([[0.0, 0.0]])
        b = np.array([[3.0, 4.0], [0.0, 0.0]])
        assert pairwise_euclidean_sum(a, b, "sum") == pytest.approx(5.0)
        assert pairwise_euclidean_sum(a, b, "mean") == pytest.approx(2.5)


class TestKnnDistances:
    def test_one_dimensional_k1(self):
        x = np.array([[0.0], [1.0], [3.0]])
        np.testing.assert_allclose(knn_distances(x, 1), [1.0, 1.0, 2.0])

    def test_one_dimensional_k2(self):
        x = np.array([[0.0], [1.0], [3.0]])
        np.testing.assert_allclose(knn_distances(x, 2), [3.0, 2.0, 3.0])

    def test_matches_full_sort_oracle(self):
        x = rng_normal(Rng(11), 50, 4)
        got = knn_distances(x, 5)
        for i in range(50):
            dists = sorted(np.linalg.norm(x - x[i], axis=1)[np.arange(50) != i])
            assert got[i] == pytest.approx(dists[4], abs=1e-9)

    def test_k_out_of_range(self):
        x = rng_normal(Rng(0), 5, 2)
        for k in (0, 5, 6):
            with pytest.raises(ParameterError):
                knn_distances(x, k)


class TestOracleEquivalenceSweep:
    def test_random_shapes(self):
        rng = np.random.default_rng(123)
        for case in range(20):
            n, m = rng.integers(1, 65, size=2)
            d = int(rng.integers(1, 33))
            r = Rng(1000 + case)
            a = rng_normal(r.split(0), int(n), d)
            b = rng_normal(r.split(1), int(m), d)
            fast_c = pairwise_cosine_matrix(a, b)
            naive_c = pairwise_cosine_matrix_naive(a, b)
            assert np.abs(fast_c - naive_c).max() <= 1e-9 * max(1.0, np.abs(naive_c).max())
            fast_e = pairwise_euclidean_matrix(a, b)
            naive_e = pairwise_euclidean_matrix_naive(a, b)
            assert np.abs(fast_e - naive_e).max() <= 1e-9 * max(1.0, naive_e.max())


class TestBench:
    def test_small_shape_report(self):
        reports = bench_kernels([(64, 64, 16)], reps=3, seed=0)
        assert len(reports) == 2
        for r in reports:
            assert (r.n, r.m, r.d) == (64, 64, 16)
            assert r.max_dev <= 1e-9
            assert r.speedup > 1.0

    def test_reps_validated(self):
        with pytest.raises(ParameterError):
            bench_kernels([(8, 8, 4)], reps=2)

    def test_unknown_kernel(self):
        with pytest.raises(ParameterError):
            bench_kernels([(8, 8, 4)], reps=3, kernels=("manhattan",))


class TestWorkerCount:
    def test_env_parsing(self, monkeypatch):
        from dire import worker_count
        monkeypatch.setenv("DIRE_THREADS", "3")
        assert worker_count() == 3
        monkeypatch.setenv("DIRE_THREADS", "0")
        assert worker_count() >= 1
        monkeypatch.setenv("DIRE_THREADS", "junk")
        with pytest.raises(ParameterError):
            worker_count()

    def test_parallel_result_matches_serial(self):
        rng = Rng(21)
        a = rng_normal(rng.split(0), 300, 8)
        b = rng_normal(rng.split(1), 40, 8)
        serial = pairwise_cosine_matrix(a, b, block=64, workers=1)
        parallel = pairwise_cosine_matrix(a, b, block=64, workers=4)
        assert np.array_equal(serial, parallel)
