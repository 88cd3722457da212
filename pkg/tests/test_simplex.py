"""Simplex geometry, matrix encoding, and decode-operator behavior."""

import numpy as np
import pytest

from spisim.simplex import (DecodeOperator, build_decode_operator,
                            build_simplex_vertices, complementary_combine,
                            decode_measurement, encode_matrix)


def dense_decode(p: int, l: int) -> np.ndarray:
    """Independent dense decode matrix straight from the definition."""
    return np.kron(np.eye(l), build_simplex_vertices(p).V)


class TestSimplexVertices:

    def test_p1_is_antipodal_pair(self):
        v = build_simplex_vertices(1)
        np.testing.assert_array_equal(v.V, [[-1.0, 1.0]])

    def test_p2_matches_equilateral_triangle(self):
        V = build_simplex_vertices(2).V
        s3 = np.sqrt(3.0) / 2.0
        expected = np.array([[-s3, s3, 0.0], [-0.5, -0.5, 1.0]])
        np.testing.assert_allclose(V, expected, atol=1e-15)
        gram = V.T @ V
        np.testing.assert_allclose(np.diag(gram), 1.0, atol=1e-15)
        off = gram - np.diag(np.diag(gram))
        np.testing.assert_allclose(off[off != 0], -0.5, atol=1e-15)
        np.testing.assert_allclose(V.sum(axis=1), 0.0, atol=1e-15)

    @pytest.mark.parametrize("p", list(range(1, 33)))
    def test_invariants(self, p):
        V = build_simplex_vertices(p).V
        assert V.shape == (p, p + 1)
        gram = V.T @ V
        np.testing.assert_allclose(np.diag(gram), 1.0, atol=1e-12)
        off_mask = ~np.eye(p + 1, dtype=bool)
        np.testing.assert_allclose(gram[off_mask], -1.0 / p, atol=1e-12)
        np.testing.assert_allclose(V @ np.ones(p + 1), 0.0, atol=1e-12)
        np.testing.assert_allclose(V @ V.T, (p + 1) / p * np.eye(p),
                                   atol=1e-12)

    def test_p3_gram_structure(self):
        V = build_simplex_vertices(3).V
        ones = np.ones((4, 4))
        expected = np.eye(4) - (ones - np.eye(4)) / 3.0
        np.testing.assert_allclose(V.T @ V, expected, atol=1e-12)
        np.testing.assert_allclose(V.mean(axis=1), 0.0, atol=1e-13)

    def test_deterministic(self):
        a = build_simplex_vertices(17).V
        b = build_simplex_vertices(17).V
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("bad", [0, -1, 1025, 2.5])
    def test_invalid_order(self, bad):
        with pytest.raises(ValueError):
            build_simplex_vertices(bad)

    def test_immutable(self):
        V = build_simplex_vertices(4).V
        with pytest.raises(ValueError):
            V[0, 0] = 2.0


class TestEncodeMatrix:

    def test_p1_positive_negative_split(self):
        enc = encode_matrix(np.array([[0.5, -0.3]]), 1)
        # row 0 holds the -1 vertex coefficient, row 1 the +1 vertex
        np.testing.assert_allclose(enc.Mprime * enc.scale,
                                   [[0.0, 0.3], [0.5, 0.0]], atol=1e-15)
        assert enc.scale == pytest.approx(0.5)
        decoded = np.array([[-1.0, 1.0]]) @ enc.Mprime * enc.scale
        np.testing.assert_allclose(decoded, [[0.5, -0.3]], atol=1e-15)

    def test_p2_single_point(self):
        # Point (1, 0): the first vertex is furthest; solving against the
        # remaining two gives (2/sqrt(3), 1/sqrt(3)).
        enc = encode_matrix(np.array([[1.0], [0.0]]), 2)
        col = enc.Mprime[:, 0] * enc.scale
        np.testing.assert_allclose(
            col, [0.0, 2.0 / np.sqrt(3.0), 1.0 / np.sqrt(3.0)], atol=1e-14)
        V = build_simplex_vertices(2).V
        np.testing.assert_allclose(V @ col, [1.0, 0.0], atol=1e-14)

    def test_zero_column_encodes_to_zeros(self):
        M = np.array([[0.0, 1.0], [0.0, -2.0], [0.0, 0.5]])
        enc = encode_matrix(M, 3)
        np.testing.assert_array_equal(enc.Mprime[:, 0], 0.0)
        assert np.any(enc.Mprime[:, 1] > 0.0)

    @pytest.mark.parametrize("p", [1, 2, 3, 5, 10])
    def test_roundtrip_random(self, p):
        rng = np.random.default_rng(200 + p)
        for _ in range(10):
            k = int(rng.integers(p, 4 * p + 1))
            n = int(rng.integers(1, 40))
            M = rng.uniform(-1.0, 1.0, (k, n))
            enc = encode_matrix(M, p)
            recovered = (dense_decode(p, enc.l) @ enc.Mprime * enc.scale)[:k]
            np.testing.assert_allclose(recovered, M, atol=1e-9)
            assert enc.Mprime.min() >= 0.0
            assert enc.Mprime.max() <= 1.0

    def test_padding_when_k_not_divisible(self):
        rng = np.random.default_rng(3)
        M = rng.uniform(-1.0, 1.0, (5, 6))
        enc = encode_matrix(M, 2)
        assert enc.l == 3 and enc.padded_k == 6 and enc.k == 5
        recovered = dense_decode(2, 3) @ enc.Mprime * enc.scale
        np.testing.assert_allclose(recovered[:5], M, atol=1e-10)
        np.testing.assert_allclose(recovered[5], 0.0, atol=1e-12)

    def test_each_bundle_column_has_exact_zero(self):
        rng = np.random.default_rng(11)
        M = rng.uniform(-1.0, 1.0, (9, 17))
        enc = encode_matrix(M, 3)
        blocks = enc.Mprime.reshape(enc.l, 4, 17)
        assert np.all((blocks == 0.0).any(axis=1))

    def test_nonnegativity_property_bulk(self):
        # The furthermost-vertex decomposition must be non-negative up to
        # round-off for generic points; exercised on 1e6 points per order.
        for p in (1, 2, 3, 5, 10):
            rng = np.random.default_rng(p)
            M = rng.standard_normal((p, 1_000_000))
            enc = encode_matrix(M, p)
            assert enc.min_coefficient >= -1e-12

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            encode_matrix(np.array([[1.0, np.nan]]), 1)
        with pytest.raises(ValueError):
            encode_matrix(np.array([[np.inf], [0.0]]), 2)

    def test_all_zero_matrix(self):
        enc = encode_matrix(np.zeros((4, 3)), 2)
        np.testing.assert_array_equal(enc.Mprime, 0.0)
        assert enc.scale == 1.0


class TestDecodeOperator:

    def test_dense_p1_l1(self):
        Q = build_decode_operator(1, 1)
        np.testing.assert_array_equal(Q.dense(), [[-1.0, 1.0]])

    def test_dense_p2_l2_block_structure(self):
        Q = build_decode_operator(2, 2)
        D = Q.dense()
        assert D.shape == (4, 6)
        V = build_simplex_vertices(2).V
        np.testing.assert_array_equal(D[:2, :3], V)
        np.testing.assert_array_equal(D[2:, 3:], V)
        np.testing.assert_array_equal(D[:2, 3:], 0.0)
        np.testing.assert_array_equal(D[2:, :3], 0.0)

    @pytest.mark.parametrize("p,l", [(1, 1), (2, 3), (3, 2), (7, 4), (16, 2)])
    def test_row_orthogonality(self, p, l):
        D = build_decode_operator(p, l).dense()
        np.testing.assert_allclose(D @ D.T, (1.0 + 1.0 / p) * np.eye(l * p),
                                   atol=1e-12)
        np.testing.assert_allclose(D @ np.ones(l * (p + 1)), 0.0, atol=1e-12)

    @pytest.mark.parametrize("p,l", [(1, 5), (3, 4), (6, 2)])
    def test_apply_and_matmul_match_dense(self, p, l):
        rng = np.random.default_rng(p * 10 + l)
        Q = build_decode_operator(p, l)
        D = np.kron(np.eye(l), build_simplex_vertices(p).V)
        y = rng.standard_normal(l * (p + 1))
        np.testing.assert_allclose(Q.apply(y), D @ y, atol=1e-12)
        A = rng.standard_normal((l * (p + 1), 7))
        np.testing.assert_allclose(Q.matmul(A), D @ A, atol=1e-12)

    def test_dimension_errors(self):
        Q = build_decode_operator(2, 2)
        with pytest.raises(ValueError):
            Q.apply(np.zeros(5))
        with pytest.raises(ValueError):
            Q.matmul(np.zeros((5, 3)))
        with pytest.raises(ValueError):
            build_decode_operator(2, 0)


class TestDecodeMeasurement:

    def test_all_ones_decodes_to_zero(self):
        Q = build_decode_operator(3, 4)
        np.testing.assert_allclose(
            decode_measurement(Q, np.ones(Q.in_size)), 0.0, atol=1e-12)

    def test_p1_example(self):
        Q = build_decode_operator(1, 1)
        np.testing.assert_allclose(
            decode_measurement(Q, np.array([0.3, 0.5])), [0.2], atol=1e-15)

    @pytest.mark.parametrize("p,l", [(1, 3), (2, 4), (5, 2)])
    def test_global_bias_invariance(self, p, l):
        rng = np.random.default_rng(42)
        Q = build_decode_operator(p, l)
        y = rng.standard_normal(Q.in_size)
        base = decode_measurement(Q, y)
        for b in (1.0, -3.7, 1e6):
            np.testing.assert_allclose(decode_measurement(Q, y + b), base,
                                       atol=1e-10 * max(1.0, abs(b)))

    def test_per_bundle_bias_invariance(self):
        rng = np.random.default_rng(5)
        Q = build_decode_operator(3, 5)
        y = rng.standard_normal(Q.in_size)
        bias = np.repeat(rng.uniform(-2.0, 2.0, Q.l), Q.p + 1)
        np.testing.assert_allclose(decode_measurement(Q, y + bias),
                                   decode_measurement(Q, y), atol=1e-12)

    def test_roundtrip_through_encode(self):
        rng = np.random.default_rng(9)
        M = rng.uniform(-1.0, 1.0, (8, 30))
        x = rng.uniform(0.0, 1.0, 30)
        enc = encode_matrix(M, 4)
        Q = build_decode_operator(4, enc.l)
        yprime = enc.Mprime @ x
        np.testing.assert_allclose(decode_measurement(Q, yprime) * enc.scale,
                                   M @ x, atol=1e-10)

    def test_whitening_covariance(self):
        # Decoding i.i.d. unit-variance noise must give white noise with
        # variance 1 + 1/p.
        p, l, trials = 4, 3, 100_000
        Q = build_decode_operator(p, l)
        rng = np.random.default_rng(123)
        noise = rng.standard_normal((trials, Q.in_size))
        decoded = noise @ Q.dense().T
        cov = np.cov(decoded, rowvar=False)
        np.testing.assert_allclose(np.diag(cov), 1.0 + 1.0 / p, rtol=0.05)
        off = cov[~np.eye(Q.out_size, dtype=bool)]
        assert np.abs(off).max() < 0.05


class TestComplementaryCombine:

    def test_equal_inputs_cancel(self):
        y = np.arange(5.0)
        np.testing.assert_array_equal(complementary_combine(y, y), 0.0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            complementary_combine(np.zeros(3), np.zeros(4))

    def test_common_bias_cancels(self):
        rng = np.random.default_rng(1)
        yA = rng.standard_normal(12)
        yB = rng.standard_normal(12)
        base = complementary_combine(yA, yB)
        np.testing.assert_allclose(
            complementary_combine(yA + 2.5, yB + 2.5), base, atol=1e-12)

    def test_complementary_pair_doubles_signal(self):
        # Detector B sees 1 - M'; subtracting and decoding doubles the
        # signed measurement because the all-ones part is annihilated.
        rng = np.random.default_rng(77)
        M = rng.uniform(-1.0, 1.0, (6, 20))
        x = rng.uniform(0.0, 1.0, 20)
        enc = encode_matrix(M, 3)
        Q = build_decode_operator(3, enc.l)
        yA = enc.Mprime @ x
        yB = (1.0 - enc.Mprime) @ x
        combined = complementary_combine(yA, yB)
        np.testing.assert_allclose(decode_measurement(Q, combined) * enc.scale,
                                   2.0 * M @ x, atol=1e-9)
