import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tlgcn.tensor_core import (
    DimensionMismatch,
    InvalidArgument,
    SingularMatrixError,
    SparseSnapshots,
    TransformMatrix,
    dump_tensor,
    facewise_product,
    facewise_product_sparse,
    identity_transform,
    load_tensor_dump,
    m_product,
    m_transform,
    m_transform_sparse,
    make_m1,
    make_m2,
)

from oracles import facewise_loops, m_transform_loops


def random_sparse(rng, n, t_slots, p=0.3):
    a = rng.normal(size=(n, n, t_slots)) * (rng.random((n, n, t_slots)) < p)
    return a, SparseSnapshots.from_dense(a)


class TestTransformMatrices:
    def test_m1_t3_b2(self):
        np.testing.assert_array_equal(make_m1(3, 2).entries,
                                      [[1, 0, 0], [0.5, 0.5, 0], [0, 0.5, 0.5]])

    def test_m1_single(self):
        np.testing.assert_array_equal(make_m1(1, 1).entries, [[1.0]])

    def test_m1_full_band_last_row(self):
        np.testing.assert_array_equal(make_m1(4, 4).entries[3], [0.25] * 4)

    def test_m2_t3_b2(self):
        np.testing.assert_array_equal(make_m2(3, 2).entries,
                                      [[1, 0, 0], [0.5, 1, 0], [0, 0.5, 1]])

    def test_m2_single(self):
        np.testing.assert_array_equal(make_m2(1, 1).entries, [[1.0]])

    def test_m2_band_one_is_identity(self):
        np.testing.assert_array_equal(make_m2(3, 1).entries, np.eye(3))

    @pytest.mark.parametrize("maker", [make_m1, make_m2])
    @pytest.mark.parametrize("t_slots,b", [(0, 1), (3, 0), (-1, 2)])
    def test_invalid_sizes(self, maker, t_slots, b):
        with pytest.raises(InvalidArgument):
            maker(t_slots, b)

    @pytest.mark.parametrize("maker", [make_m1, make_m2])
    def test_band_structure(self, maker):
        for t_slots in range(1, 12):
            for b in range(1, t_slots + 3):
                m = maker(t_slots, b).entries
                for t in range(t_slots):
                    for k in range(t_slots):
                        inside = t - b < k <= t
                        assert (m[t, k] != 0) == inside

    def test_m2_entries_and_unit_diagonal(self):
        m = make_m2(7, 4).entries
        np.testing.assert_array_equal(np.diag(m), np.ones(7))
        for t in range(7):
            for k in range(max(0, t - 3), t + 1):
                assert m[t, k] == 1.0 / (t - k + 1)

    def test_m2_rows_not_normalised(self):
        assert make_m2(3, 2).row_sums()[1] == 1.5

    def test_immutable(self):
        m = make_m1(3, 2)
        with pytest.raises(ValueError):
            m.entries[0, 0] = 5.0


class TestMTransform:
    def test_m1_tube(self):
        x = np.array([1.0, 2.0, 3.0]).reshape(1, 1, 3)
        np.testing.assert_allclose(m_transform(x, make_m1(3, 2)).ravel(), [1, 1.5, 2.5])

    def test_m2_tube(self):
        x = np.array([1.0, 2.0, 3.0]).reshape(1, 1, 3)
        np.testing.assert_allclose(m_transform(x, make_m2(3, 2)).ravel(), [1, 2.5, 4])

    def test_identity(self):
        x = np.random.default_rng(0).normal(size=(3, 4, 5))
        np.testing.assert_array_equal(m_transform(x, identity_transform(5)), x)

    def test_matches_loop_oracle_dense_matrix(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(3, 2, 6))
        m = rng.normal(size=(6, 6))
        np.testing.assert_allclose(m_transform(x, m), m_transform_loops(x, m), atol=1e-12)

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            m_transform(np.zeros((2, 2, 3)), make_m1(4, 2))

    def test_causality_bit_identical(self):
        rng = np.random.default_rng(2)
        m = make_m2(6, 3)
        x = rng.normal(size=(4, 3, 6))
        base = m_transform(x, m)
        for tp in range(6):
            y = x.copy()
            y[:, :, tp] += rng.normal(size=(4, 3)) * 10
            out = m_transform(y, m)
            assert np.array_equal(out[:, :, :tp], base[:, :, :tp])

    def test_m1_preserves_constant_tube(self):
        x = np.full((2, 3, 9), 4.25)
        np.testing.assert_allclose(m_transform(x, make_m1(9, 4)), x, rtol=0, atol=1e-15)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000), st.floats(-3, 3), st.floats(-3, 3))
    def test_linearity(self, seed, a, b):
        rng = np.random.default_rng(seed)
        x, y = rng.normal(size=(2, 3, 5)), rng.normal(size=(2, 3, 5))
        m = make_m2(5, 3)
        lhs = m_transform(a * x + b * y, m)
        rhs = a * m_transform(x, m) + b * m_transform(y, m)
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12)


class TestSparse:
    def test_from_dense_roundtrip(self):
        a, s = random_sparse(np.random.default_rng(0), 5, 3)
        np.testing.assert_array_equal(s.to_dense(), a)
        assert s.t_slots == 3 and s.n == 5

    def test_slice_shape_checked(self):
        with pytest.raises(DimensionMismatch):
            SparseSnapshots([np.zeros((2, 2)), np.zeros((3, 3))])

    def test_transform_identity_single_slot(self):
        a, s = random_sparse(np.random.default_rng(0), 4, 1)
        out = m_transform_sparse(s, np.eye(1))
        np.testing.assert_array_equal(out.to_dense(), a)

    def test_transform_two_slots(self):
        s = SparseSnapshots.from_triplets(3, 2, [0, 1], [0, 1], [1, 2])
        out = m_transform_sparse(s, make_m1(2, 2)).slices[1].toarray()
        expected = np.zeros((3, 3))
        expected[0, 1] = expected[1, 2] = 0.5
        np.testing.assert_array_equal(out, expected)

    def test_transform_matches_dense(self):
        rng = np.random.default_rng(3)
        a, s = random_sparse(rng, 5, 4)
        m = make_m2(4, 3)
        diff = np.abs(m_transform_sparse(s, m).to_dense() - m_transform(a, m)).max()
        assert diff < 1e-12

    def test_transform_mismatch(self):
        _, s = random_sparse(np.random.default_rng(0), 3, 2)
        with pytest.raises(DimensionMismatch):
            m_transform_sparse(s, make_m1(3, 1))

    def test_facewise_sparse_identity(self):
        h = np.random.default_rng(0).normal(size=(4, 3, 2))
        eye = SparseSnapshots([np.eye(4), np.eye(4)])
        np.testing.assert_array_equal(facewise_product_sparse(eye, h), h)

    def test_facewise_sparse_swap(self):
        a = SparseSnapshots([np.array([[0.0, 1.0], [1.0, 0.0]])])
        h = np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(2, 2, 1)
        np.testing.assert_array_equal(facewise_product_sparse(a, h)[:, :, 0], [[3, 4], [1, 2]])

    def test_facewise_sparse_matches_dense(self):
        rng = np.random.default_rng(4)
        a, s = random_sparse(rng, 6, 3)
        h = rng.normal(size=(6, 4, 3))
        diff = np.abs(facewise_product_sparse(s, h) - facewise_loops(a, h)).max()
        assert diff < 1e-12

    def test_facewise_sparse_mismatch(self):
        _, s = random_sparse(np.random.default_rng(0), 3, 2)
        with pytest.raises(DimensionMismatch):
            facewise_product_sparse(s, np.zeros((4, 2, 2)))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 8), st.integers(1, 6), st.integers(0, 10_000))
    def test_sparse_dense_agreement(self, n, t_slots, seed):
        rng = np.random.default_rng(seed)
        a, s = random_sparse(rng, n, t_slots)
        m = make_m1(t_slots, int(rng.integers(1, t_slots + 1)))
        h = rng.normal(size=(n, 3, t_slots))
        assert np.abs(m_transform_sparse(s, m).to_dense() - m_transform(a, m)).max() <= 1e-12
        assert np.abs(facewise_product_sparse(s, h) - facewise_product(a, h)).max() <= 1e-12

    def test_transpose(self):
        a, s = random_sparse(np.random.default_rng(5), 4, 3)
        np.testing.assert_array_equal(s.transpose().to_dense(), a.transpose(1, 0, 2))


class TestFacewise:
    def test_small(self):
        x = np.array([[1.0, 2.0]]).reshape(1, 2, 1)
        y = np.array([[3.0], [4.0]]).reshape(2, 1, 1)
        assert facewise_product(x, y)[0, 0, 0] == 11.0

    def test_identity(self):
        x = np.random.default_rng(0).normal(size=(3, 4, 2))
        eye = np.repeat(np.eye(4)[:, :, None], 2, axis=2)
        np.testing.assert_array_equal(facewise_product(x, eye), x)

    def test_matches_naive(self):
        rng = np.random.default_rng(6)
        x, y = rng.normal(size=(3, 4, 2)), rng.normal(size=(4, 2, 2))
        assert np.abs(facewise_product(x, y) - facewise_loops(x, y)).max() < 1e-12

    @pytest.mark.parametrize("shape_y", [(3, 2, 2), (4, 2, 3)])
    def test_mismatch(self, shape_y):
        with pytest.raises(DimensionMismatch):
            facewise_product(np.zeros((3, 4, 2)), np.zeros(shape_y))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_associative(self, seed):
        rng = np.random.default_rng(seed)
        x, y, z = rng.normal(size=(2, 3, 4)), rng.normal(size=(3, 5, 4)), rng.normal(size=(5, 2, 4))
        lhs = facewise_product(facewise_product(x, y), z)
        rhs = facewise_product(x, facewise_product(y, z))
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-10)


class TestMProduct:
    def test_identity_equals_facewise_exactly(self):
        rng = np.random.default_rng(7)
        x, y = rng.normal(size=(3, 4, 5)), rng.normal(size=(4, 2, 5))
        assert np.array_equal(m_product(x, y, np.eye(5)), facewise_product(x, y))

    def test_single_slot(self):
        rng = np.random.default_rng(8)
        x, y = rng.normal(size=(2, 3, 1)), rng.normal(size=(3, 2, 1))
        np.testing.assert_allclose(m_product(x, y, [[1.0]])[:, :, 0], x[:, :, 0] @ y[:, :, 0])

    def test_defining_identity(self):
        rng = np.random.default_rng(9)
        m = make_m2(3, 3)
        x, y = rng.normal(size=(2, 2, 3)), rng.normal(size=(2, 2, 3))
        lhs = m_transform(m_product(x, y, m), m)
        rhs = facewise_product(m_transform(x, m), m_transform(y, m))
        assert np.abs(lhs - rhs).max() < 1e-10

    def test_general_invertible(self):
        rng = np.random.default_rng(10)
        m = rng.normal(size=(4, 4)) + 4 * np.eye(4)
        x, y = rng.normal(size=(2, 3, 4)), rng.normal(size=(3, 2, 4))
        lhs = m_transform(m_product(x, y, m), m)
        rhs = facewise_product(m_transform(x, m), m_transform(y, m))
        assert np.abs(lhs - rhs).max() < 1e-10

    def test_singular(self):
        m = np.tril(np.ones((3, 3)))
        m[1, 1] = 0.0
        with pytest.raises(SingularMatrixError):
            m_product(np.ones((1, 1, 3)), np.ones((1, 1, 3)), m)

    def test_singular_full(self):
        with pytest.raises(SingularMatrixError):
            m_product(np.ones((1, 1, 2)), np.ones((1, 1, 2)), np.ones((2, 2)))

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            m_product(np.ones((1, 2, 3)), np.ones((3, 1, 3)), np.eye(3))


def test_dump_roundtrip(tmp_path):
    x = np.random.default_rng(11).normal(size=(2, 3, 4)) / 3.0
    path = tmp_path / "x.txt"
    dump_tensor(x, path)
    assert len(path.read_text().splitlines()) == x.size
    assert np.array_equal(load_tensor_dump(path, x.shape), x)


def test_transform_matrix_requires_square():
    with pytest.raises(DimensionMismatch):
        TransformMatrix(np.zeros((2, 3)))
