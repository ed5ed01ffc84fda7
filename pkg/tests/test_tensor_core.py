import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ucnorm.errors import ArityError, DimensionError, InfeasibleError, PositivityError
from ucnorm.tensor_core import (
    IsometryData,
    as_tuple,
    commutator_residual,
    complete_basis,
    extend_isometry,
    gram_factor,
    is_psd,
    kron,
    op_norm,
    pair_tuples,
    random_unitary,
)


def _rand(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestBasics:
    def test_kron_index_convention(self):
        a = np.array([[1, 2], [3, 4]])
        b = np.array([[0, 1], [1, 0]])
        k = kron(a, b)
        assert k[2 + 1, 0 + 0] == a[1, 0] * b[1, 0]
        assert k[0 + 0, 2 + 1] == a[0, 1] * b[0, 1]

    def test_op_norm_is_largest_singular_value(self):
        rng = np.random.default_rng(0)
        a = _rand(rng, 4, 3)
        assert op_norm(a) == pytest.approx(np.linalg.svd(a, compute_uv=False)[0])
        assert op_norm(np.zeros((0, 0))) == 0.0

    def test_as_tuple_rejects_rectangular_and_ragged(self):
        with pytest.raises(DimensionError):
            as_tuple(np.zeros((2, 2, 3)))
        with pytest.raises(DimensionError):
            as_tuple([np.eye(2), np.eye(3)])
        with pytest.raises(DimensionError):
            as_tuple([np.array([[np.nan]])])

    def test_is_psd(self):
        assert is_psd(np.diag([1.0, 0.0]))
        assert not is_psd(np.diag([1.0, -1e-6]))
        assert is_psd(np.diag([1.0, -1e-6]), tol=1e-5)
        assert not is_psd(np.array([[1, 1], [0, 1]]))
        with pytest.raises(DimensionError):
            is_psd(np.ones((2, 3)))


class TestGramFactor:
    def test_reconstructs_low_rank(self):
        rng = np.random.default_rng(1)
        g = _rand(rng, 6, 2)
        p = g @ g.conj().T
        f = gram_factor(p)
        assert f.shape == (6, 2)
        assert op_norm(f @ f.conj().T - p) <= 1e-12 * op_norm(p)

    def test_rejects_indefinite(self):
        with pytest.raises(PositivityError):
            gram_factor(np.diag([1.0, -0.5]))


class TestPairing:
    def test_pair_tuples_matches_sum_of_krons(self):
        rng = np.random.default_rng(2)
        s, t = _rand(rng, 3, 2, 2), _rand(rng, 3, 4, 4)
        want = sum(np.kron(s[j], t[j]) for j in range(3))
        assert np.allclose(pair_tuples(s, t), want)

    def test_arity_mismatch(self):
        with pytest.raises(ArityError):
            pair_tuples(np.zeros((2, 1, 1)), np.zeros((3, 1, 1)))

    def test_commutator_residual(self):
        d = np.array([np.diag([1, 2]), np.diag([3, 4])])
        assert commutator_residual(d) == 0
        assert commutator_residual([[[0, 1], [0, 0]], [[0, 0], [1, 0]]]) == pytest.approx(1.0)


class TestIsometryExtension:
    def test_random_unitary_is_unitary(self):
        u = random_unitary(5, np.random.default_rng(3))
        assert op_norm(u.conj().T @ u - np.eye(5)) < 1e-12

    def test_complete_basis_is_deterministic_and_orthonormal(self):
        rng = np.random.default_rng(4)
        q, _ = np.linalg.qr(_rand(rng, 5, 2))
        c1, c2 = complete_basis(q, 5), complete_basis(q, 5)
        assert np.array_equal(c1, c2)
        full = np.hstack([q, c1])
        assert op_norm(full.conj().T @ full - np.eye(5)) < 1e-12

    def test_extension_maps_domain_to_image(self):
        rng = np.random.default_rng(5)
        u0 = random_unitary(6, rng)
        dom = _rand(rng, 6, 3)
        dom[:, 2] = dom[:, 0] + 2 * dom[:, 1]
        u, d = extend_isometry(IsometryData(dom, u0 @ dom))
        assert d == 6
        assert op_norm(u @ dom - u0 @ dom) < 1e-10
        assert op_norm(u.conj().T @ u - np.eye(6)) < 1e-12

    def test_gram_mismatch_is_infeasible(self):
        with pytest.raises(InfeasibleError):
            extend_isometry(IsometryData(np.eye(2)[:, :1], 2 * np.eye(2)[:, :1]))

    def test_empty_data_gives_identity(self):
        u, _ = extend_isometry(IsometryData(np.zeros((3, 0)), np.zeros((3, 0))))
        assert np.array_equal(u, np.eye(3))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 6), st.integers(0, 2**32 - 1))
    def test_extension_property(self, d, r, seed):
        rng = np.random.default_rng(seed)
        r = min(r, d)
        u0 = random_unitary(d, rng)
        dom = _rand(rng, d, r)
        u, _ = extend_isometry(IsometryData(dom, u0 @ dom))
        assert op_norm(u.conj().T @ u - np.eye(d)) < 1e-10
        assert op_norm(u @ dom - u0 @ dom) < 1e-8 * max(1, op_norm(dom))
