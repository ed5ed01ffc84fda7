import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ucnorm.errors import ArityError, CommutativityError, DimensionError, UnsupportedError
from ucnorm.opspace import Base, OperatorSpaceSpec, is_cc, kv_tuple
from ucnorm.polyeval import (
    MatrixPolynomial,
    SamplingPlan,
    boundary_points,
    da_multiplier_lb,
    da_shift_tuple,
    eval_point,
    eval_points,
    eval_tuple,
    kv_polynomial,
    monomials,
    sup_norm_lb,
    twozw_polynomial,
    uc_norm_lb,
)
from ucnorm.tensor_core import commutator_residual, op_norm

Z1 = MatrixPolynomial.scalar({(1, 0): 1}, 2)


def commuting_tuple(rng, n=2, d=3):
    """Polynomials in one upper triangular matrix."""
    base = np.triu(rng.standard_normal((d, d)))
    out = []
    for _ in range(n):
        c = rng.standard_normal(3)
        out.append(c[0] * np.eye(d) + c[1] * base + c[2] * base @ base)
    return np.array(out)


class TestPolynomial:
    def test_grlex_order(self):
        assert monomials(2, 2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
        p = MatrixPolynomial.scalar({(0, 2): 1, (1, 0): 1, (2, 0): 1}, 2)
        assert list(p.terms) == [(1, 0), (2, 0), (0, 2)]

    def test_degree_and_size(self):
        p = MatrixPolynomial(2, {(1, 2): np.eye(3)})
        assert p.degree == 3 and p.coeff_size == 3

    def test_mixed_shapes_rejected(self):
        with pytest.raises(DimensionError):
            MatrixPolynomial(1, {(0,): np.eye(2), (1,): np.eye(3)})
        with pytest.raises(DimensionError):
            MatrixPolynomial(2, {(1,): 1})

    def test_product(self):
        p = MatrixPolynomial.scalar({(1, 0): 1, (0, 1): 1}, 2)
        q = p * p
        assert q.scalar_coeffs() == {(2, 0): 1, (1, 1): 2, (0, 2): 1}


class TestEvalPoint:
    def test_examples(self):
        s = 1 / math.sqrt(2)
        assert eval_point(twozw_polynomial(), [s, s])[0, 0] == pytest.approx(1)
        assert eval_point(kv_polynomial(), [1, 1, 1])[0, 0] == pytest.approx(-3)
        p = MatrixPolynomial(2, {(0, 0): [[1, 2], [3, 4]], (1, 1): np.eye(2)})
        assert np.array_equal(eval_point(p, [0, 0]), [[1, 2], [3, 4]])

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            eval_point(Z1, [1, 2, 3])

    def test_vectorized_matches(self):
        rng = np.random.default_rng(0)
        zs = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
        vals = eval_points(kv_polynomial(), zs)
        for z, v in zip(zs, vals):
            assert np.allclose(v, eval_point(kv_polynomial(), z))


class TestEvalTuple:
    def test_coordinate(self):
        rng = np.random.default_rng(1)
        t = commuting_tuple(rng)
        assert np.allclose(eval_tuple(Z1, t), t[0])
        p = MatrixPolynomial(2, {(1, 0): np.eye(2)})
        assert np.allclose(eval_tuple(p, t), np.kron(np.eye(2), t[0]))

    def test_constant(self):
        t = commuting_tuple(np.random.default_rng(2))
        c = MatrixPolynomial.constant(2.5, 2)
        assert np.allclose(eval_tuple(c, t), 2.5 * np.eye(3))

    def test_errors(self):
        t = np.zeros((2, 2, 2))
        t[0, 0, 1] = t[1, 1, 0] = 1
        with pytest.raises(CommutativityError):
            eval_tuple(Z1, t)
        with pytest.raises(ArityError):
            eval_tuple(Z1, np.zeros((3, 2, 2)))

    def test_kv_value(self):
        # p(T) = -3 sqrt(3) e_5 e_1^T, computed from T_i T_j = <v_i, e_{j+1}> e_5 e_1^T
        val = eval_tuple(kv_polynomial(), kv_tuple())
        want = np.zeros((5, 5))
        want[4, 0] = -3 * math.sqrt(3)
        assert np.allclose(val, want, atol=1e-14)

    def test_joint_diagonal_is_pointwise(self):
        zs = np.array([[0.1, 0.5j], [-0.3, 0.2]])
        t = np.array([np.diag(zs[:, 0]), np.diag(zs[:, 1])])
        val = eval_tuple(twozw_polynomial(), t)
        assert np.allclose(np.diag(val), [eval_point(twozw_polynomial(), z)[0, 0] for z in zs])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_multiplicative(self, seed):
        rng = np.random.default_rng(seed)
        t = commuting_tuple(rng) * 0.5
        p = MatrixPolynomial.scalar({(1, 0): rng.standard_normal(), (0, 2): 1j}, 2)
        q = MatrixPolynomial.scalar({(0, 0): 1, (1, 1): rng.standard_normal()}, 2)
        lhs = eval_tuple(p * q, t)
        rhs = eval_tuple(p, t) @ eval_tuple(q, t)
        assert np.allclose(lhs, rhs, atol=1e-10)


class TestSupNorm:
    def test_coordinate_on_polydisk(self):
        assert sup_norm_lb(Z1, Base.LINF, SamplingPlan(points=256)) == pytest.approx(1)

    def test_twozw_on_ball(self):
        val = sup_norm_lb(twozw_polynomial(), Base.L2, SamplingPlan(points=20000))
        assert 0.99 < val <= 1 + 1e-12

    def test_constant(self):
        c = MatrixPolynomial.constant(-0.75j, 2)
        assert sup_norm_lb(c, Base.L2) == pytest.approx(0.75)

    def test_monotone_in_plan(self):
        p = kv_polynomial()
        vals = [sup_norm_lb(p, Base.LINF, SamplingPlan(points=k, seed=3)) for k in (100, 400, 1600)]
        assert vals == sorted(vals)

    def test_boundary_points_on_sphere(self):
        for base in Base:
            pts = boundary_points(base, 3, 50, seed=1)
            norms = [np.linalg.norm(p, {Base.L1: 1, Base.L2: 2, Base.LINF: np.inf}[base]) for p in pts]
            assert np.allclose(norms, 1)

    def test_kv_grid_value(self):
        # maximum |p| = 5 at (1, 1, -1) and permutations, which lie on the grid
        assert sup_norm_lb(kv_polynomial(), Base.LINF, SamplingPlan(grid=12)) == pytest.approx(5.0, abs=1e-12)


class TestDruryArveson:
    def test_shift_is_commuting_row_contraction(self):
        t = da_shift_tuple(2, 4)
        assert commutator_residual(t) < 1e-14
        assert op_norm(np.eye(t.shape[1]) - sum(x @ x.conj().T for x in t)) <= 1
        assert is_cc(OperatorSpaceSpec.column(2), t).verified

    def test_oracle_examples(self):
        assert da_multiplier_lb(MatrixPolynomial.constant(1, 2), 3) == pytest.approx(1)
        vals = [da_multiplier_lb(Z1, d) for d in range(1, 6)]
        assert all(v <= 1 + 1e-12 for v in vals)
        assert vals[-1] == pytest.approx(1)

    def test_twozw_value(self):
        # M_p sends 1 to 2 z1 z2, whose norm is 2 sqrt(1!1!/2!) = sqrt(2)
        assert da_multiplier_lb(twozw_polynomial(), 1) == 0
        assert da_multiplier_lb(twozw_polynomial(), 8) == pytest.approx(math.sqrt(2), abs=1e-12)

    def test_monotone(self):
        p = MatrixPolynomial.scalar({(1, 0): 0.5, (1, 1): 1, (0, 3): -0.7j}, 2)
        vals = [da_multiplier_lb(p, d) for d in range(7)]
        assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_matrix_coefficients_unsupported(self):
        with pytest.raises(UnsupportedError):
            da_multiplier_lb(MatrixPolynomial(2, {(1, 0): np.eye(2)}), 2)


class TestUCNorm:
    def test_linear_max_l1_is_l1_norm(self):
        a = [1, -2j, 0.5]
        b = uc_norm_lb(MatrixPolynomial.linear(a), OperatorSpaceSpec.max("l1", 3), budget=50)
        assert b.value == pytest.approx(3.5, abs=1e-6)

    def test_twozw_column_exceeds_one(self):
        b = uc_norm_lb(twozw_polynomial(), OperatorSpaceSpec.column(2), budget=50)
        assert b.value > 1.4
        assert is_cc(OperatorSpaceSpec.column(2), b.witness).verified

    def test_constant_only(self):
        c = MatrixPolynomial.constant(0.3, 2)
        assert uc_norm_lb(c, OperatorSpaceSpec.row(2), budget=10).value == pytest.approx(0.3)

    def test_dominates_sup_norm(self):
        p = MatrixPolynomial.scalar({(1, 0): 1, (0, 1): 1j, (1, 1): 0.5}, 2)
        plan = SamplingPlan(points=500, seed=2)
        sup = sup_norm_lb(p, Base.LINF, plan)
        uc = uc_norm_lb(p, OperatorSpaceSpec.max("l1", 2), budget=20, plan=plan, refine=False)
        assert uc.value >= sup

    def test_von_neumann_single_variable(self):
        p = MatrixPolynomial.scalar({(0,): 0.2, (1,): 1, (3,): -0.5j}, 1)
        sup = sup_norm_lb(p, Base.LINF, SamplingPlan(grid=4096))
        uc = uc_norm_lb(p, OperatorSpaceSpec.max("l1", 1), budget=200)
        assert uc.value <= sup + 1e-6

    def test_witness_reproduces_value(self):
        b = uc_norm_lb(kv_polynomial(), OperatorSpaceSpec.max("l1", 3), budget=20)
        assert op_norm(eval_tuple(kv_polynomial(), b.witness)) == pytest.approx(b.value)
        assert b.value == pytest.approx(3 * math.sqrt(3))
