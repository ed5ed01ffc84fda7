import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ucnorm.errors import ArityError, DimensionError
from ucnorm.opspace import (
    Base,
    CcStatus,
    Kind,
    OperatorSpaceSpec,
    closed_form_bound,
    dual_vector_norm,
    duality_falsifier,
    is_cc,
    joint_spectrum,
    kv_block_matrix,
    kv_check_details,
    kv_structural_check,
    kv_tuple,
    linf_contractive_bound,
    sample_cc_tuple,
    vector_norm,
)
from ucnorm.tensor_core import commutes, op_norm, pair_tuples, random_unitary

SPECS = [
    OperatorSpaceSpec.min("l1", 3),
    OperatorSpaceSpec.min("l2", 3),
    OperatorSpaceSpec.min("linf", 3),
    OperatorSpaceSpec.max("l1", 3),
    OperatorSpaceSpec.max("l2", 3),
    OperatorSpaceSpec.max("linf", 3),
    OperatorSpaceSpec.row(3),
    OperatorSpaceSpec.column(3),
]


class TestSpec:
    def test_dual_is_involution(self):
        for spec in SPECS:
            assert spec.dual().dual() == spec

    def test_known_duals(self):
        assert OperatorSpaceSpec.min("l1", 2).dual() == OperatorSpaceSpec.max("linf", 2)
        assert OperatorSpaceSpec.row(2).dual() == OperatorSpaceSpec.column(2)

    def test_parse_and_label_round_trip(self):
        for spec in SPECS:
            assert OperatorSpaceSpec.parse(spec.label, spec.n) == spec
        with pytest.raises(ValueError):
            OperatorSpaceSpec.parse("mid-l3", 2)

    def test_concrete_generator_count(self):
        with pytest.raises(ArityError):
            OperatorSpaceSpec(Kind.CONCRETE, 3, generators=np.zeros((2, 2, 2)))


class TestVectorNorm:
    def test_examples(self):
        assert vector_norm(OperatorSpaceSpec.max("l1", 3), [1, 1, 1]) == pytest.approx(3)
        assert vector_norm(OperatorSpaceSpec.row(2), [0.6, 0.8]) == pytest.approx(1)
        gens = np.zeros((2, 2, 2))
        gens[0, 0, 0] = gens[1, 1, 1] = 1
        spec = OperatorSpaceSpec.concrete(gens)
        assert vector_norm(spec, [0.3, -2j]) == pytest.approx(2)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            vector_norm(OperatorSpaceSpec.row(2), [1, 2, 3])

    def test_dual_norm(self):
        assert dual_vector_norm(OperatorSpaceSpec.max("l1", 2), [0.5, -0.9]) == pytest.approx(0.9)
        assert dual_vector_norm(OperatorSpaceSpec.min("linf", 2), [0.5, -0.9]) == pytest.approx(1.4)


class TestClosedForms:
    def test_max_l1_unitaries_verified(self):
        rng = np.random.default_rng(0)
        t = np.array([random_unitary(3, rng) for _ in range(3)])
        assert is_cc(OperatorSpaceSpec.max("l1", 3), t).status is CcStatus.VERIFIED

    def test_max_l1_matches_max_norm(self):
        rng = np.random.default_rng(1)
        spec = OperatorSpaceSpec.max("l1", 2)
        for _ in range(20):
            t = rng.standard_normal((2, 2, 2)) * 0.6
            verified = is_cc(spec, t).status is CcStatus.VERIFIED
            assert verified == (max(op_norm(x) for x in t) <= 1 + 1e-9)

    def test_two_identities_fail_row_and_column(self):
        t = np.array([np.eye(2), np.eye(2)])
        for spec in (OperatorSpaceSpec.row(2), OperatorSpaceSpec.column(2)):
            v = is_cc(spec, t)
            assert v.status is CcStatus.FALSIFIED
            assert op_norm(pair_tuples(t, v.witness)) > 1

    def test_row_identity_map_is_cc(self):
        # e_1j -> e_1j: sum T*T = I, sum TT* = n e_11
        n = 3
        t = np.zeros((n, n, n))
        t[np.arange(n), 0, np.arange(n)] = 1
        assert is_cc(OperatorSpaceSpec.row(n), t).verified
        assert is_cc(OperatorSpaceSpec.column(n), t).status is CcStatus.FALSIFIED

    def test_row_vs_column_adjoint(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            t = 0.5 * (rng.standard_normal((2, 3, 3)) + 1j * rng.standard_normal((2, 3, 3)))
            row = is_cc(OperatorSpaceSpec.row(2), t).verified
            col = is_cc(OperatorSpaceSpec.column(2), t.conj().transpose(0, 2, 1)).verified
            assert row == col

    def test_closed_form_none_for_non_normal_min(self):
        t = np.zeros((2, 2, 2))
        t[0, 0, 1] = 0.5
        assert closed_form_bound(OperatorSpaceSpec.min("l2", 2), t) is None

    def test_joint_spectrum_of_diagonal(self):
        t = np.array([np.diag([1, 2j]), np.diag([3, 4])])
        spec = joint_spectrum(t)
        assert spec is not None
        assert sorted(map(tuple, np.round(spec, 12).tolist()), key=str) == sorted(
            [(1, 3), (2j, 4)], key=str
        )


class TestSampling:
    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.label)
    def test_samples_are_cc(self, spec):
        for i in range(20):
            rng = np.random.default_rng([7, i])
            t = sample_cc_tuple(spec, 1 + i % 3, rng)
            assert is_cc(spec, t, effort=50).status is not CcStatus.FALSIFIED

    def test_falsifier_zero_tuple(self):
        v = duality_falsifier(OperatorSpaceSpec.row(2), np.zeros((2, 2, 2)), budget=50)
        assert v.status is CcStatus.UNKNOWN
        assert v.bound == 0

    def test_falsifier_single_slot(self):
        s = np.array([2 * np.eye(2), np.zeros((2, 2))])
        v = duality_falsifier(OperatorSpaceSpec.max("l1", 2), s, budget=50)
        assert v.status is CcStatus.FALSIFIED
        assert op_norm(pair_tuples(s, v.witness)) > 1

    def test_falsifier_commuting_contractions_against_row(self):
        s = np.array([np.diag([0.6, 0.0]), np.diag([0.0, 0.8])])
        v = duality_falsifier(OperatorSpaceSpec.row(2), s, budget=200)
        assert v.status is CcStatus.UNKNOWN
        assert v.bound <= 1

    def test_falsifier_bound_monotone_in_budget(self):
        rng = np.random.default_rng(3)
        s = 0.4 * rng.standard_normal((3, 2, 2))
        spec = OperatorSpaceSpec.max("linf", 3)
        bounds = [duality_falsifier(spec, s, budget=b).bound for b in (10, 40, 160)]
        assert bounds == sorted(bounds)

    def test_min_l2_falsified(self):
        t = np.array([np.eye(2), np.eye(2)])
        v = is_cc(OperatorSpaceSpec.min("l2", 2), t, effort=200)
        assert v.status is CcStatus.FALSIFIED


class TestKV:
    def test_tuple_structure(self):
        t = kv_tuple()
        assert commutes(t, 1e-14)
        assert max(op_norm(x) for x in t) <= 1 + 1e-12
        vals = np.unique(np.round(t.real, 14))
        assert set(vals.tolist()) <= {0.0, 1.0, round(1 / math.sqrt(3), 14), -round(1 / math.sqrt(3), 14)}

    def test_kv_verified_for_min_l1(self):
        assert is_cc(OperatorSpaceSpec.min("l1", 3), kv_tuple()).verified

    def test_block_matrix_matches_pairing(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((3, 2, 2))
        assert np.allclose(kv_block_matrix(a), pair_tuples(kv_tuple(), a))

    def test_equal_thirds(self):
        a = np.array([np.eye(2) / 3] * 3)
        d = kv_check_details(a)
        assert d.hypotheses_hold and d.passed
        assert d.pairing_norm <= 1

    def test_scalar_first_slot(self):
        a = np.array([[[1.0]], [[0.0]], [[0.0]]])
        assert op_norm(pair_tuples(a, kv_tuple())) == pytest.approx(1.0)
        assert kv_structural_check(a)

    def test_arity(self):
        with pytest.raises(ArityError):
            kv_structural_check(np.zeros((2, 1, 1)))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 4), st.integers(0, 2**32 - 1))
    def test_diagonal_l1_rows(self, m, seed):
        rng = np.random.default_rng(seed)
        rows = rng.dirichlet(np.ones(3), size=m) * np.exp(2j * np.pi * rng.random((m, 3)))
        a = np.array([np.diag(rows[:, j]) for j in range(3)])
        d = kv_check_details(a)
        assert d.passed
        assert d.pairing_norm <= 1 + 1e-10

    def test_linf_bound_is_upper_bound(self):
        a = np.array([np.eye(1) * 0.5, np.eye(1) * 0.25, np.eye(1) * 0.25])
        assert linf_contractive_bound(a) >= 1.0 - 1e-12
        assert linf_contractive_bound(a, grid=256) < 1.02


def test_spec_hash_consistent_with_eq():
    a, b = OperatorSpaceSpec.max("l1", 2), OperatorSpaceSpec.parse("max-l1", 2)
    assert a == b and hash(a) == hash(b)
    assert a != OperatorSpaceSpec.max(Base.L2, 2)
