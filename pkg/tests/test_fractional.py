import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mhls.errors import InvalidExponent, LevelMismatch, NotATransform
from mhls.filtration import Chain, Dyadic, Explicit, Random, Uniform, build_tree
from mhls.fractional import (
    Exponents,
    OperatorKind,
    apply_atomic,
    apply_atomic_adjoint,
    apply_infimum,
    apply_predictable,
    apply_to_function,
    endpoint_weak_q,
    pair,
    split_adjoint,
    truncated_transform,
)
from mhls.martingale import (
    MartingaleSequence,
    SimpleFunction,
    atomic_function,
    differences,
    single_step_martingale,
)

SQ2 = math.sqrt(2.0)


def random_martingale(seed, depth=6, level=None):
    tree = build_tree(Random(seed=seed, depth=depth, max_children=3, min_ratio=0.05))
    rng = np.random.default_rng(seed + 10_000)
    level = tree.depth if level is None else level
    return MartingaleSequence.from_terminal(
        SimpleFunction(tree, level, rng.standard_normal(tree.level_size(level)))
    )


class TestExponents:
    def test_valid_triple(self):
        e = Exponents.from_alpha_p(0.5, 4 / 3)
        assert abs(e.q - 4.0) < 1e-12

    def test_from_p_q(self):
        e = Exponents.from_p_q(4 / 3, 4.0)
        assert abs(e.alpha - 0.5) < 1e-12

    def test_rejects_inconsistent(self):
        with pytest.raises(InvalidExponent):
            Exponents(0.5, 4 / 3, 5.0)
        with pytest.raises(InvalidExponent):
            Exponents(1.2, 4 / 3, 4.0)
        with pytest.raises(InvalidExponent):
            Exponents.from_alpha_p(0.5, 3.0)  # p >= 1/alpha leaves no finite q

    def test_endpoint_q(self):
        assert abs(endpoint_weak_q(0.5) - 2.0) < 1e-15
        assert abs(endpoint_weak_q(0.75) - 4.0) < 1e-15


class TestDyadicExamples:
    """Frozen from the one-step oracle: coefficients are exact powers of 2,
    differences are [1,1,-1,-1] and [2,-2,0,0] at the leaves."""

    @pytest.fixture
    def m(self):
        tree = build_tree(Dyadic(2))
        return MartingaleSequence.from_terminal(SimpleFunction(tree, 2, [4, 0, 0, 0]))

    def test_predictable(self, m):
        want = [1 + SQ2, 1 - SQ2, -1.0, -1.0]  # 1*[1,1,-1,-1] + (1/sqrt2)*[2,-2,0,0]
        np.testing.assert_allclose(apply_predictable(m, 0.5).values, want, atol=1e-14)

    def test_atomic(self, m):
        want = [SQ2 / 2 + 1, SQ2 / 2 - 1, -SQ2 / 2, -SQ2 / 2]
        np.testing.assert_allclose(apply_atomic(m, 0.5).values, want, atol=1e-14)

    def test_infimum_equals_atomic_on_uniform(self, m):
        np.testing.assert_allclose(
            apply_infimum(m, 0.5).values, apply_atomic(m, 0.5).values, atol=1e-15
        )

    def test_constant_martingale_maps_to_zero(self):
        tree = build_tree(Dyadic(3))
        m = MartingaleSequence.from_terminal(SimpleFunction(tree, 3, np.full(8, 7.0)))
        for op in (apply_predictable, apply_infimum, apply_atomic):
            assert np.max(np.abs(op(m, 0.3).values)) == 0.0


def test_single_step_atomic_output():
    # one-term sum: weight is the level-1 mass, difference is the jump itself
    for s in (0.5, 0.1, 0.37):
        tree = build_tree(Explicit([s, 1.0 - s]))
        m = single_step_martingale(tree, tree.root, tree.atom(1, 0))
        for a in (0.25, 0.5, 0.9):
            out = apply_atomic(m, a)
            np.testing.assert_allclose(
                out.values, [s ** (a - 1), -((1 - s) ** (a - 1))], rtol=1e-14
            )


def test_single_step_predictable_output():
    s = 0.1
    tree = build_tree(Explicit([s, 1.0 - s]))
    m = single_step_martingale(tree, tree.root, tree.atom(1, 0))
    out = apply_predictable(m, 0.5)  # root mass is 1, so the jump passes through
    np.testing.assert_allclose(out.values, m.terminal.values, rtol=1e-15)


def test_infimum_weight_constant_on_split():
    tree = build_tree(Explicit([0.9, 0.1]))
    m = single_step_martingale(tree, tree.root, tree.atom(1, 1))
    a = 0.6
    out = apply_infimum(m, a)
    np.testing.assert_allclose(out.values, 0.1**a * m.terminal.values, rtol=1e-14)


@pytest.mark.parametrize("m_arity,depth", [(2, 8), (3, 6), (5, 4)])
def test_uniform_proportionality(m_arity, depth):
    tree = build_tree(Uniform(m_arity, depth))
    rng = np.random.default_rng(m_arity * 100 + depth)
    mart = MartingaleSequence.from_terminal(
        SimpleFunction(tree, depth, rng.standard_normal(tree.num_leaves))
    )
    for a in (0.3, 0.5, 0.75):
        factor = float(m_arity) ** a
        i_out = apply_predictable(mart, a).values
        ia_out = apply_atomic(mart, a).values
        it_out = apply_infimum(mart, a).values
        scale = max(1.0, np.max(np.abs(i_out)))
        assert np.max(np.abs(i_out - factor * ia_out)) <= 1e-12 * scale
        assert np.max(np.abs(i_out - factor * it_out)) <= 1e-12 * scale


@given(st.integers(0, 2**32 - 1))
def test_transform_outputs_have_zero_mean(seed):
    m = random_martingale(seed, depth=5)
    for op in (apply_predictable, apply_infimum):
        out = op(m, 0.5)
        assert abs(out.expectation()) <= 1e-12
    adj = apply_atomic_adjoint(m.terminal, 0.5)
    assert abs(adj.expectation()) <= 1e-12


def test_operators_linear_in_input():
    m1 = random_martingale(5)
    tree = m1.tree
    rng = np.random.default_rng(6)
    f2 = SimpleFunction(tree, tree.depth, rng.standard_normal(tree.num_leaves))
    m2 = MartingaleSequence.from_terminal(f2)
    combo = MartingaleSequence.from_terminal(2.0 * m1.terminal - 0.5 * f2)
    got = apply_atomic(combo, 0.4)
    want = 2.0 * apply_atomic(m1, 0.4) - 0.5 * apply_atomic(m2, 0.4)
    np.testing.assert_allclose(got.values, want.values, atol=1e-12)


def test_infimum_dominated_by_predictable_weights():
    m = random_martingale(11, depth=6)
    a = 0.5
    tree = m.tree
    acc_inf = np.zeros(tree.num_leaves)
    acc_pred = np.zeros(tree.num_leaves)
    for n, d in enumerate(differences(m), start=1):
        dl = np.abs(d.leaf_values())
        acc_inf += tree.expand_to_leaves(tree.min_child_masses(n) ** a, n - 1) * dl
        acc_pred += tree.expand_to_leaves(tree.masses(n - 1) ** a, n - 1) * dl
    assert np.all(acc_inf <= acc_pred + 1e-12)


class TestAdjoint:
    def test_chain_head_values(self):
        # closed form: -r_1^a + sum (r_k^a - r_{k+1}^a)/r_k, r_4 = 0
        tree = build_tree(Chain([1, 0.5, 0.25, 0.125]))
        g = atomic_function(tree, tree.atom(3, 0), 8.0)
        out = apply_atomic_adjoint(g, 0.5)
        want_leaf = [3.12132034355964, 0.29289321881345, -0.29289321881345, -0.70710678118655]
        np.testing.assert_allclose(out.values, want_leaf, atol=1e-11)

    def test_constant_on_uniform_maps_to_zero(self):
        tree = build_tree(Uniform(3, 4))
        g = SimpleFunction(tree, 0, [5.0])
        out = apply_atomic_adjoint(g, 0.5)
        assert np.max(np.abs(out.values)) <= 1e-15

    def test_split_sums_to_full(self):
        for seed in range(30):
            m = random_martingale(seed, depth=6)
            tree = m.tree
            rng = np.random.default_rng(seed)
            level = int(rng.integers(0, tree.depth + 1))
            g = SimpleFunction(tree, level, rng.standard_normal(tree.level_size(level)))
            head, tail = split_adjoint(g, 0.5)
            full = apply_atomic_adjoint(g, 0.5)
            assert np.max(np.abs(head.values + tail.values - full.values)) < 1e-12

    def test_split_level_validation(self):
        tree = build_tree(Dyadic(3))
        g = SimpleFunction(tree, 2, np.ones(4))
        with pytest.raises(LevelMismatch):
            split_adjoint(g, 0.5, at_level=1)

    def test_tail_vanishes_off_atomic_support(self):
        tree = build_tree(Random(seed=77, depth=6, max_children=3, min_ratio=0.05))
        w = tree.atom(2, 1)
        g = atomic_function(tree, w, 1.0 / w.probability)
        _, tail = split_adjoint(g, 0.5)
        sl = w.leaf_slice()
        off = np.concatenate((tail.values[: sl.start], tail.values[sl.stop :]))
        assert off.size == 0 or np.max(np.abs(off)) == 0.0

    @given(st.integers(0, 2**32 - 1))
    def test_duality_identity(self, seed):
        m = random_martingale(seed, depth=5)
        tree = m.tree
        rng = np.random.default_rng(seed + 1)
        level = int(rng.integers(0, tree.depth + 1))
        g = SimpleFunction(tree, level, rng.standard_normal(tree.level_size(level)))
        lhs = pair(apply_atomic(m, 0.5), g)
        rhs = pair(m.terminal, apply_atomic_adjoint(g, 0.5))
        assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs), abs(rhs))


class TestTruncations:
    def test_predictable_and_infimum_are_martingales(self):
        for seed in range(20):
            m = random_martingale(seed, depth=5)
            for kind in (OperatorKind.PREDICTABLE, OperatorKind.INFIMUM):
                tr = truncated_transform(m, 0.5, kind)
                assert tr.is_martingale_transform
                assert tr.martingale_defect() <= 1e-12

    def test_atomic_truncation_fails_on_irregular_tree(self):
        tree = build_tree(Explicit([[0.6, 0.3], [0.05, 0.05]]))
        m = MartingaleSequence.from_terminal(SimpleFunction(tree, 2, [1.0, -2.0, 3.0, -3.0]))
        tr = truncated_transform(m, 0.5, OperatorKind.ATOMIC)
        assert not tr.is_martingale_transform
        # hand value: E(b_2^a dF_2 | F_1) on the 0.9 atom with dF_2 = [1,-2]
        # equals (0.6^1.5 - 2*0.3^1.5)/0.9
        want = (0.6**1.5 - 2 * 0.3**1.5) / 0.9
        assert abs(tr.martingale_defect() - want) < 1e-12

    def test_atomic_truncation_passes_on_uniform_tree(self):
        tree = build_tree(Uniform(3, 4))
        rng = np.random.default_rng(12)
        m = MartingaleSequence.from_terminal(
            SimpleFunction(tree, 4, rng.standard_normal(tree.num_leaves))
        )
        tr = truncated_transform(m, 0.5, OperatorKind.ATOMIC)
        assert tr.martingale_defect() <= 1e-12  # uniform weights are constants

    def test_strict_mode_refuses_non_transforms(self):
        m = random_martingale(3, depth=4)
        with pytest.raises(NotATransform):
            truncated_transform(m, 0.5, OperatorKind.ATOMIC, strict=True)

    def test_partial_sums_telescope_to_full_output(self):
        m = random_martingale(9, depth=5)
        tr = truncated_transform(m, 0.5, OperatorKind.ATOMIC)
        np.testing.assert_allclose(
            tr.stages[-1].values, apply_atomic(m, 0.5).values, atol=1e-12
        )
        adj = truncated_transform(m, 0.5, OperatorKind.ATOMIC_ADJOINT)
        np.testing.assert_allclose(
            adj.stages[-1].values, apply_atomic_adjoint(m.terminal, 0.5).values, atol=1e-12
        )


def test_apply_to_function_dispatch():
    tree = build_tree(Dyadic(2))
    f = SimpleFunction(tree, 2, [4.0, 0.0, 0.0, 0.0])
    via_mart = apply_atomic(MartingaleSequence.from_terminal(f), 0.5)
    np.testing.assert_array_equal(
        apply_to_function(f, 0.5, OperatorKind.ATOMIC).values, via_mart.values
    )
    adj = apply_to_function(f, 0.5, OperatorKind.ATOMIC_ADJOINT)
    assert adj.level == tree.depth
