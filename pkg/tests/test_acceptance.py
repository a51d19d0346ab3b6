"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`. Tolerances are fixed here,
not configurable: identities at 1e-9/1e-12, explicit proof constants exact
with the stated slack, asymptotics at their stated windows. Comparisons of
huge chain values are scale-relative (sup gap over sup magnitude), which is
what double precision can promise pointwise.
"""

import math
import time

import numpy as np

from mhls import lab
from mhls.filtration import Uniform, build_tree
from mhls.fractional import (
    Exponents,
    OperatorKind,
    apply_atomic,
    apply_infimum,
    apply_predictable,
)
from mhls.lorentz import lorentz_norm, lp_norm
from mhls.martingale import MartingaleSequence, SimpleFunction
from oracles import lorentz_norm_quadrature

ALPHAS_FIVE = (0.1, 0.25, 0.5, 0.75, 0.9)
ALPHAS_THREE = (0.25, 0.5, 0.75)


def _line(num, ok, detail):
    print(f"\n[criterion {num:2d}] {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def test_criterion_01_duality_identity():
    t0 = time.perf_counter()
    rep = lab.run_duality(0.5, trials=1000, seed=42, max_depth=12)
    elapsed = time.perf_counter() - t0
    ok = rep.passed and elapsed < 10.0
    assert _line(
        1, ok, f"duality max normalized gap {rep.worst_case:.3e} over 1000 trees in {elapsed:.1f}s"
    )


def test_criterion_02_chain_closed_form():
    t0 = time.perf_counter()
    worst = 0.0
    for t in range(1000):
        rng = lab._rng(42, t)
        chain = lab.ChainInstance(lab.random_chain(rng, max_depth=30), float(rng.uniform(0.05, 0.95)))
        tree = chain.tree()
        m = MartingaleSequence.from_terminal(chain.test_function(tree))
        generic = apply_atomic(m, chain.alpha).values
        closed = lab.profile_to_leaves(lab.chain_profile(chain))
        scale = max(1.0, float(np.max(np.abs(closed))))
        worst = max(worst, float(np.max(np.abs(generic - closed))) / scale)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-12 and elapsed < 5.0
    assert _line(2, ok, f"closed-vs-generic sup gap {worst:.3e} over 1000 chains in {elapsed:.1f}s")


def test_criterion_03_pointwise_bound():
    rep = lab.run_pointwise(alphas=ALPHAS_FIVE, trials=1000, seed=42, max_depth=30)
    violations = sum(not r.passed for r in rep.rows)
    ok = rep.passed and violations == 0
    assert _line(
        3,
        ok,
        f"explicit chain ceiling: {violations} violations in {rep.trials} cases "
        f"(worst excess {rep.worst_case:.3e})",
    )


def test_criterion_04_atomic_weak_type():
    rep = lab.run_weak_type(alphas=ALPHAS_FIVE, trials=500, seed=42, max_depth=12)
    violations = sum(not r.passed for r in rep.rows)
    tier2 = lab.run_weak_type_general(0.5, trials=150, seed=42, max_depth=10)
    ok = rep.passed and violations == 0
    assert _line(
        4,
        ok,
        f"atomic weak-type: {violations} violations in {rep.trials} cases, worst "
        f"{rep.worst_case:.4f} of (2-a)/(1-a); tier-2 general-input constant "
        f"{tier2.worst_case:.3f} (reported only)",
    )


def test_criterion_05_tail_window():
    rep = lab.run_j2(alphas=(0.5,), trials=500, seed=42, max_depth=12)
    violations = sum(not r.passed for r in rep.rows)
    ok = rep.passed and violations == 0
    assert _line(
        5,
        ok,
        f"adjoint tail window: {violations} violations in {rep.trials} pairs "
        f"(worst window usage {rep.worst_case:.4f}; off-support values exactly zero)",
    )


def test_criterion_06_uniform_proportionality():
    worst = 0.0
    for m_arity, depth in ((2, 8), (3, 8), (5, 8)):
        tree = build_tree(Uniform(m_arity, depth))
        rng = np.random.default_rng(m_arity)
        mart = MartingaleSequence.from_terminal(
            SimpleFunction(tree, depth, rng.standard_normal(tree.num_leaves))
        )
        for a in (0.25, 0.5, 0.75):
            factor = float(m_arity) ** a
            i_out = apply_predictable(mart, a).values
            scale = max(1.0, float(np.max(np.abs(i_out))))
            for other in (apply_atomic(mart, a), apply_infimum(mart, a)):
                worst = max(worst, float(np.max(np.abs(i_out - factor * other.values))) / scale)
    ok = worst < 1e-12
    assert _line(6, ok, f"uniform m-adic proportionality sup gap {worst:.3e} (m=2,3,5, depth 8)")


def test_criterion_07_transform_property():
    rep = lab.run_transform_check(0.5, trials=200, seed=42, max_depth=8)
    defect = rep.rows[-1].ratio
    ok = rep.passed and rep.worst_case <= 1e-12 and defect > 1e-6
    assert _line(
        7,
        ok,
        f"previsible truncations martingale defect {rep.worst_case:.2e} on 200 trees; "
        f"atomic counterexample defect {defect:.4f}",
    )


def test_criterion_08_sharpness():
    worst_ratio_span = 0.0
    worst_limit_gap = 0.0
    for a in ALPHAS_THREE:
        e = Exponents.near_endpoint(a)
        skews, ratios = lab.run_sharpness_sweep(e, 1, 20)
        worst_ratio_span = max(worst_ratio_span, float(ratios.max() / ratios.min()))
        worst_limit_gap = max(worst_limit_gap, abs(float(ratios[-1]) - 1.0))
    ok = worst_ratio_span < 4.0 and worst_limit_gap < 1e-2
    assert _line(
        8,
        ok,
        f"split sharpness: max/min {worst_ratio_span:.3f} (<4), "
        f"|ratio(2^-20) - 1| {worst_limit_gap:.3e} (<1e-2)",
    )


def test_criterion_09_unboundedness():
    worst_rel = 0.0
    worst_span = 0.0
    for a in ALPHAS_THREE:
        e = Exponents.near_endpoint(a)
        skews, ratios = lab.run_unbounded_sweep(e, 2, 20)
        slope = lab.fit_loglog_slope(skews, ratios)
        worst_rel = max(worst_rel, abs(slope + a) / a)
        _, bounded = lab.run_unbounded_sweep(e, 2, 20, kind=OperatorKind.ATOMIC)
        worst_span = max(worst_span, float(bounded.max() / bounded.min()))
    ok = worst_rel < 0.05 and worst_span < 4.0
    assert _line(
        9,
        ok,
        f"skewed-split growth: slope rel err {worst_rel:.4f} (<0.05); "
        f"bounded-kind sweep span {worst_span:.3f} (<4)",
    )


def test_criterion_10_lorentz_oracle():
    pq = ((2.0, 2.0), (4 / 3, 4.0), (3.0, 1.5), (2.0, 5.0), (1.5, 1.0))
    worst_quad = 0.0
    worst_diag = 0.0
    rng = np.random.default_rng(42)
    for t in range(100):
        tree = build_tree(lab.Random(seed=int(rng.integers(2**32)), depth=4, max_children=2, min_ratio=0.1))
        pool = rng.uniform(0.05, 20.0, size=8)
        vals = pool[rng.integers(0, 8, size=tree.num_leaves)] * rng.choice(
            [-1.0, 1.0], size=tree.num_leaves
        )
        f = SimpleFunction(tree, tree.depth, vals)
        p, q = pq[t % len(pq)]
        closed = lorentz_norm(f, p, q)
        quad = lorentz_norm_quadrature(f, p, q, points=10**6)
        worst_quad = max(worst_quad, abs(closed - quad) / quad)
        pp = float(rng.uniform(1.05, 5.0))
        diag = lorentz_norm(f, pp, pp)
        ident = pp ** (-1.0 / pp) * lp_norm(f, pp)
        worst_diag = max(worst_diag, abs(diag - ident) / ident)
    ok = worst_quad < 1e-6 and worst_diag < 1e-12
    assert _line(
        10,
        ok,
        f"quasi-norm closed form vs 1e6-point quadrature rel gap {worst_quad:.3e} (<1e-6); "
        f"diagonal identity rel gap {worst_diag:.3e} (<1e-12)",
    )
