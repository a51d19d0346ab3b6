"""Verification lab for the operator identities and endpoint bounds.

Checks come in two tiers. Tier 1 carries explicit constants read off the
proofs of the endpoint estimates -- the pointwise chain bound, the atomic
weak-type constant (2-alpha)/(1-alpha), the tail-split window
[-r^(alpha-1), r^(alpha-1)/alpha] -- and is asserted hard. Tier 2 covers
statements whose constants are not pinned down (the strong-type inequality,
the L_infinity endpoint, maximal-function ratios); those runs only report
empirical suprema with witnesses, never a pass/fail verdict against an
invented constant.

Every randomized run takes a master seed; per-trial generators are spawned
from (seed, trial), so results are reproducible and trials could be executed
in any order or in parallel.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec, TreeMismatch
from .filtration import (
    Atom,
    Chain,
    FiltrationTree,
    Random,
    build_tree,
    deserialize_tree,
    serialize_tree,
)
from .fractional import (
    Exponents,
    OperatorKind,
    apply_atomic,
    apply_atomic_adjoint,
    apply_to_function,
    apply_transform,
    endpoint_weak_q,
    pair,
    split_adjoint,
    truncated_transform,
    _alpha_of,
)
from .lorentz import lorentz_norm, lp_norm, weak_norm
from .martingale import (
    MartingaleSequence,
    SimpleFunction,
    atomic_function,
    maximal_function,
    single_step_martingale,
)
from .reports import ExperimentReport, TrialRow

DUALITY_REL_TOL = 1e-9
DUALITY_ABS_TOL = 1e-12
POINTWISE_SLACK = 1e-12
WEAK_SLACK = 1e-9
DEFAULT_ALPHAS = (0.1, 0.25, 0.5, 0.75, 0.9)


def _rng(seed: int, trial: int | None = None) -> np.random.Generator:
    if trial is None:
        return np.random.default_rng(np.random.SeedSequence(seed))
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(trial,)))


def _tree_doc(tree: FiltrationTree) -> dict:
    return json.loads(serialize_tree(tree))


def _tree_from_doc(doc: dict) -> FiltrationTree:
    return deserialize_tree(json.dumps(doc))


def _exponents_dict(e) -> dict:
    if isinstance(e, Exponents):
        return {"alpha": e.alpha, "p": e.p, "q": e.q}
    return {"alpha": float(e)}


# ---------------------------------------------------------------------------
# Chains and their closed forms


@dataclass(frozen=True)
class ChainInstance:
    """Nested atoms w_0 > w_1 > ... > w_N with masses r_0=1 > ... > r_N,
    probed by the L_1-normalized function (1/r_N) on w_N."""

    probabilities: tuple
    alpha: float

    def __post_init__(self):
        r = np.asarray(self.probabilities, dtype=np.float64)
        if r.size < 1 or r[0] != 1.0 or np.any(np.diff(r) >= 0) or r[-1] <= 0:
            raise InvalidSpec("chain masses must satisfy 1 = r_0 > ... > r_N > 0")
        object.__setattr__(self, "probabilities", tuple(float(x) for x in r))
        _alpha_of(self.alpha)

    @property
    def depth(self) -> int:
        return len(self.probabilities) - 1

    def tree(self) -> FiltrationTree:
        return build_tree(Chain(self.probabilities))

    def test_function(self, tree: FiltrationTree | None = None) -> SimpleFunction:
        tree = self.tree() if tree is None else tree
        w = tree.atom(self.depth, 0) if self.depth else tree.root
        return atomic_function(tree, w, 1.0 / self.probabilities[-1])


def chain_profile(chain: ChainInstance) -> np.ndarray:
    """Values of the ATOMIC operator on the normalized chain function:
    one entry per shell w_n minus w_{n+1} (n = 0..N-1) and a final entry on
    w_N. Matches the generic pipeline on the chain tree exactly."""
    r = np.asarray(chain.probabilities)
    a = chain.alpha
    N = chain.depth
    if N == 0:
        return np.zeros(1)
    steps = r[1:] ** a * (1.0 / r[1:] - 1.0 / r[:-1])
    partial = np.concatenate(([0.0], np.cumsum(steps)))
    shells = partial[:N] - (r[:N] - r[1:]) ** a / r[:N]
    return np.concatenate((shells, [partial[N]]))


def chain_adjoint_head_profile(chain: ChainInstance) -> np.ndarray:
    """Closed form of the head part (n <= N) of the adjoint on the chain:
    constant -r_1^alpha + sum_{k<=n} (r_k^alpha - r_{k+1}^alpha)/r_k on each
    shell, with r_{N+1} taken as 0; entries for n = 0..N (shell N is w_N)."""
    r = np.asarray(chain.probabilities)
    a = chain.alpha
    N = chain.depth
    if N == 0:
        return np.zeros(1)
    ext = np.concatenate((r, [0.0]))
    steps = (r[1:] ** a - ext[2:] ** a) / r[1:]
    partial = np.concatenate(([0.0], np.cumsum(steps)))
    return -(r[1] ** a) + partial


def profile_to_leaves(profile: np.ndarray) -> np.ndarray:
    """Map a shell-ordered chain profile to the chain tree's leaf order
    (deepest atom first, then shells from the deepest sibling up)."""
    return profile[::-1]


def chain_pointwise_bounds(chain: ChainInstance) -> np.ndarray:
    """Explicit ceiling for |ATOMIC output| on each shell and on w_N:
    (r^(alpha-1) - 1)/(1 - alpha) + r^(alpha-1) with r the shell's chain mass."""
    r = np.asarray(chain.probabilities)
    a = chain.alpha
    if chain.depth == 0:
        return np.zeros(1)
    anchors = np.concatenate((r[:-1], [r[-1]]))
    return (anchors ** (a - 1.0) - 1.0) / (1.0 - a) + anchors ** (a - 1.0)


def check_pointwise_bound(chain: ChainInstance, slack: float = POINTWISE_SLACK) -> ExperimentReport:
    """Tier 1: the chain profile obeys its explicit pointwise ceiling.

    ratio = max(|value| - bound) over shells (negative means margin);
    passes when ratio <= slack.
    """
    profile = chain_profile(chain)
    bounds = chain_pointwise_bounds(chain)
    excess = float(np.max(np.abs(profile) - bounds))
    passed = excess <= slack
    return ExperimentReport(
        experiment="pointwise",
        seed=0,
        exponents={"alpha": chain.alpha},
        trials=1,
        worst_case=excess,
        passed=passed,
        tolerance=slack,
        witness={
            "params": {"alpha": chain.alpha, "chain": list(chain.probabilities)},
        },
        rows=(TrialRow(0, 0, excess, slack, passed),),
    )


# ---------------------------------------------------------------------------
# Single-instance tier-1 checks


def check_duality(
    tree: FiltrationTree,
    f: SimpleFunction,
    g: SimpleFunction,
    e,
    rel_tol: float = DUALITY_REL_TOL,
    abs_tol: float = DUALITY_ABS_TOL,
) -> ExperimentReport:
    """Tier 1: E[ATOMIC[f] g] = E[f adjoint[g]].

    ratio = |lhs - rhs| / max(|lhs|, |rhs|, 1); passes when the raw gap is
    within rel_tol relatively (abs_tol absolutely for sub-unit pairings).
    """
    if f.tree is not tree or g.tree is not tree:
        raise TreeMismatch("duality needs both functions on the given tree")
    alpha = _alpha_of(e)
    lhs = pair(apply_atomic(MartingaleSequence.from_terminal(f), alpha), g)
    rhs = pair(f, apply_atomic_adjoint(g, alpha))
    gap = abs(lhs - rhs)
    scale = max(abs(lhs), abs(rhs))
    passed = gap <= max(rel_tol * scale, abs_tol)
    ratio = gap / max(scale, 1.0)
    return ExperimentReport(
        experiment="duality",
        seed=0,
        exponents=_exponents_dict(e),
        trials=1,
        worst_case=ratio,
        passed=passed,
        tolerance=rel_tol,
        witness={
            "tree": _tree_doc(tree),
            "functions": [f.to_payload(), g.to_payload()],
            "params": {"alpha": alpha, "lhs": lhs, "rhs": rhs},
        },
        rows=(TrialRow(0, 0, ratio, rel_tol, passed),),
    )


def weak_type_constant(alpha: float) -> float:
    """(2 - alpha)/(1 - alpha): the explicit atomic weak-type constant that
    the chain estimate yields for L_1-normalized atomic inputs."""
    return (2.0 - alpha) / (1.0 - alpha)


def check_weak_type_atomic(
    tree: FiltrationTree, w: Atom, e, slack: float = WEAK_SLACK
) -> ExperimentReport:
    """Tier 1: for F = (1/P(w)) on w, the weak L_{q,inf} norm of ATOMIC[F]
    with q = 1/(1-alpha) stays below (2-alpha)/(1-alpha).

    ratio = weak norm / constant; passes when weak norm <= constant + slack.
    """
    alpha = _alpha_of(e)
    qw = endpoint_weak_q(alpha)
    C = weak_type_constant(alpha)
    F = atomic_function(tree, w, 1.0 / w.probability)
    out = apply_atomic(MartingaleSequence.from_terminal(F), alpha)
    wk = weak_norm(out, qw)
    passed = wk <= C + slack
    return ExperimentReport(
        experiment="weak1",
        seed=0,
        exponents=_exponents_dict(e),
        trials=1,
        worst_case=wk / C,
        passed=passed,
        tolerance=slack,
        witness={
            "tree": _tree_doc(tree),
            "functions": [F.to_payload()],
            "params": {"alpha": alpha, "atom_level": w.level, "atom_pos": w.pos},
        },
        rows=(TrialRow(0, 0, wk / C, 1.0, passed),),
    )


def _j2_stats(tree: FiltrationTree, w: Atom, alpha: float, slack: float) -> dict:
    r = w.probability
    G = atomic_function(tree, w, 1.0 / r)
    _, tail = split_adjoint(G, alpha)
    vals = tail.values
    sl = w.leaf_slice()
    inside = vals[sl.start : sl.stop]
    off = np.concatenate((vals[: sl.start], vals[sl.stop :]))
    off_sup = float(np.max(np.abs(off))) if off.size else 0.0
    lo = -(r ** (alpha - 1.0))
    hi = r ** (alpha - 1.0) / alpha
    vmin = float(inside.min())
    vmax = float(inside.max())
    passed = (vmin >= lo - slack) and (vmax <= hi + slack) and off_sup == 0.0
    ratio = max(vmax / hi, vmin / lo, 0.0)
    return {
        "min": vmin,
        "max": vmax,
        "lower": lo,
        "upper": hi,
        "off_support_sup": off_sup,
        "ratio": ratio,
        "passed": passed,
    }


def check_j2_bounds(tree: FiltrationTree, w: Atom, e, slack: float = WEAK_SLACK) -> ExperimentReport:
    """Tier 1: the tail part of the adjoint of the normalized indicator of
    w lies in [-r^(alpha-1), r^(alpha-1)/alpha] on w and vanishes off w.

    ratio = how much of the window is used (max of value/edge over both
    edges); passes when the window holds with `slack` and the off-support
    part is exactly zero.
    """
    alpha = _alpha_of(e)
    stats = _j2_stats(tree, w, alpha, slack)
    ratio, passed = stats["ratio"], stats["passed"]
    return ExperimentReport(
        experiment="j2",
        seed=0,
        exponents=_exponents_dict(e),
        trials=1,
        worst_case=ratio,
        passed=passed,
        tolerance=slack,
        witness={
            "tree": _tree_doc(tree),
            "params": {"alpha": alpha, "atom_level": w.level, "atom_pos": w.pos, **stats},
        },
        rows=(TrialRow(0, 0, ratio, 1.0, passed),),
    )


# ---------------------------------------------------------------------------
# Split-ratio probes


def sharpness_ratio(s: float, e: Exponents) -> float:
    """||ATOMIC[F]||_q / ||F||_p for the one-jump martingale on the split
    (s, 1-s) of the whole space, in closed form:

        (s^(1+(a-1)q) + (1-s)^(1+(a-1)q))^(1/q)
        ----------------------------------------
          (s^(1-p) + (1-s)^(1-p))^(1/p)

    evaluated in log space so extreme exponent choices stay finite. The
    ratio tends to 1 as s -> 0: the operator is exactly as large as the
    inequality allows on thin splits.
    """
    if not 0.0 < s < 1.0:
        raise InvalidSpec(f"split mass must lie in (0,1), got {s}")
    a, p, q = e.alpha, e.p, e.q
    ls, l1s = math.log(s), math.log1p(-s)
    cn = 1.0 + (a - 1.0) * q
    num = np.logaddexp(cn * ls, cn * l1s) / q
    den = np.logaddexp((1.0 - p) * ls, (1.0 - p) * l1s) / p
    return float(np.exp(num - den))


def split_ratio_generic(s: float, e: Exponents, kind: OperatorKind) -> float:
    """The same ratio evaluated through the full pipeline (tree, martingale,
    operator, norms) for any operator kind; the probe for PREDICTABLE grows
    like s^(-alpha), witnessing unboundedness on irregular splits."""
    if not 0.0 < s < 1.0:
        raise InvalidSpec(f"split mass must lie in (0,1), got {s}")
    from .filtration import Explicit

    tree = build_tree(Explicit([s, 1.0 - s]))
    m = single_step_martingale(tree, tree.root, tree.atom(1, 0))
    out = apply_to_function(m.terminal, e, kind)
    return lp_norm(out, e.q) / lp_norm(m.terminal, e.p)


def unboundedness_probe(skew: float, e: Exponents, kind: OperatorKind = OperatorKind.PREDICTABLE) -> float:
    """Operator-norm lower bound on a split with child fraction `skew`."""
    return split_ratio_generic(skew, e, kind)


def dyadic_skews(k_lo: int = 2, k_hi: int = 20) -> np.ndarray:
    return 2.0 ** -np.arange(k_lo, k_hi + 1)


def fit_loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(np.asarray(x)), np.log(np.asarray(y)), 1)[0])


def run_sharpness_sweep(e: Exponents, k_lo: int = 1, k_hi: int = 20):
    """(skews, closed-form sharpness ratios) over s = 2^-k."""
    skews = dyadic_skews(k_lo, k_hi)
    ratios = np.array([sharpness_ratio(s, e) for s in skews])
    return skews, ratios


def run_unbounded_sweep(e: Exponents, k_lo: int = 2, k_hi: int = 20, kind: OperatorKind = OperatorKind.PREDICTABLE):
    """(skews, pipeline ratios) for the unboundedness probe."""
    skews = dyadic_skews(k_lo, k_hi)
    ratios = np.array([split_ratio_generic(s, e, kind) for s in skews])
    return skews, ratios


# ---------------------------------------------------------------------------
# Randomized ensembles (tier 1 drivers)


def random_chain(rng: np.random.Generator, max_depth: int = 30, lo: float = 0.1, hi: float = 0.9) -> tuple:
    n = int(rng.integers(1, max_depth + 1))
    ratios = rng.uniform(lo, hi, size=n)
    return tuple(np.concatenate(([1.0], np.cumprod(ratios))))


def random_tree(
    rng: np.random.Generator,
    max_depth: int = 12,
    max_children: int = 3,
    min_ratio: float = 0.05,
) -> FiltrationTree:
    depth = int(rng.integers(1, max_depth + 1))
    seed = int(rng.integers(0, 2**62))
    return build_tree(
        Random(seed=seed, depth=depth, max_children=max_children, min_ratio=min_ratio)
    )


def random_function(rng: np.random.Generator, tree: FiltrationTree, level: int | None = None) -> SimpleFunction:
    if level is None:
        level = int(rng.integers(0, tree.depth + 1))
    return SimpleFunction(tree, level, rng.standard_normal(tree.level_size(level)))


def random_node(rng: np.random.Generator, tree: FiltrationTree) -> Atom:
    level = int(rng.integers(1, tree.depth + 1))
    return tree.atom(level, int(rng.integers(0, tree.node_count(level))))


def run_duality(
    e,
    trials: int = 1000,
    seed: int = 42,
    max_depth: int = 12,
    rel_tol: float = DUALITY_REL_TOL,
    abs_tol: float = DUALITY_ABS_TOL,
) -> ExperimentReport:
    """Ensemble of check_duality over random (tree, f, g); worst_case is the
    largest normalized gap and the witness reproduces it."""
    alpha = _alpha_of(e)
    rows = []
    worst = -1.0
    best = None
    all_pass = True
    for t in range(trials):
        rng = _rng(seed, t)
        tree = random_tree(rng, max_depth=max_depth)
        f = random_function(rng, tree)
        g = random_function(rng, tree)
        lhs = pair(apply_atomic(MartingaleSequence.from_terminal(f), alpha), g)
        rhs = pair(f, apply_atomic_adjoint(g, alpha))
        gap = abs(lhs - rhs)
        scale = max(abs(lhs), abs(rhs))
        passed = gap <= max(rel_tol * scale, abs_tol)
        ratio = gap / max(scale, 1.0)
        all_pass &= passed
        rows.append(TrialRow(t, seed, ratio, rel_tol, passed))
        if ratio > worst:
            worst = ratio
            best = (tree, f, g)
    witness = {
        "tree": _tree_doc(best[0]),
        "functions": [best[1].to_payload(), best[2].to_payload()],
        "params": {"alpha": alpha},
    }
    return ExperimentReport(
        "duality", seed, _exponents_dict(e), trials, worst, all_pass, rel_tol, witness, tuple(rows)
    )


def run_pointwise(
    alphas=DEFAULT_ALPHAS,
    trials: int = 1000,
    seed: int = 42,
    max_depth: int = 30,
    slack: float = POINTWISE_SLACK,
) -> ExperimentReport:
    """Random chains x alphas against the explicit pointwise ceiling;
    ratio is the signed excess |value| - bound (<= slack passes)."""
    rows = []
    worst = -math.inf
    witness = None
    all_pass = True
    idx = 0
    for t in range(trials):
        rng = _rng(seed, t)
        probs = random_chain(rng, max_depth=max_depth)
        for a in alphas:
            chain = ChainInstance(probs, a)
            excess = float(np.max(np.abs(chain_profile(chain)) - chain_pointwise_bounds(chain)))
            passed = excess <= slack
            all_pass &= passed
            rows.append(TrialRow(idx, seed, excess, slack, passed))
            if excess > worst:
                worst = excess
                witness = {"params": {"alpha": a, "chain": list(probs)}}
            idx += 1
    return ExperimentReport(
        "pointwise", seed, {"alphas": list(alphas)}, len(rows), worst, all_pass, slack, witness, tuple(rows)
    )


def run_weak_type(
    alphas=DEFAULT_ALPHAS,
    trials: int = 500,
    seed: int = 42,
    max_depth: int = 12,
    slack: float = WEAK_SLACK,
) -> ExperimentReport:
    """Random (tree, atom) x alphas against the atomic weak-type constant;
    ratio = weak norm / constant."""
    rows = []
    worst = -1.0
    best = None
    all_pass = True
    idx = 0
    for t in range(trials):
        rng = _rng(seed, t)
        tree = random_tree(rng, max_depth=max_depth)
        w = random_node(rng, tree)
        F = atomic_function(tree, w, 1.0 / w.probability)
        m = MartingaleSequence.from_terminal(F)
        for a in alphas:
            wk = weak_norm(apply_atomic(m, a), endpoint_weak_q(a))
            C = weak_type_constant(a)
            passed = wk <= C + slack
            ratio = wk / C
            all_pass &= passed
            rows.append(TrialRow(idx, seed, ratio, 1.0, passed))
            if ratio > worst:
                worst = ratio
                best = (tree, w, a)
            idx += 1
    witness = {
        "tree": _tree_doc(best[0]),
        "params": {"alpha": best[2], "atom_level": best[1].level, "atom_pos": best[1].pos},
    }
    return ExperimentReport(
        "weak1", seed, {"alphas": list(alphas)}, len(rows), worst, all_pass, slack, witness, tuple(rows)
    )


def run_j2(
    alphas=(0.5,),
    trials: int = 500,
    seed: int = 42,
    max_depth: int = 12,
    slack: float = WEAK_SLACK,
) -> ExperimentReport:
    """Random (tree, atom) pairs against the explicit tail window; ratio is
    window usage (<= 1 passes, off-support values must vanish exactly)."""
    rows = []
    worst = -math.inf
    witness = None
    all_pass = True
    idx = 0
    for t in range(trials):
        rng = _rng(seed, t)
        tree = random_tree(rng, max_depth=max_depth)
        w = random_node(rng, tree)
        for a in alphas:
            stats = _j2_stats(tree, w, a, slack)
            ratio = stats["ratio"]
            all_pass &= stats["passed"]
            rows.append(TrialRow(idx, seed, ratio, 1.0, stats["passed"]))
            if ratio > worst:
                worst = ratio
                witness = (tree, w, a, stats)
            idx += 1
    tree, w, a, stats = witness
    witness = {
        "tree": _tree_doc(tree),
        "params": {"alpha": a, "atom_level": w.level, "atom_pos": w.pos, **stats},
    }
    return ExperimentReport(
        "j2", seed, {"alphas": list(alphas)}, len(rows), worst, all_pass, slack, witness, tuple(rows)
    )


def atomic_truncation_witness(e=0.5):
    """A two-level irregular tree on which ATOMIC truncations break the
    martingale property: the mass-0.9 atom is refined unevenly, so the
    current-level weight is not previsible. Returns (tree, terminal, defect)."""
    from .filtration import Explicit

    tree = build_tree(Explicit([[0.6, 0.3], [0.05, 0.05]]))
    terminal = SimpleFunction(tree, 2, np.array([1.0, -2.0, 3.0, -3.0]))
    m = MartingaleSequence.from_terminal(terminal)
    tr = truncated_transform(m, e, OperatorKind.ATOMIC)
    return tree, terminal, tr.martingale_defect()


def run_transform_check(
    e,
    trials: int = 200,
    seed: int = 42,
    max_depth: int = 8,
    tol: float = 1e-12,
    witness_floor: float = 1e-6,
) -> ExperimentReport:
    """PREDICTABLE and INFIMUM truncations must satisfy the martingale
    property on every random tree (ratio = defect); the final row records
    the constructed ATOMIC counterexample, which passes by *exceeding* the
    floor. The witness is the worst previsible trial so worst_case is
    reproducible; the counterexample parameters ride along."""
    alpha = _alpha_of(e)
    rows = []
    worst = -1.0
    witness = None
    all_pass = True
    for t in range(trials):
        rng = _rng(seed, t)
        tree = random_tree(rng, max_depth=max_depth)
        terminal = random_function(rng, tree, level=tree.depth)
        m = MartingaleSequence.from_terminal(terminal)
        defect = max(
            truncated_transform(m, alpha, OperatorKind.PREDICTABLE).martingale_defect(),
            truncated_transform(m, alpha, OperatorKind.INFIMUM).martingale_defect(),
        )
        passed = defect <= tol
        all_pass &= passed
        rows.append(TrialRow(t, seed, defect, tol, passed))
        if defect > worst:
            worst = defect
            witness = (tree, terminal)
    witness = {
        "tree": _tree_doc(witness[0]),
        "functions": [witness[1].to_payload()],
        "params": {"alpha": alpha},
    }
    _, _, wdefect = atomic_truncation_witness(alpha)
    witness_ok = wdefect > witness_floor
    all_pass &= witness_ok
    rows.append(TrialRow(trials, seed, wdefect, witness_floor, witness_ok))
    witness["params"]["atomic_defect"] = wdefect
    return ExperimentReport(
        "transform", seed, _exponents_dict(e), trials + 1, worst, all_pass, tol, witness, tuple(rows)
    )


# ---------------------------------------------------------------------------
# Tier 2: reported-only empirical suprema


def run_weak_type_general(
    e,
    trials: int = 200,
    seed: int = 42,
    max_depth: int = 10,
) -> ExperimentReport:
    """Empirical sup of ||ATOMIC[f]||_{q,inf} / ||f||_1 over general simple f
    (not just atomic). The triangle-inequality argument transfers the atomic
    constant to simple inputs only through the normability of the target
    space, so no explicit constant is asserted here; data only."""
    alpha = _alpha_of(e)
    qw = endpoint_weak_q(alpha)
    rows = []
    worst = 0.0
    witness = None
    for t in range(trials):
        rng = _rng(seed, t)
        tree = random_tree(rng, max_depth=max_depth)
        f = random_function(rng, tree)
        denom = lp_norm(f, 1.0)
        if denom == 0.0:
            continue
        ratio = weak_norm(apply_to_function(f, alpha, OperatorKind.ATOMIC), qw) / denom
        rows.append(TrialRow(t, seed, ratio, 0.0, True))
        if ratio > worst:
            worst = ratio
            witness = (tree, f)
    witness = {
        "tree": _tree_doc(witness[0]),
        "functions": [witness[1].to_payload()],
        "params": {"alpha": alpha},
    }
    return ExperimentReport(
        "weak1_general", seed, _exponents_dict(e), len(rows), worst, True, 0.0, witness, tuple(rows)
    )


def run_strong_ratio(
    e: Exponents,
    kind: OperatorKind = OperatorKind.ATOMIC,
    trials: int = 200,
    seed: int = 42,
    max_depth: int = 10,
) -> ExperimentReport:
    """Empirical sup of ||Op[f]||_q / ||f||_p over random inputs. No
    constant is asserted (the strong-type inequality has none stated);
    rows carry the observed ratios, pass is always True."""
    rows = []
    worst = 0.0
    witness = None
    for t in range(trials):
        rng = _rng(seed, t)
        tree = random_tree(rng, max_depth=max_depth)
        f = random_function(rng, tree)
        denom = lp_norm(f, e.p)
        if denom == 0.0:
            continue
        ratio = lp_norm(apply_to_function(f, e, kind), e.q) / denom
        rows.append(TrialRow(t, seed, ratio, 0.0, True))
        if ratio > worst:
            worst = ratio
            witness = (tree, f)
    witness = {
        "tree": _tree_doc(witness[0]),
        "functions": [witness[1].to_payload()],
        "params": {"alpha": e.alpha, "p": e.p, "q": e.q, "kind": kind.value},
    }
    return ExperimentReport(
        f"strong_{kind.value}", seed, _exponents_dict(e), len(rows), worst, True, 0.0, witness, tuple(rows)
    )


def run_sup_ratio(
    e: Exponents | float,
    trials: int = 200,
    seed: int = 42,
    max_depth: int = 10,
) -> ExperimentReport:
    """Empirical sup of ||ATOMIC[f]||_inf / ||f||_{p,1} at the endpoint
    p = 1/alpha (reported only; the paper-level route to this bound is the
    adjoint plus duality, which tier 1 covers through the tail window)."""
    alpha = _alpha_of(e)
    p_end = 1.0 / alpha
    rows = []
    worst = 0.0
    witness = None
    for t in range(trials):
        rng = _rng(seed, t)
        tree = random_tree(rng, max_depth=max_depth)
        f = random_function(rng, tree)
        denom = lorentz_norm(f, p_end, 1.0)
        if denom == 0.0:
            continue
        ratio = lp_norm(apply_to_function(f, alpha, OperatorKind.ATOMIC), math.inf) / denom
        rows.append(TrialRow(t, seed, ratio, 0.0, True))
        if ratio > worst:
            worst = ratio
            witness = (tree, f)
    witness = {
        "tree": _tree_doc(witness[0]),
        "functions": [witness[1].to_payload()],
        "params": {"alpha": alpha},
    }
    return ExperimentReport(
        "sup_endpoint", seed, _exponents_dict(e), len(rows), worst, True, 0.0, witness, tuple(rows)
    )


def run_maximal_ratio(
    e: Exponents,
    trials: int = 200,
    seed: int = 42,
    max_depth: int = 10,
) -> ExperimentReport:
    """Exploratory: sup of ||max_k |partial ATOMIC sums| ||_q / ||f||_p.
    Whether this maximal variant is bounded is open; data only."""
    rows = []
    worst = 0.0
    witness = None
    for t in range(trials):
        rng = _rng(seed, t)
        tree = random_tree(rng, max_depth=max_depth)
        f = random_function(rng, tree, level=tree.depth)
        denom = lp_norm(f, e.p)
        if denom == 0.0:
            continue
        m = MartingaleSequence.from_terminal(f)
        tr = truncated_transform(m, e, OperatorKind.ATOMIC)
        best = np.zeros(tree.num_leaves)
        for st in tr.stages:
            best = np.maximum(best, np.abs(st.leaf_values()))
        ratio = lp_norm(SimpleFunction(tree, tree.depth, best), e.q) / denom
        rows.append(TrialRow(t, seed, ratio, 0.0, True))
        if ratio > worst:
            worst = ratio
            witness = (tree, f)
    witness = {
        "tree": _tree_doc(witness[0]),
        "functions": [witness[1].to_payload()],
        "params": {"alpha": e.alpha, "p": e.p, "q": e.q},
    }
    return ExperimentReport(
        "maximal", seed, _exponents_dict(e), len(rows), worst, True, 0.0, witness, tuple(rows)
    )


# ---------------------------------------------------------------------------
# Extremal search


def _softmax_rows(logits: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Per-sibling-group softmax over a concatenated logit vector."""
    out = np.empty_like(logits)
    for i in range(offsets.shape[0] - 1):
        seg = logits[offsets[i] : offsets[i + 1]]
        ex = np.exp(seg - seg.max())
        out[offsets[i] : offsets[i + 1]] = ex / ex.sum()
    return out


def _tree_with_logits(base: FiltrationTree, logits_per_level) -> FiltrationTree:
    """Rebuild a tree with the base topology and softmax-mapped masses."""
    mprob = [np.ones(1)]
    mkids = [np.asarray(k) for k in base._mkids]
    for n, logits in enumerate(logits_per_level):
        kids = mkids[n]
        counts = np.diff(kids)
        ratios = _softmax_rows(logits, kids)
        mprob.append(np.repeat(mprob[n], counts) * ratios)
    return FiltrationTree(mprob, mkids, _validated=True)


def extremal_search(
    e: Exponents,
    kind: OperatorKind = OperatorKind.ATOMIC,
    budget: int = 2000,
    seed: int = 42,
    depth: int = 4,
    max_children: int = 3,
    min_ratio: float = 0.02,
    climb_passes: int = 3,
    proposals: int = 12,
) -> ExperimentReport:
    """Derivative-free maximization of R(f, tree) = ||Op[f]||_q / ||f||_p.

    Alternates coordinate-wise multiplicative hill climbing on the leaf
    values (x(1 +/- step), step halved after a stalled pass; the initial
    step exceeds 1 so sign flips are reachable) with re-sampling of the
    tree masses through per-sibling softmax logits on a fixed topology.
    Deterministic given the seed. `budget` counts objective evaluations;
    exhausting it is the normal exit, the best pair found is the result.
    Rows log each improvement (ratio = new best).
    """
    rng = _rng(seed)
    topo_seed = int(rng.integers(0, 2**62))
    # the Random draw only supplies the topology: arity is clamped so that the
    # floor is satisfiable, and the starting masses are uniform splits (zero
    # logits), which always respect it
    arity = max(2, min(max_children, int(1.0 / min_ratio)))
    base = build_tree(
        Random(seed=topo_seed, depth=depth, max_children=arity, min_ratio=0.5 / arity)
    )
    logits = [np.zeros(base._mprob[n + 1].shape[0]) for n in range(depth)]
    tree = _tree_with_logits(base, logits)
    f = rng.standard_normal(tree.num_leaves)

    evals = 0
    rows = []

    def objective(tr, vals):
        nonlocal evals
        evals += 1
        func = SimpleFunction(tr, tr.depth, vals)
        denom = lp_norm(func, e.p)
        if denom == 0.0:
            return 0.0
        return lp_norm(apply_to_function(func, e, kind), e.q) / denom

    def min_split_ratio(tr):
        worst = 1.0
        for n in range(tr.depth):
            counts = np.diff(tr._mkids[n])
            ratios = tr._mprob[n + 1] / np.repeat(tr._mprob[n], counts)
            worst = min(worst, float(ratios.min()))
        return worst

    best = objective(tree, f)
    rows.append(TrialRow(evals, seed, best, 0.0, True))

    step = 1.5
    while evals < budget:
        evals_at_start = evals
        improved_phase = False
        for _ in range(climb_passes):
            if evals >= budget:
                break
            improved_pass = False
            for i in range(f.shape[0]):
                if evals >= budget:
                    break
                for factor in (1.0 + step, 1.0 - step):
                    cand = f.copy()
                    cand[i] *= factor
                    val = objective(tree, cand)
                    if val > best:
                        best = val
                        f = cand
                        improved_pass = True
                        rows.append(TrialRow(evals, seed, best, 0.0, True))
                        break
            if not improved_pass:
                step = max(step / 2.0, 1e-3)
            improved_phase |= improved_pass
        for _ in range(proposals):
            if evals >= budget:
                break
            cand_logits = [l + 0.5 * rng.standard_normal(l.shape) for l in logits]
            cand_tree = _tree_with_logits(base, cand_logits)
            if min_split_ratio(cand_tree) < min_ratio:
                continue
            val = objective(cand_tree, f)
            if val > best:
                best = val
                logits = cand_logits
                tree = cand_tree
                improved_phase = True
                rows.append(TrialRow(evals, seed, best, 0.0, True))
        if not improved_phase and step <= 1e-3:
            step = 1.5  # restart the climb scale; proposals keep exploring
        if evals == evals_at_start:
            break  # nothing evaluable is left (all proposals rejected)

    witness_fn = SimpleFunction(tree, tree.depth, f)
    witness = {
        "tree": _tree_doc(tree),
        "functions": [witness_fn.to_payload()],
        "params": {"alpha": e.alpha, "p": e.p, "q": e.q, "kind": kind.value},
    }
    return ExperimentReport(
        f"search_{kind.value}",
        seed,
        _exponents_dict(e),
        evals,
        best,
        True,
        0.0,
        witness,
        tuple(rows),
    )


# ---------------------------------------------------------------------------
# Witness re-evaluation


def reevaluate_witness(report: ExperimentReport) -> float:
    """Recompute the report's worst_case from its embedded witness; used to
    guarantee that saved experiments are reproducible."""
    w = report.witness
    if w is None:
        raise InvalidSpec("report carries no witness")
    params = w.get("params", {})
    name = report.experiment
    if name == "duality":
        tree = _tree_from_doc(w["tree"])
        f = SimpleFunction.from_payload(tree, w["functions"][0])
        g = SimpleFunction.from_payload(tree, w["functions"][1])
        rep = check_duality(tree, f, g, params["alpha"])
        return rep.worst_case
    if name == "pointwise":
        chain = ChainInstance(tuple(params["chain"]), params["alpha"])
        return float(np.max(np.abs(chain_profile(chain)) - chain_pointwise_bounds(chain)))
    if name == "weak1":
        tree = _tree_from_doc(w["tree"])
        atom = tree.atom(params["atom_level"], params["atom_pos"])
        return check_weak_type_atomic(tree, atom, params["alpha"]).worst_case
    if name == "j2":
        tree = _tree_from_doc(w["tree"])
        atom = tree.atom(params["atom_level"], params["atom_pos"])
        return check_j2_bounds(tree, atom, params["alpha"]).worst_case
    if name == "transform":
        tree = _tree_from_doc(w["tree"])
        f = SimpleFunction.from_payload(tree, w["functions"][0])
        m = MartingaleSequence.from_terminal(f)
        return max(
            truncated_transform(m, params["alpha"], OperatorKind.PREDICTABLE).martingale_defect(),
            truncated_transform(m, params["alpha"], OperatorKind.INFIMUM).martingale_defect(),
        )
    if name.startswith(("search_", "strong_")):
        tree = _tree_from_doc(w["tree"])
        f = SimpleFunction.from_payload(tree, w["functions"][0])
        e = Exponents(params["alpha"], params["p"], params["q"])
        kind = OperatorKind(params["kind"])
        return lp_norm(apply_to_function(f, e, kind), e.q) / lp_norm(f, e.p)
    if name == "sup_endpoint":
        tree = _tree_from_doc(w["tree"])
        f = SimpleFunction.from_payload(tree, w["functions"][0])
        a = params["alpha"]
        return lp_norm(apply_to_function(f, a, OperatorKind.ATOMIC), math.inf) / lorentz_norm(
            f, 1.0 / a, 1.0
        )
    if name == "maximal":
        tree = _tree_from_doc(w["tree"])
        f = SimpleFunction.from_payload(tree, w["functions"][0])
        e = Exponents(params["alpha"], params["p"], params["q"])
        tr = truncated_transform(MartingaleSequence.from_terminal(f), e, OperatorKind.ATOMIC)
        best = np.zeros(tree.num_leaves)
        for st in tr.stages:
            best = np.maximum(best, np.abs(st.leaf_values()))
        return lp_norm(SimpleFunction(tree, tree.depth, best), e.q) / lp_norm(f, e.p)
    if name == "weak1_general":
        tree = _tree_from_doc(w["tree"])
        f = SimpleFunction.from_payload(tree, w["functions"][0])
        a = params["alpha"]
        out = apply_to_function(f, a, OperatorKind.ATOMIC)
        return weak_norm(out, endpoint_weak_q(a)) / lp_norm(f, 1.0)
    raise InvalidSpec(f"no re-evaluator for experiment {name!r}")
