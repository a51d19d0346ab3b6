"""Fractional integration of tree martingales.

All operators weight martingale differences by a power alpha of an atom
mass; they differ in which atoms supply the weight for the n-th difference:

* PREDICTABLE  - the level n-1 atom masses (a martingale transform);
* INFIMUM      - the smallest child mass below each level n-1 atom (again
                 previsible, hence a martingale transform);
* ATOMIC       - the level n atom masses (not a transform: the weight is
                 not measurable one level earlier);
* ATOMIC_ADJOINT - the formal adjoint of ATOMIC, summing conditional-
                 expectation differences of the weighted input.

On uniform trees the first three are scalar multiples of each other.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidExponent, LevelMismatch, NotATransform, TreeMismatch
from .filtration import FiltrationTree
from .martingale import MartingaleSequence, SimpleFunction, condition

EXPONENT_TOL = 1e-12


@dataclass(frozen=True)
class Exponents:
    """A coupled triple: alpha in (0,1), 1 < p < q < infinity, 1/p - 1/q = alpha."""

    alpha: float
    p: float
    q: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InvalidExponent(f"alpha must lie in (0,1), got {self.alpha}")
        if not (1.0 < self.p < self.q) or math.isinf(self.q):
            raise InvalidExponent(f"need 1 < p < q < infinity, got p={self.p}, q={self.q}")
        gap = abs(1.0 / self.p - 1.0 / self.q - self.alpha)
        if gap > EXPONENT_TOL:
            raise InvalidExponent(
                f"1/p - 1/q differs from alpha by {gap:.3e} (p={self.p}, q={self.q})"
            )

    @classmethod
    def from_alpha_p(cls, alpha: float, p: float) -> "Exponents":
        if not 0.0 < alpha < 1.0:
            raise InvalidExponent(f"alpha must lie in (0,1), got {alpha}")
        if not 1.0 < p < 1.0 / alpha:
            raise InvalidExponent(f"p must lie in (1, {1.0 / alpha:.6g}) for alpha={alpha}")
        return cls(alpha, p, 1.0 / (1.0 / p - alpha))

    @classmethod
    def from_p_q(cls, p: float, q: float) -> "Exponents":
        return cls(1.0 / p - 1.0 / q, p, q)

    @classmethod
    def symmetric(cls, alpha: float) -> "Exponents":
        """The pair with 1/p and 1/q placed symmetrically around 1/2."""
        return cls.from_alpha_p(alpha, 2.0 / (1.0 + alpha))

    @classmethod
    def near_endpoint(cls, alpha: float, q: float = 350.0) -> "Exponents":
        """Large-q pair (p close to 1/alpha); split-ratio asymptotics settle
        at rates s^(p-1) and s^((1-alpha)q - 1), so pushing q up makes small
        splits behave like the limit."""
        return cls(alpha, 1.0 / (alpha + 1.0 / q), q)


def endpoint_weak_q(alpha: float) -> float:
    """The weak-type target exponent q = 1/(1-alpha) paired with L_1 input."""
    if not 0.0 < alpha < 1.0:
        raise InvalidExponent(f"alpha must lie in (0,1), got {alpha}")
    return 1.0 / (1.0 - alpha)


def _alpha_of(e) -> float:
    a = e.alpha if isinstance(e, Exponents) else float(e)
    if not 0.0 < a < 1.0:
        raise InvalidExponent(f"alpha must lie in (0,1), got {a}")
    return a


class OperatorKind(enum.Enum):
    PREDICTABLE = "i"
    INFIMUM = "tilde"
    ATOMIC = "ia"
    ATOMIC_ADJOINT = "iastar"

    @property
    def is_martingale_transform(self) -> bool:
        """True when the n-th weight is measurable at level n-1, so that
        truncated sums remain martingales."""
        return self in (OperatorKind.PREDICTABLE, OperatorKind.INFIMUM)

    def weights(self, tree: FiltrationTree, n: int, alpha: float):
        """(level, values) of the weight multiplying the n-th difference."""
        if self is OperatorKind.PREDICTABLE:
            return n - 1, tree.masses(n - 1) ** alpha
        if self is OperatorKind.INFIMUM:
            return n - 1, tree.min_child_masses(n) ** alpha
        if self is OperatorKind.ATOMIC:
            return n, tree.masses(n) ** alpha
        raise NotATransform("the adjoint has no difference weights")


def apply_transform(m: MartingaleSequence, e, kind: OperatorKind) -> SimpleFunction:
    """Sum of weight_n * (F_n - F_{n-1}) over n = 1..N, at the terminal level."""
    alpha = _alpha_of(e)
    tree = m.tree
    N = m.length
    out = np.zeros(tree.num_leaves)
    prev = tree.expand_to_leaves(m.stages[0].values, 0)
    for n in range(1, N + 1):
        cur = tree.expand_to_leaves(m.stages[n].values, n)
        lvl, wv = kind.weights(tree, n, alpha)
        w = tree.expand_to_leaves(wv, lvl)
        kernels.add_scaled_diff(out, w, cur, prev)
        prev = cur
    return SimpleFunction(tree, N, out[tree.leaf_bounds(N)[:-1]])


def apply_predictable(m: MartingaleSequence, e) -> SimpleFunction:
    return apply_transform(m, e, OperatorKind.PREDICTABLE)


def apply_infimum(m: MartingaleSequence, e) -> SimpleFunction:
    return apply_transform(m, e, OperatorKind.INFIMUM)


def apply_atomic(m: MartingaleSequence, e) -> SimpleFunction:
    return apply_transform(m, e, OperatorKind.ATOMIC)


def _adjoint_terms(g: SimpleFunction, alpha: float):
    """Yield per-level adjoint contributions (E_n - E_{n-1}) [mass_n^alpha g]
    as leaf arrays; beyond the tree depth every term vanishes."""
    tree = g.tree
    base = g.leaf_values()
    for n in range(1, tree.depth + 1):
        w = tree.expand_to_leaves(tree.masses(n) ** alpha, n)
        h = w * base
        mean_n = tree.level_means(h, n)
        mean_up = kernels.weighted_means(
            mean_n, tree.masses(n), tree.child_bounds(n), tree.inverse_masses(n - 1)
        )
        yield n, tree.expand_to_leaves(mean_n, n) - tree.expand_to_leaves(mean_up, n - 1)


def apply_atomic_adjoint(g: SimpleFunction, e) -> SimpleFunction:
    """The adjoint pairing partner of ATOMIC: E[ATOMIC[F] g] = E[F adjoint[g]]
    for simple F and g on the same tree. Lives at the deepest level."""
    alpha = _alpha_of(e)
    tree = g.tree
    out = np.zeros(tree.num_leaves)
    for _, term in _adjoint_terms(g, alpha):
        out += term
    return SimpleFunction(tree, tree.depth, out)


def split_adjoint(g: SimpleFunction, e, at_level: int | None = None):
    """Split the adjoint sum at a measurability level N of g: the part with
    n <= N and the tail with n > N. The tail vanishes outside the support
    of an atomic g, and the two parts add back to the full adjoint."""
    alpha = _alpha_of(e)
    tree = g.tree
    N = g.level if at_level is None else int(at_level)
    if N < g.level:
        raise LevelMismatch(f"g is measurable at level {g.level}, not at {N}")
    tree._check_level(N)
    head = np.zeros(tree.num_leaves)
    tail = np.zeros(tree.num_leaves)
    for n, term in _adjoint_terms(g, alpha):
        if n <= N:
            head += term
        else:
            tail += term
    return (
        SimpleFunction(tree, tree.depth, head),
        SimpleFunction(tree, tree.depth, tail),
    )


@dataclass(frozen=True)
class TransformTruncation:
    """Partial sums S_0..S_K of an operator; S_k is measurable at level k.

    ``is_martingale_transform`` records whether the defining weights are
    previsible, i.e. whether the partial sums must satisfy
    E(S_k | F_{k-1}) = S_{k-1}. For the ATOMIC kind they need not (and on
    irregular trees do not).
    """

    kind: OperatorKind
    stages: tuple
    is_martingale_transform: bool

    def martingale_defect(self) -> float:
        """max_k || E(S_k | F_{k-1}) - S_{k-1} ||_infinity."""
        worst = 0.0
        for k in range(1, len(self.stages)):
            gap = condition(self.stages[k], k - 1) - self.stages[k - 1]
            worst = max(worst, float(np.max(np.abs(gap.values))))
        return worst


def truncated_transform(
    m: MartingaleSequence, e, kind: OperatorKind, upto: int | None = None, strict: bool = False
) -> TransformTruncation:
    """Partial sums of the operator sum. For PREDICTABLE/INFIMUM these form
    a martingale; ATOMIC and ATOMIC_ADJOINT truncations are returned too but
    flagged (pass strict=True to refuse them)."""
    alpha = _alpha_of(e)
    tree = m.tree
    if strict and not kind.is_martingale_transform:
        raise NotATransform(f"{kind.name} truncations are not martingales")
    if kind is OperatorKind.ATOMIC_ADJOINT:
        K = tree.depth if upto is None else int(upto)
        tree._check_level(K)
        acc = np.zeros(tree.num_leaves)
        stages = [SimpleFunction(tree, 0, np.zeros(1))]
        terms = _adjoint_terms(m.terminal, alpha)
        for k in range(1, K + 1):
            acc += next(terms)[1]
            stages.append(SimpleFunction(tree, k, acc[tree.leaf_bounds(k)[:-1]]))
    else:
        K = m.length if upto is None else int(upto)
        if K > m.length:
            raise LevelMismatch(f"martingale has {m.length} steps, asked for {K}")
        acc = np.zeros(tree.num_leaves)
        prev = tree.expand_to_leaves(m.stages[0].values, 0)
        stages = [SimpleFunction(tree, 0, np.zeros(1))]
        for n in range(1, K + 1):
            cur = tree.expand_to_leaves(m.stages[n].values, n)
            lvl, wv = kind.weights(tree, n, alpha)
            w = tree.expand_to_leaves(wv, lvl)
            kernels.add_scaled_diff(acc, w, cur, prev)
            prev = cur
            stages.append(SimpleFunction(tree, n, acc[tree.leaf_bounds(n)[:-1]]))
    return TransformTruncation(kind, tuple(stages), kind.is_martingale_transform)


def apply_to_function(f: SimpleFunction, e, kind: OperatorKind) -> SimpleFunction:
    """Apply an operator to a terminal simple function (builds the martingale
    for the difference-weighting kinds; feeds the adjoint directly)."""
    if kind is OperatorKind.ATOMIC_ADJOINT:
        return apply_atomic_adjoint(f, e)
    return apply_transform(MartingaleSequence.from_terminal(f), e, kind)


def pair(f: SimpleFunction, g: SimpleFunction) -> float:
    """E[f g] on the shared tree."""
    if f.tree is not g.tree and f.tree != g.tree:
        raise TreeMismatch("pairing needs both functions on one tree")
    lf = f.leaf_values()
    lg = g.leaf_values()
    return float(np.sum(f.tree.leaf_probabilities * lf * lg))
