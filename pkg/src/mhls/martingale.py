"""Simple functions on filtration trees and the martingales they generate.

A martingale here is always the sequence of conditional expectations of a
terminal simple function, which guarantees the martingale property by
construction. All objects are immutable and all operations pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AtomNotFound,
    DegenerateSplit,
    InvalidSpec,
    LevelOutOfRange,
    TreeMismatch,
)
from .filtration import Atom, FiltrationTree


@dataclass(frozen=True, eq=False)
class SimpleFunction:
    """One real value per atom of A(F_level), in depth-first atom order."""

    tree: FiltrationTree
    level: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.tree._check_level(self.level)
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.shape != (self.tree.level_size(self.level),):
            raise InvalidSpec(
                f"expected {self.tree.level_size(self.level)} values at level "
                f"{self.level}, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise InvalidSpec("simple function values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def leaf_values(self) -> np.ndarray:
        return self.tree.expand_to_leaves(self.values, self.level)

    def expectation(self) -> float:
        return float(self.values @ self.tree.masses(self.level))

    def at_level(self, n: int) -> "SimpleFunction":
        """Re-express at a deeper level (every A(F_n) atom, n >= level, sits
        inside a single A(F_level) atom)."""
        if n < self.level:
            raise LevelOutOfRange(f"use condition() to coarsen below level {self.level}")
        if n == self.level:
            return self
        lv = self.leaf_values()
        return SimpleFunction(self.tree, n, lv[self.tree.leaf_bounds(n)[:-1]])

    def __add__(self, other):
        self._check_compatible(other)
        n = max(self.level, other.level)
        return SimpleFunction(self.tree, n, self.at_level(n).values + other.at_level(n).values)

    def __sub__(self, other):
        self._check_compatible(other)
        n = max(self.level, other.level)
        return SimpleFunction(self.tree, n, self.at_level(n).values - other.at_level(n).values)

    def __mul__(self, scalar):
        return SimpleFunction(self.tree, self.level, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return SimpleFunction(self.tree, self.level, -self.values)

    def _check_compatible(self, other):
        if not isinstance(other, SimpleFunction):
            raise TypeError(f"expected SimpleFunction, got {type(other).__name__}")
        if other.tree is not self.tree and other.tree != self.tree:
            raise TreeMismatch("functions live on different trees")

    def to_payload(self) -> dict:
        return {"level": self.level, "values": [float(v) for v in self.values]}

    @classmethod
    def from_payload(cls, tree: FiltrationTree, payload: dict) -> "SimpleFunction":
        return cls(tree, int(payload["level"]), np.asarray(payload["values"], dtype=np.float64))

    def __repr__(self):
        return f"SimpleFunction(level={self.level}, atoms={self.values.shape[0]})"


def condition(f: SimpleFunction, n: int) -> SimpleFunction:
    """Conditional expectation of f at level n.

    For n below f's level this is the mass-weighted average over each A(F_n)
    atom; for n at or above it, f is re-expressed at the finer level (where
    the filtration may have stopped refining, values just carry over).
    """
    tree = f.tree
    tree._check_level(n)
    if n >= f.level:
        return f.at_level(n)
    return SimpleFunction(tree, n, tree.level_means(f.leaf_values(), n))


@dataclass(frozen=True, eq=False)
class MartingaleSequence:
    """Adapted stages F_0..F_N obtained by conditioning a terminal function."""

    tree: FiltrationTree
    terminal: SimpleFunction
    stages: tuple

    @classmethod
    def from_terminal(cls, terminal: SimpleFunction) -> "MartingaleSequence":
        tree = terminal.tree
        lv = terminal.leaf_values()
        stages = tuple(
            SimpleFunction(tree, n, tree.level_means(lv, n)) for n in range(terminal.level)
        ) + (terminal,)
        return cls(tree, terminal, stages)

    @property
    def length(self) -> int:
        return self.terminal.level

    def __repr__(self):
        return f"MartingaleSequence(levels=0..{self.length})"


def differences(m: MartingaleSequence) -> list:
    """Martingale differences F_n - F_{n-1}, n = 1..N, each at level n."""
    return [
        SimpleFunction(
            m.tree, n, m.stages[n].values - m.stages[n - 1].at_level(n).values
        )
        for n in range(1, m.length + 1)
    ]


def maximal_function(m: MartingaleSequence) -> SimpleFunction:
    """sup_n |F_n| along each branch, as a function at the terminal level."""
    tree = m.tree
    N = m.length
    best = np.abs(m.stages[N].values)
    for n in range(N):
        best = np.maximum(best, np.abs(m.stages[n].at_level(N).values))
    return SimpleFunction(tree, N, best)


def atomic_function(tree: FiltrationTree, w: Atom, scale: float) -> SimpleFunction:
    """scale times the indicator of atom w; scale = 1/P(w) normalizes in L_1."""
    if w.tree is not tree:
        raise AtomNotFound(f"{w!r} does not belong to {tree!r}")
    vals = np.zeros(tree.level_size(w.level))
    vals[int(tree._mat_eff_idx[w.level][w.pos])] = float(scale)
    return SimpleFunction(tree, w.level, vals)


def single_step_martingale(tree: FiltrationTree, w: Atom, v: Atom) -> MartingaleSequence:
    """The mean-zero martingale that jumps once, at level(v) = level(w)+1:
    1/P(v) on v, -1/(P(w)-P(v)) on the rest of w, 0 off w.

    All earlier stages vanish and (by the leaf-extension convention) all
    later stages repeat the jump, so exactly one difference is nonzero.
    """
    if v.tree is not tree or w.tree is not tree:
        raise TreeMismatch("atoms belong to a different tree")
    if v.parent != w:
        raise DegenerateSplit(f"{v!r} is not a child of {w!r}")
    pw, pv = w.probability, v.probability
    if not pv < pw:
        raise DegenerateSplit("the split needs P(v) < P(w)")
    n1 = v.level
    # w's children occupy a contiguous run of the A(F_{n1}) atoms
    lb = tree.leaf_bounds(n1)
    ws = w.leaf_slice()
    lo = int(np.searchsorted(lb, ws.start))
    hi = int(np.searchsorted(lb, ws.stop))
    vals = np.zeros(tree.level_size(n1))
    vals[lo:hi] = -1.0 / (pw - pv)
    vals[int(tree._mat_eff_idx[n1][v.pos])] = 1.0 / pv
    return MartingaleSequence.from_terminal(SimpleFunction(tree, n1, vals))
