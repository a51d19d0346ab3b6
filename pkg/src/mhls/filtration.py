"""Finite atomic filtrations as probability trees.

A tree materializes the atoms of an increasing sequence of finitely generated
sigma-algebras F_0 c F_1 c ... c F_D: the root is the whole space, the
children of an atom are the cells it splits into at the next level. An atom
that stops splitting is treated as its own sole child at every deeper level
(the filtration becomes constant on that branch), so A(F_n) at any level n
consists of the materialized nodes at level n plus the shallower leaves.

Construction is vectorized level by level; a built tree is immutable and
safe to share across threads.
"""

from __future__ import annotations

import json
import numbers
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import kernels
from .errors import (
    AtomNotFound,
    InvalidSpec,
    InvariantViolation,
    LevelOutOfRange,
    NonDecreasingChain,
    ParseError,
    ProbabilityUnderflow,
)

PROB_FLOOR = 1e-300
SUM_TOL = 1e-12


# ---------------------------------------------------------------------------
# Tree specifications


@dataclass(frozen=True)
class Dyadic:
    """Every atom splits into two equal halves, `depth` times."""

    depth: int


@dataclass(frozen=True)
class Uniform:
    """Every atom splits into `m` equal parts, `depth` times."""

    m: int
    depth: int


@dataclass(frozen=True)
class Chain:
    """Nested atoms with masses 1 = r_0 > r_1 > ... > r_N > 0.

    At each level the current atom splits into the next chain atom and a
    single sibling carrying the leftover mass; siblings never split again.
    """

    probabilities: Sequence[float]


@dataclass(frozen=True)
class Random:
    """Seeded irregular tree: every atom at level < depth splits into a
    uniformly drawn number of children in {2..max_children}; child mass
    fractions are normalized independent uniforms, redrawn while any
    fraction falls below min_ratio."""

    seed: int
    depth: int
    max_children: int = 3
    min_ratio: float = 0.1


@dataclass(frozen=True)
class Explicit:
    """Nested children lists: a child is either a leaf mass (number) or a
    list of its own children; internal masses are the recursive sums."""

    children: Sequence


TreeSpec = Union[Dyadic, Uniform, Chain, Random, Explicit]


# ---------------------------------------------------------------------------
# Atoms


@dataclass(frozen=True, eq=False)
class Atom:
    """View of one materialized node; `level`/`pos` address it in its tree."""

    tree: "FiltrationTree"
    level: int
    pos: int

    @property
    def probability(self) -> float:
        return float(self.tree._mprob[self.level][self.pos])

    @property
    def id(self) -> int:
        """Depth-first preorder index; increasing ids at a level run left to right."""
        return int(self.tree._dfs_ids()[self.level][self.pos])

    @property
    def parent(self) -> "Atom | None":
        if self.level == 0:
            return None
        return Atom(self.tree, self.level - 1, int(self.tree._parents()[self.level][self.pos]))

    @property
    def children(self) -> "tuple[Atom, ...]":
        if self.level >= self.tree.depth:
            return ()
        kids = self.tree._mkids[self.level]
        return tuple(
            Atom(self.tree, self.level + 1, p)
            for p in range(int(kids[self.pos]), int(kids[self.pos + 1]))
        )

    @property
    def is_leaf(self) -> bool:
        if self.level >= self.tree.depth:
            return True
        kids = self.tree._mkids[self.level]
        return int(kids[self.pos]) == int(kids[self.pos + 1])

    def leaf_slice(self) -> slice:
        """Range of this atom's leaves in depth-first leaf order."""
        i = int(self.tree._mat_eff_idx[self.level][self.pos])
        lb = self.tree.leaf_bounds(self.level)
        return slice(int(lb[i]), int(lb[i + 1]))

    def __eq__(self, other):
        return (
            isinstance(other, Atom)
            and self.tree is other.tree
            and self.level == other.level
            and self.pos == other.pos
        )

    def __hash__(self):
        return hash((id(self.tree), self.level, self.pos))

    def __repr__(self):
        return f"Atom(level={self.level}, pos={self.pos}, p={self.probability:.6g})"


# ---------------------------------------------------------------------------
# The tree


class FiltrationTree:
    """Rooted probability tree; see the module docstring for conventions.

    Levels 0..depth each carry the *effective* atom arrays (materialized
    nodes plus extended leaves) in depth-first left-to-right order, with
    contiguous leaf ranges, which makes conditional expectations per-level
    segment reductions.
    """

    __slots__ = (
        "_mprob",
        "_mkids",
        "_eprob",
        "_einv",
        "_ecb",
        "_elev",
        "_epos",
        "_lb",
        "_mat_eff_idx",
        "_dfs_cache",
        "_parent_cache",
        "_min_child_cache",
    )

    def __init__(self, mprob, mkids, _validated=False):
        if not _validated:
            _validate_materialized(mprob, mkids)
        self._mprob = [np.ascontiguousarray(p, dtype=np.float64) for p in mprob]
        self._mkids = [np.ascontiguousarray(k, dtype=np.int64) for k in mkids]
        for a in self._mprob + self._mkids:
            a.flags.writeable = False
        self._derive_effective()
        self._dfs_cache = None
        self._parent_cache = None
        self._min_child_cache = {}

    # -- construction helpers ------------------------------------------------

    def _derive_effective(self):
        D = self.depth
        self._eprob = [self._mprob[0]]
        self._elev = [np.zeros(1, dtype=np.int32)]
        self._epos = [np.zeros(1, dtype=np.int64)]
        self._ecb = [None]
        for n in range(1, D + 1):
            lev, pos, prob = self._elev[n - 1], self._epos[n - 1], self._eprob[n - 1]
            kids = self._mkids[n - 1]
            counts = np.diff(kids)
            k_eff = np.ones(prob.shape[0], dtype=np.int64)
            splitting = lev == n - 1
            kcounts = counts[pos[splitting]]
            has_kids = kcounts > 0
            split_idx = np.flatnonzero(splitting)
            split_idx = split_idx[has_kids]
            k_eff[split_idx] = kcounts[has_kids]
            parent_of = np.repeat(np.arange(prob.shape[0]), k_eff)
            out_lev = lev[parent_of].copy()
            out_pos = pos[parent_of].copy()
            out_prob = prob[parent_of].copy()
            is_split = np.zeros(prob.shape[0], dtype=bool)
            is_split[split_idx] = True
            sel = is_split[parent_of]
            out_lev[sel] = n
            out_pos[sel] = np.arange(self._mprob[n].shape[0])
            out_prob[sel] = self._mprob[n]
            cb = np.zeros(prob.shape[0] + 1, dtype=np.int64)
            np.cumsum(k_eff, out=cb[1:])
            for a in (out_prob, out_lev, out_pos, cb):
                a.flags.writeable = False
            self._eprob.append(out_prob)
            self._elev.append(out_lev)
            self._epos.append(out_pos)
            self._ecb.append(cb)
        # leaf bounds per level, computed bottom-up
        L = self._eprob[D].shape[0]
        self._lb = [None] * (D + 1)
        self._lb[D] = np.arange(L + 1, dtype=np.int64)
        for n in range(D - 1, -1, -1):
            self._lb[n] = self._lb[n + 1][self._ecb[n + 1]]
        self._einv = [1.0 / p for p in self._eprob]
        self._mat_eff_idx = []
        for n in range(D + 1):
            idx = np.flatnonzero(self._elev[n] == n).astype(np.int64)
            idx.flags.writeable = False
            self._mat_eff_idx.append(idx)
        for arrs in (self._lb, self._einv):
            for a in arrs:
                if a is not None:
                    a.flags.writeable = False

    # -- basic geometry --------------------------------------------------------

    @property
    def depth(self) -> int:
        return len(self._mprob) - 1

    @property
    def num_leaves(self) -> int:
        return int(self._eprob[self.depth].shape[0])

    @property
    def num_nodes(self) -> int:
        return int(sum(p.shape[0] for p in self._mprob))

    @property
    def leaf_probabilities(self) -> np.ndarray:
        return self._eprob[self.depth]

    def _check_level(self, n, lo=0):
        if not lo <= n <= self.depth:
            raise LevelOutOfRange(f"level {n} outside {lo}..{self.depth}")

    def level_size(self, n: int) -> int:
        """Number of atoms of A(F_n), extended leaves included."""
        self._check_level(n)
        return int(self._eprob[n].shape[0])

    def node_count(self, n: int) -> int:
        """Number of materialized nodes at level n."""
        self._check_level(n)
        return int(self._mprob[n].shape[0])

    def masses(self, n: int) -> np.ndarray:
        """P(w) for each atom w of A(F_n), in depth-first order."""
        self._check_level(n)
        return self._eprob[n]

    def inverse_masses(self, n: int) -> np.ndarray:
        self._check_level(n)
        return self._einv[n]

    def leaf_bounds(self, n: int) -> np.ndarray:
        """Leaf-range offsets of the A(F_n) atoms (length level_size(n)+1)."""
        self._check_level(n)
        return self._lb[n]

    def child_bounds(self, n: int) -> np.ndarray:
        """Offsets grouping A(F_n) atoms under their A(F_{n-1}) parents."""
        self._check_level(n, lo=1)
        return self._ecb[n]

    def min_child_masses(self, n: int) -> np.ndarray:
        """Per A(F_{n-1}) atom, the smallest mass among its A(F_n) children."""
        self._check_level(n, lo=1)
        if n not in self._min_child_cache:
            v = np.minimum.reduceat(self._eprob[n], self._ecb[n][:-1])
            v.flags.writeable = False
            self._min_child_cache[n] = v
        return self._min_child_cache[n]

    # -- value transport -------------------------------------------------------

    def expand_to_leaves(self, values: np.ndarray, n: int) -> np.ndarray:
        """Broadcast one value per A(F_n) atom to the leaf axis."""
        return kernels.expand(values, self._lb[n])

    def level_means(self, leaf_values: np.ndarray, n: int) -> np.ndarray:
        """Conditional expectation at level n of a leaf-indexed function."""
        return kernels.weighted_means(
            leaf_values, self._eprob[self.depth], self._lb[n], self._einv[n]
        )

    # -- atoms -------------------------------------------------------------------

    @property
    def root(self) -> Atom:
        return Atom(self, 0, 0)

    def atom(self, level: int, pos: int) -> Atom:
        self._check_level(level)
        if not 0 <= pos < self._mprob[level].shape[0]:
            raise AtomNotFound(f"no node at level {level}, position {pos}")
        return Atom(self, level, pos)

    def atoms_at(self, n: int) -> "tuple[Atom, ...]":
        """The atoms of A(F_n) in depth-first order (extended leaves included)."""
        self._check_level(n)
        return tuple(
            Atom(self, int(l), int(p)) for l, p in zip(self._elev[n], self._epos[n])
        )

    def leaves(self) -> "tuple[Atom, ...]":
        return self.atoms_at(self.depth)

    def _parents(self):
        if self._parent_cache is None:
            par = [np.zeros(0, dtype=np.int64)]
            for n in range(self.depth):
                counts = np.diff(self._mkids[n])
                par.append(np.repeat(np.arange(counts.shape[0]), counts))
            self._parent_cache = par
        return self._parent_cache

    def _dfs_ids(self):
        if self._dfs_cache is None:
            D = self.depth
            sizes = [None] * (D + 1)
            sizes[D] = np.ones(self._mprob[D].shape[0], dtype=np.int64)
            for n in range(D - 1, -1, -1):
                kids = self._mkids[n]
                csum = np.concatenate(([0], np.cumsum(sizes[n + 1])))
                sizes[n] = 1 + csum[kids[1:]] - csum[kids[:-1]]
            ids = [np.zeros(1, dtype=np.int64)]
            for n in range(D):
                kids = self._mkids[n]
                counts = np.diff(kids)
                parent = np.repeat(np.arange(counts.shape[0]), counts)
                excl = np.concatenate(([0], np.cumsum(sizes[n + 1])[:-1]))
                ids.append(ids[n][parent] + 1 + excl - excl[kids[:-1][parent]])
            self._dfs_cache = ids
        return self._dfs_cache

    # -- comparison ----------------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, FiltrationTree):
            return NotImplemented
        return (
            self.depth == other.depth
            and all(np.array_equal(a, b) for a, b in zip(self._mprob, other._mprob))
            and all(np.array_equal(a, b) for a, b in zip(self._mkids, other._mkids))
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"FiltrationTree(depth={self.depth}, nodes={self.num_nodes}, "
            f"leaves={self.num_leaves})"
        )


def _validate_materialized(mprob, mkids):
    if len(mprob) != len(mkids) + 1:
        raise InvalidSpec("level arrays are inconsistent")
    root = np.asarray(mprob[0], dtype=np.float64)
    if root.shape != (1,) or abs(root[0] - 1.0) > SUM_TOL:
        raise InvariantViolation("root atom must carry probability 1")
    for n, p in enumerate(mprob):
        p = np.asarray(p, dtype=np.float64)
        if p.size == 0 and n > 0:
            raise InvalidSpec(f"level {n} has no atoms")
        if not np.all(np.isfinite(p)):
            raise InvalidSpec("atom probabilities must be finite")
        if np.any(p <= 0.0):
            raise InvalidSpec(f"atom probability {p.min()!r} is not positive")
        if np.any(p < PROB_FLOOR):
            raise ProbabilityUnderflow("atom probability below representable floor")
        if np.any(p > 1.0 + SUM_TOL):
            raise InvariantViolation("atom probability exceeds 1")
    for n, kids in enumerate(mkids):
        kids = np.asarray(kids, dtype=np.int64)
        if kids.shape[0] != np.asarray(mprob[n]).shape[0] + 1:
            raise InvalidSpec(f"child offsets at level {n} have wrong length")
        if kids[0] != 0 or kids[-1] != np.asarray(mprob[n + 1]).shape[0]:
            raise InvalidSpec(f"child offsets at level {n} do not cover level {n + 1}")
        if np.any(np.diff(kids) < 0):
            raise InvalidSpec(f"child offsets at level {n} are not monotone")
        starts = kids[:-1]
        nonempty = np.flatnonzero(np.diff(kids) > 0)
        if nonempty.size:
            sums = np.add.reduceat(np.asarray(mprob[n + 1], dtype=np.float64), starts[nonempty])
            parents = np.asarray(mprob[n], dtype=np.float64)[nonempty]
            gap = np.abs(sums - parents)
            if np.any(gap > SUM_TOL):
                raise InvariantViolation(
                    f"children masses at level {n + 1} sum off by {gap.max():.3e}"
                )


# ---------------------------------------------------------------------------
# Builders


def build_tree(spec: TreeSpec) -> FiltrationTree:
    """Construct a tree from a specification; deterministic for Random specs."""
    if isinstance(spec, Dyadic):
        return _build_uniform(2, spec.depth)
    if isinstance(spec, Uniform):
        return _build_uniform(spec.m, spec.depth)
    if isinstance(spec, Chain):
        return _build_chain(spec.probabilities)
    if isinstance(spec, Random):
        return _build_random(spec)
    if isinstance(spec, Explicit):
        nested = _parse_explicit_children(spec.children)
        total = sum(p for p, _ in nested)
        if nested and abs(total - 1.0) > SUM_TOL:
            raise InvalidSpec(f"leaf masses sum to {total!r}, expected 1")
        return _tree_from_nested((1.0, tuple(nested)))
    raise InvalidSpec(f"unknown tree spec: {spec!r}")


def _build_uniform(m: int, depth: int) -> FiltrationTree:
    if m < 2:
        raise InvalidSpec("uniform splits need m >= 2")
    if depth < 0:
        raise InvalidSpec("depth must be nonnegative")
    if depth * np.log(m) > 690:
        raise ProbabilityUnderflow("uniform atom mass underflows at this depth")
    mprob = [np.ones(1)]
    mkids = []
    for n in range(depth):
        size = mprob[n].shape[0]
        mkids.append(np.arange(size + 1, dtype=np.int64) * m)
        mprob.append(np.repeat(mprob[n] / m, m))
    return FiltrationTree(mprob, mkids)


def _build_chain(probabilities: Sequence[float]) -> FiltrationTree:
    r = np.asarray(list(probabilities), dtype=np.float64)
    if r.ndim != 1 or r.size == 0:
        raise InvalidSpec("chain needs at least r_0")
    if r[0] != 1.0:
        raise InvalidSpec("chain must start at r_0 = 1")
    if np.any(np.diff(r) >= 0):
        raise NonDecreasingChain("chain probabilities must strictly decrease")
    if r[-1] <= 0:
        raise NonDecreasingChain("chain probabilities must stay positive")
    if r[-1] < PROB_FLOOR or np.any(-np.diff(r) < PROB_FLOOR):
        raise ProbabilityUnderflow("chain step below representable floor")
    mprob = [np.ones(1)]
    mkids = []
    for n in range(1, r.size):
        size = mprob[n - 1].shape[0]
        kids = np.full(size + 1, 2, dtype=np.int64)
        kids[0] = 0  # only the chain atom (first node) splits
        mkids.append(kids)
        mprob.append(np.array([r[n], r[n - 1] - r[n]]))
    return FiltrationTree(mprob, mkids)


def _build_random(spec: Random) -> FiltrationTree:
    if spec.depth < 0:
        raise InvalidSpec("depth must be nonnegative")
    if spec.max_children < 2:
        raise InvalidSpec("max_children must be at least 2")
    if not 0.0 < spec.min_ratio <= 0.5:
        raise InvalidSpec("min_ratio must lie in (0, 1/2]")
    rng = np.random.default_rng(spec.seed)
    mprob = [np.ones(1)]
    mkids = []
    for n in range(spec.depth):
        parents = mprob[n]
        counts = rng.integers(2, spec.max_children + 1, size=parents.shape[0])
        offs = np.zeros(parents.shape[0] + 1, dtype=np.int64)
        np.cumsum(counts, out=offs[1:])
        ratios = np.empty(int(offs[-1]))
        for k in np.unique(counts):
            rows = np.flatnonzero(counts == k)
            block = _draw_ratios(rng, rows.size, int(k), spec.min_ratio)
            idx = (offs[rows][:, None] + np.arange(k)[None, :]).ravel()
            ratios[idx] = block.ravel()
        child = np.repeat(parents, counts) * ratios
        if np.any(child < PROB_FLOOR):
            raise ProbabilityUnderflow("random tree atom below representable floor")
        mkids.append(offs)
        mprob.append(child)
    return FiltrationTree(mprob, mkids)


def _draw_ratios(rng, rows: int, k: int, min_ratio: float, max_rounds: int = 1000):
    out = np.empty((rows, k))
    pending = np.arange(rows)
    for _ in range(max_rounds):
        if pending.size == 0:
            return out
        u = rng.uniform(size=(pending.size, k))
        r = u / u.sum(axis=1, keepdims=True)
        ok = r.min(axis=1) >= min_ratio
        out[pending[ok]] = r[ok]
        pending = pending[~ok]
    raise InvalidSpec(
        f"rejection sampling stalled: min_ratio={min_ratio} is too close to 1/{k}"
    )


def _parse_explicit_children(children) -> list:
    if isinstance(children, (str, bytes)) or not isinstance(children, Sequence):
        raise InvalidSpec("explicit children must be a sequence")
    nested = []
    for node in children:
        if isinstance(node, numbers.Real) and not isinstance(node, bool):
            p = float(node)
            if not np.isfinite(p) or p <= 0:
                raise InvalidSpec(f"leaf mass {node!r} must be a positive number")
            if p < PROB_FLOOR:
                raise ProbabilityUnderflow("leaf mass below representable floor")
            nested.append((p, ()))
        elif isinstance(node, Sequence) and not isinstance(node, (str, bytes)):
            if len(node) == 0:
                raise InvalidSpec("an internal node needs at least one child")
            sub = _parse_explicit_children(node)
            nested.append((sum(p for p, _ in sub), tuple(sub)))
        else:
            raise InvalidSpec(f"cannot interpret node {node!r}")
    return nested


def _tree_from_nested(root) -> FiltrationTree:
    """Assemble level arrays from ((p, children), ...) nested tuples, BFS."""
    mprob = [np.array([root[0]])]
    mkids = []
    frontier = [root]
    while True:
        offsets = [0]
        probs = []
        next_frontier = []
        for _, children in frontier:
            offsets.append(offsets[-1] + len(children))
            for child in children:
                probs.append(child[0])
                next_frontier.append(child)
        if not probs:
            break
        mkids.append(np.asarray(offsets, dtype=np.int64))
        mprob.append(np.asarray(probs))
        frontier = next_frontier
    return FiltrationTree(mprob, mkids)


# ---------------------------------------------------------------------------
# Level functions


def atom_mass_function(tree: FiltrationTree, n: int):
    """The level-n simple function equal to P(w) on each atom w of A(F_n)."""
    from .martingale import SimpleFunction

    tree._check_level(n)
    return SimpleFunction(tree, n, tree.masses(n))


def min_child_mass_function(tree: FiltrationTree, n: int):
    """The level-(n-1) simple function equal, on each atom of A(F_{n-1}),
    to the smallest mass among its A(F_n) children."""
    from .martingale import SimpleFunction

    tree._check_level(n, lo=1)
    return SimpleFunction(tree, n - 1, tree.min_child_masses(n))


def regularity_coefficient(tree: FiltrationTree) -> float:
    """Largest rho such that every child atom keeps at least rho times its
    parent's mass; the minimum of child/parent mass ratios over real splits."""
    if tree.depth < 1:
        raise LevelOutOfRange("regularity needs at least one refinement level")
    best = 1.0
    for n in range(tree.depth):
        counts = np.diff(tree._mkids[n])
        if counts.sum() == 0:
            continue
        ratios = tree._mprob[n + 1] / np.repeat(tree._mprob[n], counts)
        best = min(best, float(ratios.min()))
    return best


# ---------------------------------------------------------------------------
# Serialization (one tree per UTF-8 JSON document)


def serialize_tree(tree: FiltrationTree) -> str:
    """Nested-children JSON; the root's probability (always 1) is omitted."""

    def node_dict(level, pos):
        out = {}
        if level > 0:
            out["p"] = float(tree._mprob[level][pos])
        if level < tree.depth:
            kids = tree._mkids[level]
            lo, hi = int(kids[pos]), int(kids[pos + 1])
            if hi > lo:
                out["children"] = [node_dict(level + 1, c) for c in range(lo, hi)]
        return out

    return json.dumps(node_dict(0, 0))


def deserialize_tree(text: str) -> FiltrationTree:
    """Parse the nested-children JSON schema and validate all invariants."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    nested = _parse_json_node(doc, is_root=True)
    return _tree_from_nested(nested)


def _parse_json_node(obj, is_root=False):
    if not isinstance(obj, dict):
        raise ParseError(f"tree node must be an object, got {type(obj).__name__}")
    unknown = set(obj) - {"p", "children"}
    if unknown:
        raise ParseError(f"unknown node keys: {sorted(unknown)}")
    if "p" in obj:
        if not isinstance(obj["p"], numbers.Real) or isinstance(obj["p"], bool):
            raise ParseError("node probability must be a number")
        p = float(obj["p"])
    elif is_root:
        p = 1.0
    else:
        raise ParseError("non-root node is missing its probability")
    if not np.isfinite(p) or p <= 0:
        raise InvariantViolation(f"node probability {p!r} must be positive")
    children = obj.get("children", [])
    if not isinstance(children, list):
        raise ParseError("children must be a list")
    kids = tuple(_parse_json_node(c) for c in children)
    return (p, kids)
