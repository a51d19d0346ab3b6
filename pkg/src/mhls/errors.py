"""Exception types raised across the package."""


class MhlsError(Exception):
    """Base class for all package-specific errors."""


class InvalidSpec(MhlsError):
    """A tree specification is malformed or cannot be realized."""


class NonDecreasingChain(InvalidSpec):
    """Chain probabilities must satisfy 1 = r_0 > r_1 > ... > r_N > 0."""


class ProbabilityUnderflow(InvalidSpec):
    """An atom probability would fall below the representable floor (1e-300)."""


class ParseError(MhlsError):
    """A serialized tree or function document is not well formed."""


class InvariantViolation(MhlsError):
    """A structural invariant (e.g. children masses summing to the parent) fails."""


class LevelOutOfRange(MhlsError, IndexError):
    """A level index lies outside 0..depth for the given tree."""


class TreeMismatch(MhlsError):
    """Two objects that must share a tree belong to different trees."""


class AtomNotFound(MhlsError, KeyError):
    """No atom with the requested address exists in the tree."""


class DegenerateSplit(MhlsError):
    """A single-step martingale needs a strict split: P(v) < P(parent)."""


class LevelMismatch(MhlsError):
    """A function is not measurable at the requested level."""


class NotATransform(MhlsError):
    """The requested truncation is not a martingale transform."""


class InvalidExponent(MhlsError, ValueError):
    """Exponents violate their admissible range or coupling constraint."""
