"""Martingale fractional integration on finite filtration trees.

Probability trees model atomic filtrations; martingales arise by
conditioning terminal simple functions; three fractional-integration
operators weight the martingale differences by powers of atom masses; exact
Lorentz quasi-norms measure the outputs; and the lab module verifies the
operator identities and explicit endpoint bounds, both deterministically
and over seeded random ensembles.
"""

from .errors import (
    AtomNotFound,
    DegenerateSplit,
    InvalidExponent,
    InvalidSpec,
    InvariantViolation,
    LevelMismatch,
    LevelOutOfRange,
    MhlsError,
    NonDecreasingChain,
    NotATransform,
    ParseError,
    ProbabilityUnderflow,
    TreeMismatch,
)
from .filtration import (
    Atom,
    Chain,
    Dyadic,
    Explicit,
    FiltrationTree,
    Random,
    TreeSpec,
    Uniform,
    atom_mass_function,
    build_tree,
    deserialize_tree,
    min_child_mass_function,
    regularity_coefficient,
    serialize_tree,
)
from .fractional import (
    Exponents,
    OperatorKind,
    TransformTruncation,
    apply_atomic,
    apply_atomic_adjoint,
    apply_infimum,
    apply_predictable,
    apply_to_function,
    apply_transform,
    endpoint_weak_q,
    pair,
    split_adjoint,
    truncated_transform,
)
from .kernels import backend_name
from .lorentz import (
    DistributionFunction,
    distribution,
    lorentz_norm,
    lp_norm,
    weak_norm,
    weak_ratio,
)
from .martingale import (
    MartingaleSequence,
    SimpleFunction,
    atomic_function,
    condition,
    differences,
    maximal_function,
    single_step_martingale,
)
from .reports import ExperimentReport, TrialRow, emit_report, parse_report, write_report

__version__ = "0.1.0"
