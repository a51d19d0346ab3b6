"""Exact distribution functions, L_p norms and Lorentz quasi-norms for
simple functions on atomic probability spaces.

Everything is closed-form: the survival function P(|f| > t) of a simple
function is a right-continuous step function, so every norm integral is a
finite sum. Power sums are evaluated with max-scaling so that large
exponents neither overflow nor lose the leading term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidExponent
from .martingale import SimpleFunction


@dataclass(frozen=True, eq=False)
class DistributionFunction:
    """Step representation of t -> P(|f| > t).

    ``thresholds`` are 0 = t_0 < t_1 < ... < t_k (the distinct |values|,
    with 0 always present); ``masses[i]`` is the survival probability on
    [t_i, t_{i+1}), and masses[k] = 0 beyond the maximum.
    """

    thresholds: np.ndarray = field(repr=False)
    masses: np.ndarray = field(repr=False)

    def survival(self, t: float) -> float:
        """P(|f| > t), right-continuous in t."""
        if t < 0.0:
            return 1.0
        i = int(np.searchsorted(self.thresholds, t, side="right")) - 1
        return float(self.masses[i])

    @property
    def max_value(self) -> float:
        return float(self.thresholds[-1])

    def __repr__(self):
        return f"DistributionFunction(steps={self.thresholds.shape[0] - 1})"


def distribution(f: SimpleFunction) -> DistributionFunction:
    """Exact survival step function of |f| under the atom masses."""
    av = np.abs(f.values)
    uniq, inverse = np.unique(av, return_inverse=True)
    mass = np.bincount(inverse, weights=f.tree.masses(f.level))
    if uniq[0] != 0.0:
        uniq = np.concatenate(([0.0], uniq))
        mass = np.concatenate(([0.0], mass))
    above = np.cumsum(mass[::-1])[::-1]
    surv = np.concatenate((above[1:], [0.0]))
    uniq.flags.writeable = False
    surv.flags.writeable = False
    return DistributionFunction(uniq, surv)


def lp_norm(f: SimpleFunction, p: float) -> float:
    """(sum P(atom) |value|^p)^(1/p); max|value| for p = infinity."""
    if not (p >= 1.0):
        raise InvalidExponent(f"p must be >= 1, got {p}")
    av = np.abs(f.values)
    vmax = float(av.max()) if av.size else 0.0
    if vmax == 0.0 or math.isinf(p):
        return vmax
    w = f.tree.masses(f.level)
    return vmax * float(np.sum(w * (av / vmax) ** p)) ** (1.0 / p)


def lorentz_norm(f: SimpleFunction, p: float, q: float) -> float:
    """Quasi-norm || t P(|f|>t)^(1/p) ||_{L_q(dt/t)}, evaluated exactly.

    For finite q this is (sum_i d_i^(q/p) (t_{i+1}^q - t_i^q)/q)^(1/q) over
    the steps of the survival function; for q = infinity it is the maximum
    of t_{i+1} d_i^(1/p) (the supremum on each step sits at its right end).
    """
    _check_lorentz_exponents(p, q)
    return _lorentz_from_distribution(distribution(f), p, q)


def _check_lorentz_exponents(p, q):
    if not (p > 1.0) or math.isinf(p):
        raise InvalidExponent(f"first Lorentz exponent must be finite and > 1, got {p}")
    if not (q >= 1.0):
        raise InvalidExponent(f"second Lorentz exponent must be >= 1, got {q}")


def _lorentz_from_distribution(dist: DistributionFunction, p: float, q: float) -> float:
    thr = dist.thresholds
    d = dist.masses
    k = thr.shape[0] - 1
    if k == 0:
        return 0.0
    tmax = thr[-1]
    s = thr / tmax
    if math.isinf(q):
        return float(tmax * np.max(s[1:] * d[:k] ** (1.0 / p)))
    terms = d[:k] ** (q / p) * (s[1:] ** q - s[:k] ** q)
    return float(tmax * (np.sum(terms) / q) ** (1.0 / q))


def weak_ratio(f: SimpleFunction, q: float, lam: float) -> float:
    """lambda * P(|f| > lambda)^(1/q); its supremum over lambda is the
    L_{q,infinity} quasi-norm."""
    if not lam > 0.0:
        raise InvalidExponent(f"threshold must be positive, got {lam}")
    if not (q >= 1.0):
        raise InvalidExponent(f"q must be >= 1, got {q}")
    return float(lam * distribution(f).survival(lam) ** (1.0 / q))


def weak_norm(f: SimpleFunction, q: float) -> float:
    """The L_{q,infinity} quasi-norm sup_t t P(|f|>t)^(1/q)."""
    _check_lorentz_exponents(q, math.inf)
    return _lorentz_from_distribution(distribution(f), q, math.inf)
