"""Pure numpy implementations of the per-level segment kernels.

Arrays describing a level are contiguous: ``bounds`` has one more entry
than there are segments, segment ``i`` covers ``x[bounds[i]:bounds[i+1]]``,
and no segment is empty.
"""

import numpy as np


def segment_sums(x, bounds):
    """Sum ``x`` over each segment."""
    return np.add.reduceat(x, bounds[:-1])


def expand(values, bounds):
    """Broadcast one value per segment back to the underlying positions."""
    return np.repeat(values, np.diff(bounds))


def weighted_means(x, weights, bounds, inv_mass):
    """Per-segment weighted averages: sum(w*x) over each segment times inv_mass."""
    return np.add.reduceat(x * weights, bounds[:-1]) * inv_mass


def add_scaled_diff(out, coeff, cur, prev):
    """In place: out += coeff * (cur - prev)."""
    out += coeff * (cur - prev)
    return out
