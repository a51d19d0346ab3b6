"""Backend selection for the segment kernels.

The compiled extension is preferred when present; the numpy fallback is
semantically identical. Set ``MHLS_KERNELS=python`` (or ``cython``) to force
a backend; forcing ``cython`` raises if the extension was not built.
"""

import os

_requested = os.environ.get("MHLS_KERNELS", "auto").strip().lower()

if _requested in ("", "auto"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"
elif _requested in ("cython", "c"):
    from . import _kernels as _impl

    BACKEND = "cython"
elif _requested in ("python", "numpy", "py"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    raise ValueError(f"unknown MHLS_KERNELS value: {_requested!r}")

segment_sums = _impl.segment_sums
expand = _impl.expand
weighted_means = _impl.weighted_means
add_scaled_diff = _impl.add_scaled_diff


def backend_name():
    """Name of the kernel backend selected at import ('cython' or 'python')."""
    return BACKEND


def available_backends():
    """Mapping of backend name -> kernel module, for parity tests and benchmarks."""
    from . import _kernels_py

    backends = {"python": _kernels_py}
    try:
        from . import _kernels

        backends["cython"] = _kernels
    except ImportError:
        pass
    return backends
