"""Kernel backend selection.

Hot per-event kernels exist in two flavors: a numba ``@njit`` version and a
pure-numpy fallback. ``ANOMSTREAM_BACKEND`` picks the default at import time:

* ``numba`` (default when numba imports) — loop kernels are JIT compiled.
* ``numpy`` — vectorized/interpreted fallbacks, no numba required.

Both flavors stay importable regardless of the default so the benchmark and
the equivalence tests can compare them side by side.
"""

import os
import warnings

_requested = os.environ.get("ANOMSTREAM_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "numba", "numpy"):
    warnings.warn(
        f"ANOMSTREAM_BACKEND={_requested!r} not recognized, falling back to 'auto'"
    )
    _requested = "auto"

HAVE_NUMBA = False
if _requested in ("auto", "numba"):
    try:
        import numba  # noqa: F401

        HAVE_NUMBA = True
    except ImportError:
        if _requested == "numba":
            warnings.warn("numba requested but not importable; using numpy backend")

BACKEND = "numba" if (HAVE_NUMBA and _requested != "numpy") else "numpy"
USE_NUMBA = BACKEND == "numba"


def jit(fn):
    """Compile ``fn`` with numba when available, else return it unchanged.

    Compilation is lazy (first call), so fallback-only runs never pay it.
    """
    if not HAVE_NUMBA:
        return fn
    from numba import njit

    return njit(cache=True)(fn)


def pick(jit_fn, numpy_fn):
    """Select the default implementation of a kernel pair for this process."""
    return jit_fn if USE_NUMBA else numpy_fn
