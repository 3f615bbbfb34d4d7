"""Numba acceleration switch for the hot numeric kernels.

Every kernel in :mod:`phri.kernels` is written as plain numpy and wrapped with
:func:`maybe_njit`.  By default the kernels are compiled with ``numba.njit``;
setting the environment variable ``PHRI_DISABLE_NUMBA=1`` (before import)
selects the pure-numpy fallback, which computes identical values but is much
slower.  ``benchmarks/bench_kernels.py`` compares the two paths.
"""
from __future__ import annotations

import os

_DISABLE_VAR = "PHRI_DISABLE_NUMBA"


def numba_enabled() -> bool:
    return os.environ.get(_DISABLE_VAR, "0") not in ("1", "true", "yes")


if numba_enabled():
    from numba import njit as _njit

    def maybe_njit(fn):
        # fastmath stays off: the fallback path must produce the same floats
        return _njit(cache=True)(fn)

    BACKEND = "numba"
else:

    def maybe_njit(fn):
        return fn

    BACKEND = "numpy"
