"""Kernel backend selection.

Set TA_NO_NUMBA=1 to force the pure-numpy path (useful on platforms without
a working numba, and as the reference in benchmarks).  The numba path is
used by default when importable.
"""

import os


def load_backend(force_numpy: bool | None = None):
    if force_numpy is None:
        force_numpy = os.environ.get("TA_NO_NUMBA", "") not in ("", "0")
    if not force_numpy:
        try:
            from . import _kernels_numba as mod
            return mod
        except ImportError:
            pass
    from . import _kernels_numpy as mod
    return mod


_backend = load_backend()

BACKEND = _backend.BACKEND
token_ratios = _backend.token_ratios
kl_terms = _backend.kl_terms
clipped_terms = _backend.clipped_terms
