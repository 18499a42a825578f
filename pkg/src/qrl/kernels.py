"""Backend selection for the amplitude kernels.

The compiled :mod:`qrl._core` extension is preferred.  Set ``QRL_PURE_PYTHON=1``
to force the numpy fallback (useful for benchmarking and for cross-checking
the two implementations).
"""
from __future__ import annotations

import os

from . import _fallback

try:
    if os.environ.get("QRL_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure python requested")
    from . import _core as _impl

    BACKEND = "compiled"
except ImportError:
    _impl = _fallback
    BACKEND = "python"

controlled_shift = _impl.controlled_shift
apply_matrix = _impl.apply_matrix
outcome_probabilities = _impl.outcome_probabilities
collapse = _impl.collapse


def available_backends():
    """Map backend name to kernel module for every importable implementation."""
    found = {"python": _fallback}
    try:
        from . import _core

        found["compiled"] = _core
    except ImportError:
        pass
    return found
