"""Backend selection for the numerical core.

The compiled extension is used when it is importable; otherwise, or when
``LOCALFRAC_BACKEND=python`` is set, the pure-Python twin is used.
"""

import os

from localfrac import _pycore


def load(name=None):
    """Return the core module for ``name`` ("cython", "python" or None for auto)."""
    name = name or os.environ.get("LOCALFRAC_BACKEND", "auto")
    if name == "python":
        return _pycore
    try:
        from localfrac import _ccore
    except ImportError:
        if name == "cython":
            raise
        return _pycore
    return _ccore


core = load()
BACKEND = core.NAME

gamma = core.gamma
lgamma = core.lgamma
ml_series = core.ml_series
richardson = core.richardson
adaptive_simpson = core.adaptive_simpson
Program = core.Program
