"""Kernel backend selection: compiled extension if built, else pure Python.

Set TEAMCOUNT_PURE_PYTHON=1 to force the fallback.  `bench/kernel_bench.py`
compares the two backends on the same workloads.
"""

import os

if os.environ.get("TEAMCOUNT_PURE_PYTHON"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND

sat = _impl.sat
count_projected = _impl.count_projected
dualhorn_sat = _impl.dualhorn_sat


def count_models(num_vars, clauses, budget=None):
    """Model count over all variables (= projected count with every var free)."""
    return _impl.count_projected(num_vars, clauses, range(1, num_vars + 1), budget)
