"""Selects the compiled census kernel when available.

Set ``SYRLAB_PURE_PYTHON=1`` to force the reference implementation.
"""

import os

from . import _pykernel

walk_segment = _pykernel.walk_segment

try:
    if os.environ.get("SYRLAB_PURE_PYTHON") == "1":
        raise ImportError("pure-python kernel forced")
    from . import _ckernel
except ImportError:
    _ckernel = None

if _ckernel is not None:
    census_shard = _ckernel.census_shard
    BACKEND = "cython"
else:
    census_shard = _pykernel.census_shard
    BACKEND = "python"

py_census_shard = _pykernel.census_shard
c_census_shard = _ckernel.census_shard if _ckernel is not None else None
