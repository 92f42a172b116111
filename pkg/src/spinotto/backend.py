"""Kernel backend selection.

The hot inner loops (segment-map composition, noisy ensembles) exist in
two interchangeable implementations: numba JIT (default when importable)
and pure numpy.  Selection is controlled by the ``ENGINE_BACKEND``
environment variable: ``numba``, ``numpy``, or unset for auto.
"""

from __future__ import annotations

import os
import warnings

_requested = os.environ.get("ENGINE_BACKEND", "").strip().lower()
if _requested not in ("", "auto", "numba", "numpy"):
    raise RuntimeError(
        f"ENGINE_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

if _requested == "numpy":
    from . import _kernels_numpy as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _kernels_numba as _impl

        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        warnings.warn("numba unavailable, falling back to numpy kernels")
        from . import _kernels_numpy as _impl

        BACKEND = "numpy"

segment_maps = _impl.segment_maps
compose_adiabat_map = _impl.compose_adiabat_map
adiabat_boundary_states = _impl.adiabat_boundary_states
noisy_branch = _impl.noisy_branch
mc_cycles = _impl.mc_cycles
mean_adiabat_map = _impl.mean_adiabat_map
