"""Similarity kernels with a compiled fast path and a NumPy fallback.

The compiled extension is preferred when it imports cleanly. Set
``FLAVORBENCH_KERNELS=python`` to force the NumPy backend or
``FLAVORBENCH_KERNELS=c`` to require the extension (ImportError if it is
not built). ``BACKEND`` reports which one is active; ``backends()`` lists
every importable backend for tests and benchmarks.

Both backends expose:
    pairwise_cosine_flat(unit)        -> float64[n*(n-1)/2]
    group_pair_stats(unit, starts)    -> (means, mins) per contiguous group
    topk_neighbors(unit, queries, k)  -> int64[len(queries), k]
    within_cross_means(unit, codes)   -> (within, cross) per row
"""

import os

from . import _pykernels

_FORCE = os.environ.get("FLAVORBENCH_KERNELS", "auto").strip().lower()

_compiled = None
if _FORCE in ("auto", "c", "cython", "compiled"):
    try:
        from . import _ckernels as _compiled
    except ImportError:
        if _FORCE != "auto":
            raise ImportError(
                "FLAVORBENCH_KERNELS requested the compiled backend but "
                "flavorbench.kernels._ckernels is not built"
            )
elif _FORCE not in ("python", "py", "numpy"):
    raise ValueError(f"unrecognized FLAVORBENCH_KERNELS value: {_FORCE!r}")

_active = _compiled if _compiled is not None else _pykernels
BACKEND = "c" if _compiled is not None else "python"

pairwise_cosine_flat = _active.pairwise_cosine_flat
group_pair_stats = _active.group_pair_stats
topk_neighbors = _active.topk_neighbors
within_cross_means = _active.within_cross_means


def backends():
    """Importable backends as {name: module}, for tests and benchmarks."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels
        found["c"] = _ckernels
    except ImportError:
        pass
    return found
