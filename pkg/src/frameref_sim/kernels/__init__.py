"""Hot-loop kernels with a compiled core and a NumPy fallback.

The compiled extension (``_ckernels``) is used when it was built;
otherwise the NumPy implementation (``_pykernels``) takes over. Set
``FRAMEREF_SIM_KERNELS=python`` (or ``cython``) to force a backend —
forcing ``cython`` when the extension is missing raises at import.

Both backends expose the same two functions:

``window_scores(matrix, candidate_idx, window_idx, centroid)``
    Score each candidate row against the window rows: the arithmetic
    mean of per-member dot products, or the dot product with the
    normalized window centroid when ``centroid`` is true.

``top_k(scores, id_rank, k)``
    Positions of the ``min(k, n)`` best scores, ordered by score
    descending then ``id_rank`` ascending (exact, tie-stable).
"""

import os

_requested = os.environ.get("FRAMEREF_SIM_KERNELS", "").strip().lower()

if _requested in ("", "cython"):
    try:
        from ._ckernels import top_k, window_scores

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        from ._pykernels import top_k, window_scores

        BACKEND = "python"
elif _requested == "python":
    from ._pykernels import top_k, window_scores

    BACKEND = "python"
else:
    raise ImportError(f"unknown FRAMEREF_SIM_KERNELS value: {_requested!r}")

__all__ = ["BACKEND", "top_k", "window_scores"]
