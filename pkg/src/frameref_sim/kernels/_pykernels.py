"""NumPy implementations of the similarity kernels (fallback backend)."""

from __future__ import annotations

import numpy as np


def window_scores(
    matrix: np.ndarray,
    candidate_idx: np.ndarray,
    window_idx: np.ndarray,
    centroid: bool = False,
) -> np.ndarray:
    """Similarity of each candidate row to the window rows.

    Mean mode averages the candidate's dot product with every window
    member; centroid mode takes the dot product with the unit-normalized
    window mean (zero-norm centroid scores everything 0).
    """
    cand = matrix[candidate_idx]
    if centroid:
        center = matrix[window_idx].mean(axis=0)
        norm = float(np.linalg.norm(center))
        if norm == 0.0:
            return np.zeros(len(candidate_idx), dtype=np.float64)
        return cand @ (center / norm)
    per_member = cand @ matrix[window_idx].T
    return per_member.sum(axis=1) / float(len(window_idx))


def top_k(scores: np.ndarray, id_rank: np.ndarray, k: int) -> np.ndarray:
    """Positions of the best min(k, n) scores, ties broken by id_rank ascending."""
    m = min(k, len(scores))
    order = np.lexsort((id_rank, -scores))[:m]
    return order.astype(np.int64)
