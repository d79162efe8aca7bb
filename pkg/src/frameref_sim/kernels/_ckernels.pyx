# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled similarity kernels (hot path of trajectory sampling)."""

from libc.math cimport sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()


def window_scores(
    cnp.float64_t[:, ::1] matrix,
    cnp.int64_t[::1] candidate_idx,
    cnp.int64_t[::1] window_idx,
    bint centroid=False,
):
    """Similarity of each candidate row to the window rows (see _pykernels)."""
    cdef Py_ssize_t n_cand = candidate_idx.shape[0]
    cdef Py_ssize_t n_win = window_idx.shape[0]
    cdef Py_ssize_t dim = matrix.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n_cand, dtype=np.float64)
    cdef cnp.float64_t[::1] out_v = out
    cdef cnp.ndarray[cnp.float64_t, ndim=1] center
    cdef cnp.float64_t[::1] center_v
    cdef Py_ssize_t i, j, c
    cdef double acc, dot, norm

    if centroid:
        center = np.zeros(dim, dtype=np.float64)
        center_v = center
        for j in range(n_win):
            for c in range(dim):
                center_v[c] += matrix[window_idx[j], c]
        norm = 0.0
        for c in range(dim):
            center_v[c] /= n_win
            norm += center_v[c] * center_v[c]
        norm = sqrt(norm)
        if norm == 0.0:
            out[:] = 0.0
            return out
        for c in range(dim):
            center_v[c] /= norm
        with nogil:
            for i in range(n_cand):
                dot = 0.0
                for c in range(dim):
                    dot += matrix[candidate_idx[i], c] * center_v[c]
                out_v[i] = dot
        return out

    with nogil:
        for i in range(n_cand):
            acc = 0.0
            for j in range(n_win):
                dot = 0.0
                for c in range(dim):
                    dot += matrix[candidate_idx[i], c] * matrix[window_idx[j], c]
                acc += dot
            out_v[i] = acc / n_win
    return out


def top_k(
    cnp.float64_t[::1] scores,
    cnp.int64_t[::1] id_rank,
    Py_ssize_t k,
):
    """Positions of the best min(k, n) scores, ties broken by id_rank ascending."""
    cdef Py_ssize_t n = scores.shape[0]
    cdef Py_ssize_t m = k if k < n else n
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(m, dtype=np.int64)
    cdef cnp.int64_t[::1] out_v = out

    # Bounded insertion sort over the current best m entries; for the small
    # k used in sampling this is one cache-friendly pass over the scores.
    cdef cnp.ndarray[cnp.float64_t, ndim=1] best_s = np.empty(m, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] best_r = np.empty(m, dtype=np.int64)
    cdef cnp.float64_t[::1] bs = best_s
    cdef cnp.int64_t[::1] br = best_r
    cdef Py_ssize_t filled = 0
    cdef Py_ssize_t i, pos, shift
    cdef double s
    cdef cnp.int64_t r

    with nogil:
        for i in range(n):
            s = scores[i]
            r = id_rank[i]
            if filled == m:
                # Worse than the current cutoff: skip without shifting.
                if s < bs[m - 1] or (s == bs[m - 1] and r > br[m - 1]):
                    continue
            pos = filled
            while pos > 0 and (s > bs[pos - 1] or (s == bs[pos - 1] and r < br[pos - 1])):
                pos -= 1
            if filled < m:
                filled += 1
            shift = filled - 1
            while shift > pos:
                bs[shift] = bs[shift - 1]
                br[shift] = br[shift - 1]
                out_v[shift] = out_v[shift - 1]
                shift -= 1
            bs[pos] = s
            br[pos] = r
            out_v[pos] = i
    return out
