"""Precomputed claim-variant embeddings and exact windowed top-k queries.

Vectors live in the FREMB1 container (little-endian): magic ``FREMB1\\0``
(7 bytes), version u8 = 1, u32 dimension, u64 record count, then per
record a u16 id byte-length, the UTF-8 id bytes, and ``dimension``
float32 values. Vectors are re-normalized to unit Euclidean norm on
import, so cosine similarity is a plain dot product.

The store is immutable after construction; concurrent readers need no
locking. Search is exact — candidate sets shrink during trajectories
and desk-scale pools are small enough that determinism beats an
approximate index.
"""

from __future__ import annotations

import enum
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import (
    BadMagic,
    DimensionMismatch,
    DomainError,
    DuplicateVariant,
    EmptyCandidates,
    EmptyWindow,
    NonFiniteVector,
    TruncatedFile,
    UnknownVariant,
)

MAGIC = b"FREMB1\0"
VERSION = 1


class WindowAggregate(enum.Enum):
    MEAN = "MEAN"
    CENTROID = "CENTROID"


class EmbeddingStore:
    """Immutable map of variant_id -> unit vector, plus similarity queries."""

    def __init__(self, dimension: int, ids: Sequence[str], matrix: np.ndarray) -> None:
        if dimension <= 0:
            raise DimensionMismatch(f"dimension must be positive, got {dimension}")
        if matrix.shape != (len(ids), dimension):
            raise DimensionMismatch(
                f"matrix shape {matrix.shape} does not match {len(ids)} x {dimension}"
            )
        self.dimension = dimension
        self.ids = list(ids)
        self.matrix = np.ascontiguousarray(matrix, dtype=np.float64)
        self._row = {vid: i for i, vid in enumerate(self.ids)}
        if len(self._row) != len(self.ids):
            raise DuplicateVariant("duplicate variant ids in embedding store")
        # Rank of each row's id in ascending id order; used for tie-breaking.
        order = sorted(range(len(self.ids)), key=self.ids.__getitem__)
        self.id_rank = np.empty(len(self.ids), dtype=np.int64)
        for rank, row in enumerate(order):
            self.id_rank[row] = rank

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, variant_id: str) -> bool:
        return variant_id in self._row

    def row(self, variant_id: str) -> int:
        try:
            return self._row[variant_id]
        except KeyError:
            raise UnknownVariant(f"variant not in embedding store: {variant_id}") from None

    def rows(self, variant_ids: Iterable[str]) -> np.ndarray:
        return np.array([self.row(v) for v in variant_ids], dtype=np.int64)

    def vector(self, variant_id: str) -> np.ndarray:
        return self.matrix[self.row(variant_id)]

    def _window_rows(self, window: Sequence[str]) -> np.ndarray:
        if len(window) == 0:
            raise EmptyWindow("similarity window is empty")
        rows = self.rows(window)
        # Sorting makes the mean aggregate exactly permutation-invariant.
        rows.sort()
        return rows

    def window_similarity(
        self,
        candidate: str,
        window: Sequence[str],
        aggregate: WindowAggregate = WindowAggregate.MEAN,
    ) -> float:
        """Mean cosine between the candidate and each window member.

        With CENTROID aggregation, the cosine against the normalized
        window centroid instead. Result is in [-1, 1].
        """
        rows = self._window_rows(window)
        cand = np.array([self.row(candidate)], dtype=np.int64)
        scores = kernels.window_scores(
            self.matrix, cand, rows, centroid=aggregate is WindowAggregate.CENTROID
        )
        return float(scores[0])

    def top_k_candidates(
        self,
        candidates: Iterable[str],
        window: Sequence[str],
        k: int,
        aggregate: WindowAggregate = WindowAggregate.MEAN,
    ) -> list[tuple[str, float]]:
        """The min(k, n) most window-similar candidates, best first.

        Ordered by score descending, ties by variant_id ascending; exact
        (no approximate index).
        """
        if k < 1:
            raise DomainError(f"k must be >= 1, got {k}")
        cand_rows = self.rows(candidates)
        if len(cand_rows) == 0:
            raise EmptyCandidates("no candidates to rank")
        win_rows = self._window_rows(window)
        scores = kernels.window_scores(
            self.matrix, cand_rows, win_rows,
            centroid=aggregate is WindowAggregate.CENTROID,
        )
        picked = kernels.top_k(scores, self.id_rank[cand_rows], k)
        return [(self.ids[cand_rows[p]], float(scores[p])) for p in picked]


def _normalized(values: np.ndarray, context: str) -> np.ndarray:
    vec = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(vec)):
        raise NonFiniteVector(f"non-finite value in vector for {context}")
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise NonFiniteVector(f"zero-norm vector for {context}")
    return vec / norm


def build_store(pairs: Iterable[tuple[str, Sequence[float]]], dimension: int) -> EmbeddingStore:
    """Assemble a store from (variant_id, vector) pairs, normalizing each vector."""
    ids: list[str] = []
    rows: list[np.ndarray] = []
    for vid, values in pairs:
        vec = np.asarray(values, dtype=np.float64)
        if vec.shape != (dimension,):
            raise DimensionMismatch(
                f"vector for {vid} has shape {vec.shape}, expected ({dimension},)"
            )
        ids.append(str(vid))
        rows.append(_normalized(vec, str(vid)))
    matrix = np.vstack(rows) if rows else np.empty((0, dimension), dtype=np.float64)
    return EmbeddingStore(dimension, ids, matrix)


def import_store(path) -> EmbeddingStore:
    """Load and validate a FREMB1 file, re-normalizing every vector."""
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + 1:
        raise TruncatedFile(f"file too short for FREMB1 header: {path}")
    if data[: len(MAGIC)] != MAGIC:
        raise BadMagic(f"not a FREMB1 file: {path}")
    version = data[len(MAGIC)]
    if version != VERSION:
        raise BadMagic(f"unsupported FREMB1 version {version}")
    offset = len(MAGIC) + 1
    if len(data) < offset + 12:
        raise TruncatedFile("header cut off before dimension/count")
    dimension = struct.unpack_from("<I", data, offset)[0]
    count = struct.unpack_from("<Q", data, offset + 4)[0]
    offset += 12
    if dimension == 0:
        raise DimensionMismatch("header declares zero dimension")

    ids: list[str] = []
    matrix = np.empty((count, dimension), dtype=np.float64)
    vec_bytes = 4 * dimension
    for i in range(count):
        if offset + 2 > len(data):
            raise TruncatedFile(f"record {i}: id length cut off")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len + vec_bytes > len(data):
            raise TruncatedFile(f"record {i}: payload cut off")
        try:
            vid = data[offset : offset + id_len].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise TruncatedFile(f"record {i}: corrupt id bytes") from exc
        offset += id_len
        raw = np.frombuffer(data, dtype="<f4", count=dimension, offset=offset)
        offset += vec_bytes
        ids.append(vid)
        matrix[i] = _normalized(raw, vid)
    if offset != len(data):
        raise TruncatedFile(f"{len(data) - offset} trailing bytes after {count} records")
    return EmbeddingStore(dimension, ids, matrix)


def export_store(store: EmbeddingStore, path) -> None:
    """Write a store in the FREMB1 container (vectors as float32)."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<B", VERSION))
        fh.write(struct.pack("<I", store.dimension))
        fh.write(struct.pack("<Q", len(store)))
        for vid, row in zip(store.ids, store.matrix):
            encoded = vid.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise DomainError(f"variant id too long to serialize: {vid[:40]}...")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(row.astype("<f4").tobytes())
