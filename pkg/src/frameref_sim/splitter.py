"""Leakage-free train/dev/test splits over shared-evidence components.

Claims citing a common evidence page must land in the same split, so
groups are first merged into connected components (two groups are
connected when any chain of shared pages links them), and whole
components are then assigned to splits.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import IO, Mapping, Sequence

import numpy as np

from .errors import CoverageMismatch, EmptyIndex, InvalidRatios, SchemaViolation
from ._jsonl import iter_lines

EvidenceIndex = Mapping[str, frozenset]


class Split(enum.Enum):
    TRAIN = "TRAIN"
    DEV = "DEV"
    TEST = "TEST"


@dataclass
class SplitAssignment:
    by_group: dict[str, Split]
    counts: dict[Split, int]
    # group_id -> component index, in assignment order (smallest component first)
    component_of: dict[str, int]


@dataclass
class LeakageReport:
    ok: bool
    violations: list = field(default_factory=list)


class _UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def load_evidence_index(source) -> dict[str, frozenset]:
    """Read a line-delimited evidence index: {"group_id": ..., "pages": [...]}."""
    index: dict[str, frozenset] = {}
    for line in iter_lines(source):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"invalid evidence record: {exc}") from exc
        if not isinstance(obj, dict) or "group_id" not in obj or "pages" not in obj:
            raise SchemaViolation("evidence record needs group_id and pages")
        pages = obj["pages"]
        if not isinstance(pages, list) or not pages:
            raise SchemaViolation(f"group {obj['group_id']!r} has no evidence pages")
        index[str(obj["group_id"])] = frozenset(str(p) for p in pages)
    return index


def build_components(index: EvidenceIndex) -> list[frozenset]:
    """Partition groups into components connected by shared evidence pages.

    Components are disjoint, cover every group, and are returned in a
    deterministic order (ascending smallest member id).
    """
    if not index:
        raise EmptyIndex("evidence index is empty")
    groups = sorted(index)
    pos = {g: i for i, g in enumerate(groups)}
    uf = _UnionFind(len(groups))

    first_with_page: dict[str, int] = {}
    for g in groups:
        for page in index[g]:
            anchor = first_with_page.setdefault(page, pos[g])
            uf.union(anchor, pos[g])

    members: dict[int, list[str]] = {}
    for g in groups:
        members.setdefault(uf.find(pos[g]), []).append(g)
    components = [frozenset(m) for m in members.values()]
    components.sort(key=lambda c: min(c))
    return components


def assign_splits(
    components: Sequence[frozenset],
    ratios: tuple[float, float, float] = (0.80, 0.10, 0.10),
    seed: int = 0,
) -> SplitAssignment:
    """Assign whole components to TRAIN/DEV/TEST by quota-deficit greedy fill.

    Components are shuffled by ``seed`` and then stably sorted by size
    ascending (so equal-size components keep a seed-dependent order while
    sizes stay monotone), and each is given to the split whose remaining
    quota deficit (ratio x total groups minus groups already assigned) is
    largest, ties resolved in TRAIN/DEV/TEST order.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise InvalidRatios(f"ratios must be three positive numbers, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise InvalidRatios(f"ratios must sum to 1, got {sum(ratios)}")

    # Canonical order before shuffling so a given seed yields the same
    # split on every platform.
    ordered = sorted(components, key=lambda c: min(c))
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ordered))
    shuffled = [ordered[i] for i in perm]
    shuffled.sort(key=len)  # stable: equal sizes keep shuffled order

    total = sum(len(c) for c in shuffled)
    quotas = {split: ratio * total for split, ratio in zip(Split, ratios)}
    assigned = {split: 0 for split in Split}
    by_group: dict[str, Split] = {}
    component_of: dict[str, int] = {}

    for idx, component in enumerate(shuffled):
        target = max(Split, key=lambda s: (quotas[s] - assigned[s], -list(Split).index(s)))
        assigned[target] += len(component)
        for g in component:
            by_group[g] = target
            component_of[g] = idx

    return SplitAssignment(by_group=by_group, counts=assigned, component_of=component_of)


def verify_no_leakage(assignment: SplitAssignment, index: EvidenceIndex) -> LeakageReport:
    """Check that no evidence page spans two splits.

    Raises CoverageMismatch unless the assignment covers exactly the
    groups of the index.
    """
    index_groups = set(index)
    assigned_groups = set(assignment.by_group)
    if index_groups != assigned_groups:
        missing = sorted(index_groups - assigned_groups)[:5]
        extra = sorted(assigned_groups - index_groups)[:5]
        raise CoverageMismatch(
            f"assignment does not match index (missing={missing}, extra={extra})"
        )

    page_splits: dict[str, set] = {}
    for group, pages in index.items():
        split = assignment.by_group[group]
        for page in pages:
            page_splits.setdefault(page, set()).add(split)

    violations = [
        {"page": page, "splits": sorted(s.value for s in splits)}
        for page, splits in sorted(page_splits.items())
        if len(splits) > 1
    ]
    return LeakageReport(ok=not violations, violations=violations)


def write_assignment(assignment: SplitAssignment, out: IO[str]) -> None:
    for group_id in sorted(assignment.by_group):
        record = {"group_id": group_id, "split": assignment.by_group[group_id].value}
        out.write(json.dumps(record, sort_keys=True, separators=(",", ":")))
        out.write("\n")


def load_assignment(source) -> dict[str, Split]:
    result: dict[str, Split] = {}
    for line in iter_lines(source):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"invalid assignment record: {exc}") from exc
        if "group_id" not in obj or "split" not in obj:
            raise SchemaViolation("assignment record needs group_id and split")
        try:
            result[str(obj["group_id"])] = Split[str(obj["split"]).upper()]
        except KeyError:
            raise SchemaViolation(f"unknown split name: {obj['split']!r}") from None
    return result
