"""Claim records: parsing, validation, and the unseen-claim pool.

Records are line-delimited JSON (one object per line, UTF-8) in one of
two schemas:

* ``RAW``: full provenance rows — claim_id, claim_text, true_label,
  restated_claim, framing_type, verification_passed, verification_reason,
  generation_model, verification_model.
* ``SPLIT``: distribution rows — claim_id, true_label, restated_claim,
  framing_type, plus an optional ``messages`` field that is accepted and
  ignored.

Labels serialize exactly as ``SUPPORTS``/``REFUTES``; framing tags are
case-insensitive on input and canonical uppercase on output.
"""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Union

from ._jsonl import iter_lines
from .errors import (
    DuplicateVariant,
    MalformedRecord,
    SchemaViolation,
    UnknownFraming,
    UnknownGroup,
    UnknownLabel,
)


class FramingType(enum.Enum):
    ORIGINAL = "ORIGINAL"
    AUTHORITATIVE = "AUTHORITATIVE"
    CONSENSUS = "CONSENSUS"
    EMOTIONAL = "EMOTIONAL"
    PRESTIGE = "PRESTIGE"
    SENSATIONALIST = "SENSATIONALIST"

    @classmethod
    def parse(cls, value) -> "FramingType":
        # None / empty framing tags mean the claim is unframed.
        if value is None or (isinstance(value, str) and value.strip() == ""):
            return cls.ORIGINAL
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                pass
        raise UnknownFraming(f"unknown framing_type: {value!r}")


class Label(enum.Enum):
    SUPPORTS = "SUPPORTS"
    REFUTES = "REFUTES"

    @classmethod
    def parse(cls, value) -> "Label":
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                pass
        raise UnknownLabel(f"unknown true_label: {value!r}")


class RecordSchema(enum.Enum):
    RAW = "raw"
    SPLIT = "split"


RAW_FIELDS = (
    "claim_id",
    "claim_text",
    "true_label",
    "restated_claim",
    "framing_type",
    "verification_passed",
    "verification_reason",
    "generation_model",
    "verification_model",
)
SPLIT_FIELDS = ("claim_id", "true_label", "restated_claim", "framing_type")
SPLIT_OPTIONAL_FIELDS = ("messages",)


@dataclass(frozen=True)
class ClaimVariant:
    """One framed claim with its ground-truth label (the simulation state unit)."""

    variant_id: str
    group_id: str
    framing: FramingType
    text: str
    true_label: Label


@dataclass
class RawRecord:
    claim_id: str
    claim_text: str
    true_label: Label
    restated_claim: str
    framing_type: FramingType
    verification_passed: bool
    verification_reason: str
    generation_model: str
    verification_model: str

    @property
    def text(self) -> str:
        # Original rows may leave restated_claim blank; fall back to the
        # untouched claim text.
        return self.restated_claim if self.restated_claim else self.claim_text

    def to_variant(self) -> ClaimVariant:
        return ClaimVariant(
            variant_id=make_variant_id(self.claim_id, self.framing_type),
            group_id=str(self.claim_id),
            framing=self.framing_type,
            text=self.text,
            true_label=self.true_label,
        )


def make_variant_id(claim_id: str, framing: FramingType) -> str:
    """Deterministic per-variant id for sources without an explicit one."""
    return f"{claim_id}::{framing.value}"


def _load_object(line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"invalid JSON record: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedRecord(f"record is not an object: {line[:80]!r}")
    return obj


def _check_fields(obj: dict, required, optional=()) -> None:
    missing = [f for f in required if f not in obj]
    if missing:
        raise SchemaViolation(f"missing required field(s): {', '.join(missing)}")
    extra = [k for k in obj if k not in required and k not in optional]
    if extra:
        raise SchemaViolation(f"unexpected field(s): {', '.join(sorted(extra))}")


def parse_record(line: str, schema: RecordSchema) -> Union[RawRecord, ClaimVariant]:
    """Parse one line into a ``RawRecord`` (RAW) or ``ClaimVariant`` (SPLIT)."""
    obj = _load_object(line)
    if schema is RecordSchema.RAW:
        _check_fields(obj, RAW_FIELDS)
        if not isinstance(obj["verification_passed"], bool):
            raise SchemaViolation(
                f"verification_passed must be a boolean, got {obj['verification_passed']!r}"
            )
        record = RawRecord(
            claim_id=str(obj["claim_id"]),
            claim_text=str(obj["claim_text"] or ""),
            true_label=Label.parse(obj["true_label"]),
            restated_claim=str(obj["restated_claim"] or ""),
            framing_type=FramingType.parse(obj["framing_type"]),
            verification_passed=obj["verification_passed"],
            verification_reason=str(obj["verification_reason"] or ""),
            generation_model=str(obj["generation_model"] or ""),
            verification_model=str(obj["verification_model"] or ""),
        )
        if not record.text:
            raise SchemaViolation("record has neither restated_claim nor claim_text")
        return record

    _check_fields(obj, SPLIT_FIELDS, optional=SPLIT_OPTIONAL_FIELDS)
    text = str(obj["restated_claim"] or "")
    if not text:
        raise SchemaViolation("restated_claim must be non-empty")
    framing = FramingType.parse(obj["framing_type"])
    return ClaimVariant(
        variant_id=make_variant_id(str(obj["claim_id"]), framing),
        group_id=str(obj["claim_id"]),
        framing=framing,
        text=text,
        true_label=Label.parse(obj["true_label"]),
    )


class ClaimPool:
    """Claim variants grouped by claim id, with per-label/per-framing counters.

    Mutation is single-writer; trajectory workers take ``snapshot()`` copies.
    """

    def __init__(self) -> None:
        self.groups: dict[str, list[ClaimVariant]] = {}
        self._by_variant: dict[str, ClaimVariant] = {}
        self.label_counts: Counter = Counter()
        self.framing_counts: Counter = Counter()

    def __len__(self) -> int:
        return len(self._by_variant)

    @property
    def group_count(self) -> int:
        return len(self.groups)

    def add(self, variant: ClaimVariant) -> None:
        if variant.variant_id in self._by_variant:
            raise DuplicateVariant(f"duplicate variant_id: {variant.variant_id}")
        self.groups.setdefault(variant.group_id, []).append(variant)
        self._by_variant[variant.variant_id] = variant
        self.label_counts[variant.true_label] += 1
        self.framing_counts[variant.framing] += 1

    def get(self, variant_id: str) -> ClaimVariant:
        try:
            return self._by_variant[variant_id]
        except KeyError:
            raise UnknownGroup(f"unknown variant_id: {variant_id}") from None

    def remove_group(self, group_id: str) -> None:
        """Remove a claim group and every one of its framed variants."""
        try:
            members = self.groups.pop(group_id)
        except KeyError:
            raise UnknownGroup(f"unknown group_id: {group_id}") from None
        for variant in members:
            del self._by_variant[variant.variant_id]
            self.label_counts[variant.true_label] -= 1
            self.framing_counts[variant.framing] -= 1

    def variants(self) -> Iterator[ClaimVariant]:
        return iter(self._by_variant.values())

    def snapshot(self) -> "ClaimPool":
        clone = ClaimPool()
        clone.groups = {gid: list(members) for gid, members in self.groups.items()}
        clone._by_variant = dict(self._by_variant)
        clone.label_counts = Counter(self.label_counts)
        clone.framing_counts = Counter(self.framing_counts)
        return clone

    def recount(self) -> tuple[Counter, Counter]:
        """Recompute counters from scratch (consistency checks in tests)."""
        labels: Counter = Counter()
        framings: Counter = Counter()
        for variant in self._by_variant.values():
            labels[variant.true_label] += 1
            framings[variant.framing] += 1
        return labels, framings


def load_pool(
    source,
    schema: RecordSchema = RecordSchema.SPLIT,
    keep_failed: bool = False,
) -> ClaimPool:
    """Build a ClaimPool from a record stream (path, file object, or lines).

    RAW records that failed verification are dropped unless ``keep_failed``;
    an empty stream yields an empty pool.
    """
    pool = ClaimPool()
    for line in iter_lines(source):
        parsed = parse_record(line, schema)
        if schema is RecordSchema.RAW:
            assert isinstance(parsed, RawRecord)
            if not parsed.verification_passed and not keep_failed:
                continue
            pool.add(parsed.to_variant())
        else:
            assert isinstance(parsed, ClaimVariant)
            pool.add(parsed)
    return pool


@dataclass
class FramingSummary:
    framing: str
    failed: int = 0
    passed: int = 0
    token_total: int = field(default=0, repr=False)

    @property
    def count(self) -> int:
        return self.failed + self.passed

    @property
    def pass_rate(self):
        if self.count == 0:
            return None
        return self.passed / self.count

    @property
    def mean_whitespace_tokens(self):
        if self.count == 0:
            return None
        return self.token_total / self.count


def summarize_corpus(records: Iterable[RawRecord]) -> list[FramingSummary]:
    """Per-framing verification counts, pass rates, and whitespace-token means.

    Token counts are whitespace-delimited (not model-tokenizer counts, so
    not comparable with tokenizer-based statistics). Returns one row per
    framing in enum order plus a pooled TOTAL row; empty input yields the
    same table with zero counts.
    """
    rows = {f: FramingSummary(framing=f.value) for f in FramingType}
    total = FramingSummary(framing="TOTAL")
    for record in records:
        row = rows[record.framing_type]
        tokens = len(record.text.split())
        for target in (row, total):
            if record.verification_passed:
                target.passed += 1
            else:
                target.failed += 1
            target.token_total += tokens
    return [rows[f] for f in FramingType] + [total]


def write_split_records(variants: Iterable[ClaimVariant], out: IO[str]) -> None:
    """Serialize variants in the SPLIT schema, one JSON object per line."""
    for variant in variants:
        out.write(
            json.dumps(
                {
                    "claim_id": variant.group_id,
                    "true_label": variant.true_label.value,
                    "restated_claim": variant.text,
                    "framing_type": variant.framing.value,
                },
                ensure_ascii=False,
                sort_keys=True,
                separators=(",", ":"),
            )
        )
        out.write("\n")
