"""Framing-sensitive judgment backends.

Two interchangeable backends produce :class:`Judgment` values: a
calibrated synthetic persona (per framing/label Beta cells) and a
remote model service speaking the ``/v1/judge`` wire protocol. Both
funnel through the same two-way softmax decision step, so their outputs
are directly comparable.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Mapping, Optional, Protocol, Sequence

import httpx
import numpy as np
from scipy.special import betainc

from .corpus import ClaimVariant, FramingType, Label
from .errors import (
    DomainError,
    EmptySequence,
    InvalidTarget,
    LabelMismatch,
    MissingCell,
    NonFiniteLogprob,
    ProtocolError,
    Timeout,
    Unfittable,
)


class Policy(enum.Enum):
    GREEDY = "GREEDY"
    SAMPLE = "SAMPLE"


@dataclass(frozen=True)
class TokenLogprob:
    token_text: str
    logprob: float


@dataclass(frozen=True)
class FirstTokenAudit:
    """First-position probabilities recorded for audit.

    ``agrees`` is False when the most likely first token belongs to a
    different label than the most likely full label sequence.
    """

    logprob_supports: float
    logprob_refutes: float
    agrees: bool


@dataclass(frozen=True)
class Judgment:
    action: Label
    confidence: float
    logprob_supports: float
    logprob_refutes: float
    p_supports_pair: float
    first_token_audit: Optional[FirstTokenAudit] = None

    @property
    def p_refutes_pair(self) -> float:
        return 1.0 - self.p_supports_pair


def aggregate_label_logprob(tokens: Sequence[TokenLogprob], label: Label) -> float:
    """Sum per-token conditional log-probabilities for one label.

    The token texts must concatenate to the label string exactly — the
    sequence stops when the label word ends, with no continuation.
    """
    if not tokens:
        raise EmptySequence(f"no tokens for label {label.value}")
    if any(not t.token_text for t in tokens):
        raise LabelMismatch("empty token_text in label sequence")
    joined = "".join(t.token_text for t in tokens)
    if joined != label.value:
        raise LabelMismatch(f"tokens concatenate to {joined!r}, expected {label.value!r}")
    return sum(t.logprob for t in tokens)


def normalize_and_decide(
    lp_supports: float,
    lp_refutes: float,
    policy: Policy,
    rng: Optional[np.random.Generator] = None,
) -> Judgment:
    """Pair-normalize two label logprobs and pick an action.

    Uses the numerically stable two-way softmax (max subtracted before
    exponentiation). GREEDY takes the argmax, with ties at exactly 0.5
    resolved to SUPPORTS; SAMPLE draws from the pair distribution.
    Confidence is the pair probability of the chosen action.
    """
    if not (math.isfinite(lp_supports) and math.isfinite(lp_refutes)):
        raise NonFiniteLogprob(f"logprobs must be finite, got ({lp_supports}, {lp_refutes})")
    top = max(lp_supports, lp_refutes)
    e_s = math.exp(lp_supports - top)
    e_r = math.exp(lp_refutes - top)
    p_supports = e_s / (e_s + e_r)

    if policy is Policy.GREEDY:
        # Compare raw logprobs so the argmax is invariant under pair
        # normalization even when a sub-ulp gap washes out of the softmax.
        action = Label.SUPPORTS if lp_supports >= lp_refutes else Label.REFUTES
    elif policy is Policy.SAMPLE:
        if rng is None:
            raise DomainError("SAMPLE policy requires an rng")
        action = Label.SUPPORTS if rng.random() < p_supports else Label.REFUTES
    else:  # pragma: no cover - enum is closed
        raise DomainError(f"unknown policy: {policy}")

    confidence = p_supports if action is Label.SUPPORTS else 1.0 - p_supports
    return Judgment(
        action=action,
        confidence=confidence,
        logprob_supports=lp_supports,
        logprob_refutes=lp_refutes,
        p_supports_pair=p_supports,
    )


@dataclass(frozen=True)
class BetaCell:
    """Distribution of p(SUPPORTS) for one (framing, true label) cell."""

    mean: float
    concentration: float

    def __post_init__(self) -> None:
        if not (0.0 < self.mean < 1.0):
            raise InvalidTarget(f"cell mean must be in (0,1), got {self.mean}")
        if not (self.concentration > 0.0):
            raise InvalidTarget(f"concentration must be > 0, got {self.concentration}")

    @property
    def alpha(self) -> float:
        return self.mean * self.concentration

    @property
    def beta(self) -> float:
        return (1.0 - self.mean) * self.concentration


@dataclass
class SyntheticPersonaConfig:
    name: str
    cells: dict[tuple[FramingType, Label], BetaCell]

    def cell(self, framing: FramingType, label: Label) -> BetaCell:
        try:
            return self.cells[(framing, label)]
        except KeyError:
            raise MissingCell(f"no cell for ({framing.value}, {label.value})") from None

    def validate_complete(self) -> None:
        missing = [
            (f.value, l.value)
            for f in FramingType
            for l in Label
            if (f, l) not in self.cells
        ]
        if missing:
            raise MissingCell(f"persona {self.name!r} missing cells: {missing}")

    def to_json(self) -> dict:
        payload: dict = {"type": "synthetic", "name": self.name, "cells": {}}
        for (framing, label), cell in sorted(
            self.cells.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
        ):
            payload["cells"].setdefault(framing.value, {})[label.value] = {
                "mean": cell.mean,
                "concentration": cell.concentration,
            }
        return payload

    @classmethod
    def from_json(cls, payload: Mapping) -> "SyntheticPersonaConfig":
        cells: dict[tuple[FramingType, Label], BetaCell] = {}
        for framing_name, by_label in payload.get("cells", {}).items():
            framing = FramingType.parse(framing_name)
            for label_name, cell in by_label.items():
                cells[(framing, Label.parse(label_name))] = BetaCell(
                    mean=float(cell["mean"]), concentration=float(cell["concentration"])
                )
        config = cls(name=str(payload.get("name", "persona")), cells=cells)
        config.validate_complete()
        return config


def synthetic_judge(
    claim: ClaimVariant,
    config: SyntheticPersonaConfig,
    policy: Policy,
    rng: np.random.Generator,
) -> Judgment:
    """Draw p(SUPPORTS) from the claim's cell and decide.

    Logprobs are synthesized consistently (ln p, ln(1-p)) so pair
    normalization recovers the drawn probability.
    """
    cell = config.cell(claim.framing, claim.true_label)
    p = float(rng.beta(cell.alpha, cell.beta))
    # Keep logs finite when the draw lands on the boundary.
    p = min(max(p, 1e-12), 1.0 - 1e-12)
    return normalize_and_decide(math.log(p), math.log1p(-p), policy, rng)


@dataclass(frozen=True)
class CellTargets:
    """Calibration targets for one framing: refuted and supported sides."""

    mspr: float
    tnr: float
    mean_p_supports: float
    tpr: float

    def __post_init__(self) -> None:
        for name in ("mspr", "tnr", "mean_p_supports", "tpr"):
            value = getattr(self, name)
            if not (0.0 < value < 1.0):
                raise InvalidTarget(f"target {name} must be in (0,1), got {value}")


_FIT_BRACKET = (1e-2, 1e6)
_FIT_TOLERANCE = 1e-3
_FIT_MAX_ITER = 200


def _below_half_mass(mean: float, concentration: float) -> float:
    """P(X < 0.5) for X ~ Beta with the given mean and concentration."""
    return float(betainc(mean * concentration, (1.0 - mean) * concentration, 0.5))


def _fit_concentration(mean: float, target_below: float) -> float:
    """Bisect the concentration so that P(X < 0.5) matches ``target_below``.

    P(X < 0.5) is monotone in the concentration for mean != 0.5, running
    from 1 - mean (diffuse) toward 0 or 1 (concentrated), so a sign
    change over the bracket exists exactly when the target is reachable.
    """
    lo, hi = _FIT_BRACKET
    if mean == 0.5:
        if abs(target_below - 0.5) <= _FIT_TOLERANCE:
            return (lo + hi) / 2.0
        raise Unfittable(f"mean 0.5 pins P(X<0.5) to 0.5; target {target_below} unreachable")

    g_lo = _below_half_mass(mean, lo) - target_below
    g_hi = _below_half_mass(mean, hi) - target_below
    if abs(g_lo) <= _FIT_TOLERANCE and abs(g_lo) <= abs(g_hi):
        return lo
    if abs(g_hi) <= _FIT_TOLERANCE:
        return hi
    if g_lo * g_hi > 0:
        raise Unfittable(
            f"target P(X<0.5)={target_below} unreachable for Beta mean {mean} "
            f"(achievable range ends at {_below_half_mass(mean, lo):.4f} / "
            f"{_below_half_mass(mean, hi):.4f})"
        )

    log_lo, log_hi = math.log(lo), math.log(hi)
    for _ in range(_FIT_MAX_ITER):
        log_mid = 0.5 * (log_lo + log_hi)
        mid = math.exp(log_mid)
        g_mid = _below_half_mass(mean, mid) - target_below
        if abs(g_mid) <= 1e-12:
            return mid
        if (g_mid > 0) == (g_lo > 0):
            log_lo, g_lo = log_mid, g_mid
        else:
            log_hi = log_mid
    mid = math.exp(0.5 * (log_lo + log_hi))
    if abs(_below_half_mass(mean, mid) - target_below) > _FIT_TOLERANCE:
        raise Unfittable(f"bisection did not reach target {target_below} for mean {mean}")
    return mid


def fit_synthetic_persona(
    targets: Mapping[FramingType, CellTargets],
    name: str = "persona",
) -> SyntheticPersonaConfig:
    """Calibrate Beta cells so GREEDY behavior matches the targets.

    For each framing, the REFUTES cell centers on MSPR with its spread
    chosen so P(X < 0.5) — the probability of correctly predicting
    REFUTES — equals TNR; the SUPPORTS cell is the symmetric
    construction from (mean_p_supports, TPR).
    """
    cells: dict[tuple[FramingType, Label], BetaCell] = {}
    for framing, cell_targets in targets.items():
        cells[(framing, Label.REFUTES)] = BetaCell(
            mean=cell_targets.mspr,
            concentration=_fit_concentration(cell_targets.mspr, cell_targets.tnr),
        )
        cells[(framing, Label.SUPPORTS)] = BetaCell(
            mean=cell_targets.mean_p_supports,
            concentration=_fit_concentration(
                cell_targets.mean_p_supports, 1.0 - cell_targets.tpr
            ),
        )
    return SyntheticPersonaConfig(name=name, cells=cells)


def load_targets(payload: Mapping) -> tuple[str, dict[FramingType, CellTargets]]:
    """Parse a persona-targets document: {"name": ..., "framings": {...}}."""
    framings = payload.get("framings")
    if not isinstance(framings, Mapping) or not framings:
        raise InvalidTarget("targets document needs a non-empty 'framings' object")
    parsed: dict[FramingType, CellTargets] = {}
    for framing_name, values in framings.items():
        try:
            parsed[FramingType.parse(framing_name)] = CellTargets(
                mspr=float(values["mspr"]),
                tnr=float(values["tnr"]),
                mean_p_supports=float(values["mean_p_supports"]),
                tpr=float(values["tpr"]),
            )
        except KeyError as exc:
            raise InvalidTarget(f"framing {framing_name}: missing target {exc}") from None
    return str(payload.get("name", "persona")), parsed


class PersonaBackend(Protocol):
    """Anything that can judge a claim. Judgments are freely shareable."""

    name: str

    def judge(
        self, claim: ClaimVariant, rng: Optional[np.random.Generator] = None
    ) -> Judgment: ...


class SyntheticPersona:
    """Pure backend over a calibrated config; all randomness comes from rng."""

    def __init__(self, config: SyntheticPersonaConfig, policy: Policy = Policy.GREEDY):
        self.config = config
        self.policy = policy
        self.name = config.name

    def judge(
        self, claim: ClaimVariant, rng: Optional[np.random.Generator] = None
    ) -> Judgment:
        if rng is None:
            raise DomainError("synthetic persona requires an rng")
        return synthetic_judge(claim, self.config, self.policy, rng)


@dataclass
class RemoteAgentConfig:
    endpoint: str
    timeout_ms: int = 30_000
    max_in_flight: int = 1
    template: str = "default"

    def __post_init__(self) -> None:
        if self.timeout_ms <= 0:
            raise DomainError(f"timeout_ms must be > 0, got {self.timeout_ms}")
        if self.max_in_flight < 1:
            raise DomainError(f"max_in_flight must be >= 1, got {self.max_in_flight}")


def _parse_judge_response(payload) -> tuple[dict[Label, list[TokenLogprob]], dict[Label, float]]:
    if not isinstance(payload, Mapping):
        raise ProtocolError("judge response is not an object")
    per_label: dict[Label, list[TokenLogprob]] = {}
    for entry in payload.get("per_label", []):
        try:
            label = Label.parse(entry["label"])
            tokens = [
                TokenLogprob(token_text=str(t["token_text"]), logprob=float(t["logprob"]))
                for t in entry["tokens"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed per_label entry: {exc}") from exc
        per_label[label] = tokens
    first_token: dict[Label, float] = {}
    for entry in payload.get("first_token", []):
        try:
            first_token[Label.parse(entry["label"])] = float(entry["first_token_logprob"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed first_token entry: {exc}") from exc
    for label in Label:
        if label not in per_label:
            raise ProtocolError(f"response missing label {label.value}")
        if label not in first_token:
            raise ProtocolError(f"response missing first-token data for {label.value}")
    return per_label, first_token


def remote_judge(
    claim: ClaimVariant,
    config: RemoteAgentConfig,
    policy: Policy = Policy.GREEDY,
    rng: Optional[np.random.Generator] = None,
    client: Optional[httpx.Client] = None,
) -> Judgment:
    """Ask a wire-protocol agent service to score the claim, then decide.

    Sends POST /v1/judge, aggregates each label's token logprobs, and
    records the first-token audit (the audit flag goes false when the
    first-token argmax names a different label than the full sequences).
    """
    request = {
        "claim_text": claim.text,
        "labels": [label.value for label in Label],
        "template": config.template,
    }
    owns_client = client is None
    if owns_client:
        client = httpx.Client(timeout=config.timeout_ms / 1000.0)
    try:
        response = client.post(config.endpoint.rstrip("/") + "/v1/judge", json=request)
    except httpx.TimeoutException as exc:
        raise Timeout(f"judge request timed out after {config.timeout_ms} ms") from exc
    except httpx.HTTPError as exc:
        raise Timeout(f"judge endpoint unreachable: {exc}") from exc
    finally:
        if owns_client:
            client.close()
    if response.status_code != 200:
        raise ProtocolError(f"judge endpoint returned HTTP {response.status_code}")
    try:
        payload = response.json()
    except ValueError as exc:
        raise ProtocolError("judge response is not valid JSON") from exc

    per_label, first_token = _parse_judge_response(payload)
    lp_supports = aggregate_label_logprob(per_label[Label.SUPPORTS], Label.SUPPORTS)
    lp_refutes = aggregate_label_logprob(per_label[Label.REFUTES], Label.REFUTES)
    judgment = normalize_and_decide(lp_supports, lp_refutes, policy, rng)

    full_argmax = Label.SUPPORTS if lp_supports >= lp_refutes else Label.REFUTES
    first_argmax = (
        Label.SUPPORTS
        if first_token[Label.SUPPORTS] >= first_token[Label.REFUTES]
        else Label.REFUTES
    )
    audit = FirstTokenAudit(
        logprob_supports=first_token[Label.SUPPORTS],
        logprob_refutes=first_token[Label.REFUTES],
        agrees=first_argmax is full_argmax,
    )
    return Judgment(
        action=judgment.action,
        confidence=judgment.confidence,
        logprob_supports=judgment.logprob_supports,
        logprob_refutes=judgment.logprob_refutes,
        p_supports_pair=judgment.p_supports_pair,
        first_token_audit=audit,
    )


class RemoteAgent:
    """Backend over a live agent service; one shared HTTP connection pool."""

    def __init__(self, config: RemoteAgentConfig, policy: Policy = Policy.GREEDY):
        self.config = config
        self.policy = policy
        self.name = f"remote:{config.endpoint}"
        self._client = httpx.Client(timeout=config.timeout_ms / 1000.0)

    def judge(
        self, claim: ClaimVariant, rng: Optional[np.random.Generator] = None
    ) -> Judgment:
        return remote_judge(claim, self.config, self.policy, rng, client=self._client)

    def health(self) -> dict:
        try:
            response = self._client.get(self.config.endpoint.rstrip("/") + "/v1/health")
        except httpx.HTTPError as exc:
            raise Timeout(f"health endpoint unreachable: {exc}") from exc
        if response.status_code != 200:
            raise ProtocolError(f"health endpoint returned HTTP {response.status_code}")
        return response.json()

    def close(self) -> None:
        self._client.close()


def load_persona(payload: Mapping, policy: Policy = Policy.GREEDY):
    """Build a backend from a persona document (synthetic or remote)."""
    kind = payload.get("type", "synthetic")
    if kind == "synthetic":
        return SyntheticPersona(SyntheticPersonaConfig.from_json(payload), policy)
    if kind == "remote":
        config = RemoteAgentConfig(
            endpoint=str(payload["endpoint"]),
            timeout_ms=int(payload.get("timeout_ms", 30_000)),
            max_in_flight=int(payload.get("max_in_flight", 1)),
            template=str(payload.get("template", "default")),
        )
        return RemoteAgent(config, policy)
    raise DomainError(f"unknown persona type: {kind!r}")


def save_persona(config: SyntheticPersonaConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
