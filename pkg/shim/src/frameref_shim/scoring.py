"""Model-agnostic scoring: render the prompt, teacher-force each label."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

from .errors import BadRequest, ModelLoadError


@dataclass(frozen=True)
class TokenScore:
    token_text: str
    logprob: float


@dataclass(frozen=True)
class LabelScore:
    label: str
    tokens: list[TokenScore]
    first_token_logprob: float


class CausalScorer(Protocol):
    name: str

    def score(self, prompt: str, label: str) -> LabelScore: ...


def load_scorer(model_id: str) -> CausalScorer:
    """``toy://<seed>`` loads the built-in scorer; anything else goes
    through transformers."""
    if model_id.startswith("toy://"):
        seed_text = model_id[len("toy://") :]
        try:
            seed = int(seed_text)
        except ValueError:
            raise ModelLoadError(f"toy model seed must be an integer: {seed_text!r}")
        from .toy_model import ToyCausalScorer

        return ToyCausalScorer(seed)
    from .hf_model import HFCausalScorer

    return HFCausalScorer(model_id)


def score_labels(
    scorer: CausalScorer,
    prompt: str,
    labels: Sequence[str],
) -> list[LabelScore]:
    """Teacher-force each label after the prompt.

    Scoring stops exactly at each label's final token — the returned
    sequences cover the label word and nothing after it. Pure: no state
    is carried between calls.
    """
    if not prompt:
        raise BadRequest("claim_text must be non-empty")
    if not labels:
        raise BadRequest("labels must be non-empty")
    if any(not isinstance(label, str) or not label for label in labels):
        raise BadRequest("labels must be non-empty strings")
    return [scorer.score(prompt, label) for label in labels]
