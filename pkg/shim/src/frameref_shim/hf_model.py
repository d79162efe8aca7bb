"""Causal scoring over a transformers model (teacher forcing, never
free generation — the label continuation is fixed and only its
conditional logprobs are read off)."""

from __future__ import annotations

from .errors import ModelLoadError


class HFCausalScorer:
    def __init__(self, model_id: str):
        try:
            import torch
            from transformers import AutoModelForCausalLM, AutoTokenizer
        except ImportError as exc:
            raise ModelLoadError(
                f"transformers/torch required for model {model_id!r}: {exc}"
            ) from exc
        self._torch = torch
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_id)
            self.model = AutoModelForCausalLM.from_pretrained(model_id)
        except Exception as exc:
            raise ModelLoadError(f"cannot load model {model_id!r}: {exc}") from exc
        self.model.eval()
        self.name = model_id

    def _encode(self, text: str) -> list[int]:
        return self.tokenizer.encode(text, add_special_tokens=False)

    def score(self, prompt: str, label: str):
        from .scoring import LabelScore, TokenScore

        torch = self._torch
        prompt_ids = self._encode(prompt)
        label_ids = self._encode(label)
        if not prompt_ids or not label_ids:
            raise ModelLoadError("tokenizer produced an empty sequence")
        input_ids = torch.tensor([prompt_ids + label_ids])
        with torch.no_grad():
            logits = self.model(input_ids).logits
        log_probs = torch.log_softmax(logits, dim=-1)

        tokens = []
        for j, token_id in enumerate(label_ids):
            position = len(prompt_ids) + j - 1
            piece = self.tokenizer.decode([token_id], clean_up_tokenization_spaces=False)
            tokens.append(TokenScore(piece, float(log_probs[0, position, token_id])))
        first = float(log_probs[0, len(prompt_ids) - 1, label_ids[0]])
        return LabelScore(label=label, tokens=tokens, first_token_logprob=first)
