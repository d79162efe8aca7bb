"""Built-in deterministic causal scorer, no model download required.

The vocabulary mixes the canonical label pieces (so SUPPORTS splits as
S / UPPORT / S and REFUTES as REF / UTES) with printable single
characters as a fallback, and the conditional distribution over that
vocabulary is a seeded hash of (prompt, prefix pieces) — a genuine,
if meaningless, autoregressive model that is bit-stable across
processes and platforms.
"""

from __future__ import annotations

import hashlib
import string

import numpy as np

SUBWORDS = ("UPPORT", "UTES", "REF", "S")
CHARS = tuple(string.printable)
VOCAB = SUBWORDS + tuple(c for c in CHARS if c not in SUBWORDS)
_VOCAB_INDEX = {piece: i for i, piece in enumerate(VOCAB)}


def greedy_tokenize(text: str) -> list[str]:
    """Longest-match segmentation over VOCAB, single-char fallback."""
    pieces = []
    i = 0
    while i < len(text):
        match = None
        for piece in SUBWORDS:
            if text.startswith(piece, i):
                match = piece
                break
        if match is None:
            match = text[i]
        pieces.append(match)
        i += len(match)
    return pieces


class ToyCausalScorer:
    def __init__(self, seed: int):
        self.seed = int(seed)
        self.name = f"toy://{self.seed}"

    def _log_distribution(self, prompt: str, prefix: tuple[str, ...]) -> np.ndarray:
        context = f"{self.seed}\x1f{prompt}\x1f" + "\x1f".join(prefix)
        digest = hashlib.sha256(context.encode("utf-8")).digest()
        words = np.frombuffer(digest, dtype=np.uint32)
        rng = np.random.default_rng(np.random.SeedSequence(words.tolist()))
        logits = rng.normal(size=len(VOCAB))
        shifted = logits - logits.max()
        return shifted - np.log(np.exp(shifted).sum())

    def score(self, prompt: str, label: str):
        from .scoring import LabelScore, TokenScore

        pieces = greedy_tokenize(label)
        tokens = []
        for i, piece in enumerate(pieces):
            log_dist = self._log_distribution(prompt, tuple(pieces[:i]))
            tokens.append(TokenScore(piece, float(log_dist[_VOCAB_INDEX[piece]])))
        first = self._log_distribution(prompt, ())
        return LabelScore(
            label=label,
            tokens=tokens,
            first_token_logprob=float(first[_VOCAB_INDEX[pieces[0]]]),
        )
