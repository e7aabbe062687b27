"""Token/id vocabulary with fixed reserved ids, plus the shared tokenizer."""

from __future__ import annotations

import re
from collections import Counter

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
SOS_TOKEN = "<sos>"
EOS_TOKEN = "<eos>"
RESERVED = (PAD_TOKEN, UNK_TOKEN, SOS_TOKEN, EOS_TOKEN)
PAD_ID, UNK_ID, SOS_ID, EOS_ID = 0, 1, 2, 3

_TOKEN_RE = re.compile(r"[\w']+|[^\w\s]")


def tokenize(text: str) -> list[str]:
    """Lowercase, then split on whitespace and punctuation boundaries."""
    return _TOKEN_RE.findall(text.lower())


class Vocabulary:
    """Bijective token<->id map; ids 0-3 are pad/unk/sos/eos."""

    def __init__(self, tokens: list[str] | None = None):
        self.id_to_token: list[str] = list(RESERVED)
        self.token_to_id: dict[str, int] = {t: i for i, t in enumerate(RESERVED)}
        for t in tokens or ():
            self.add(t)

    def add(self, token: str) -> int:
        if token not in self.token_to_id:
            self.token_to_id[token] = len(self.id_to_token)
            self.id_to_token.append(token)
        return self.token_to_id[token]

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def encode(self, tokens: list[str]) -> list[int]:
        return [self.token_to_id.get(t, UNK_ID) for t in tokens]

    def decode(self, ids: list[int]) -> list[str]:
        return [self.id_to_token[i] for i in ids]

    def decode_text(self, ids: list[int]) -> str:
        """Join to text, dropping reserved tokens."""
        return " ".join(t for t in self.decode(ids) if t not in RESERVED)

    def to_list(self) -> list[str]:
        """Non-reserved tokens in id order (for checkpoint storage)."""
        return self.id_to_token[len(RESERVED):]

    @classmethod
    def from_list(cls, tokens: list[str]) -> "Vocabulary":
        return cls(tokens)


def build_vocab(examples, min_freq: int = 1, max_size: int | None = None) -> Vocabulary:
    """Count tokens over every sentence of every example and keep the ones
    with frequency >= min_freq, most frequent first (ties alphabetical),
    truncated so the vocabulary (reserved ids included) has at most
    ``max_size`` entries."""
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    counts: Counter = Counter()
    for ex in examples:
        for group in (ex.persona_a, ex.persona_b, ex.context, [ex.response]):
            for sentence in group:
                counts.update(sentence)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = [t for t, c in ranked if c >= min_freq and t not in RESERVED]
    if max_size is not None:
        kept = kept[:max(0, max_size - len(RESERVED))]
    return Vocabulary(kept)
