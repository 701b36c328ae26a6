"""Tokenization and token/label vocabularies.

Ids 0-3 are reserved for PAD/BOS/EOS/UNK and never reassigned; real tokens
start at 4, ordered by descending frequency then lexicographically, so
vocabulary construction is deterministic across runs.
"""

from __future__ import annotations

from collections import Counter

from ..errors import ContractError, InputError

PAD_ID, BOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3
RESERVED = ("<pad>", "<bos>", "<eos>", "<unk>")

_TERMINAL_PUNCT = ".,!?"


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip terminal ``.,!?`` characters."""
    out = []
    for raw in text.lower().split():
        tok = raw.rstrip(_TERMINAL_PUNCT)
        if tok:
            out.append(tok)
    return out


class Vocabulary:
    def __init__(self, tokens: list[str], counts: dict[str, int] | None = None):
        self._id_to_token = list(RESERVED) + list(tokens)
        self._token_to_id = {t: i for i, t in enumerate(self._id_to_token)}
        if len(self._token_to_id) != len(self._id_to_token):
            raise ContractError("duplicate tokens in vocabulary")
        self.counts = dict(counts or {})

    def __len__(self) -> int:
        return len(self._id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self._token_to_id

    def id_of(self, token: str) -> int:
        return self._token_to_id.get(token, UNK_ID)

    def token_of(self, idx: int) -> str:
        return self._id_to_token[idx]

    def encode(self, tokens: list[str]) -> list[int]:
        return [self.id_of(t) for t in tokens]

    def decode(self, ids: list[int]) -> list[str]:
        return [self._id_to_token[i] for i in ids]

    def tokens(self) -> list[str]:
        """Non-reserved tokens in id order (for checkpoint metadata)."""
        return self._id_to_token[len(RESERVED):]

    @classmethod
    def from_tokens(cls, tokens: list[str]) -> "Vocabulary":
        return cls(tokens)


def build_vocab(token_lists, min_freq: int = 1) -> Vocabulary:
    """Vocabulary over every token occurring at least ``min_freq`` times."""
    if min_freq < 1:
        raise ContractError(f"min_freq must be >= 1, got {min_freq}")
    counts = Counter()
    for toks in token_lists:
        counts.update(toks)
    kept = [t for t, c in counts.items() if c >= min_freq]
    kept.sort(key=lambda t: (-counts[t], t))
    return Vocabulary(kept, counts=dict(counts))


class AnswerVocabulary:
    """Answer labels are whole strings classified directly, not tokenized."""

    def __init__(self, labels: list[str]):
        self._labels = list(labels)
        self._index = {a: i for i, a in enumerate(self._labels)}
        if len(self._index) != len(self._labels):
            raise ContractError("duplicate answer labels")

    def __len__(self) -> int:
        return len(self._labels)

    def index_of(self, label: str) -> int:
        if label not in self._index:
            raise InputError(f"unknown answer label {label!r}")
        return self._index[label]

    def label_of(self, idx: int) -> str:
        return self._labels[idx]

    def labels(self) -> list[str]:
        return list(self._labels)

    @classmethod
    def from_records(cls, records) -> "AnswerVocabulary":
        return cls(sorted({r.answer for r in records}))
