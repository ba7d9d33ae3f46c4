"""Email text pipeline: normalization, sentence splitting, tokenization,
vocabulary construction, and fixed-shape encoding.

Emails are modelled as sequences of sentences.  Encoding pads or truncates
each email to ``MAX_SENTENCES`` sentences and each sentence to
``MAX_TOKENS`` token ids, with id 0 reserved for padding and id 1 for
unknown tokens.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import EmptyEmailError, VocabularyError

MAX_SENTENCES = 100  # sentences kept per email
MAX_TOKENS = 30      # token ids kept per sentence

PAD_ID = 0
UNK_ID = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"

_TAG_RE = re.compile(r"<[^>]*>")
_HSPACE_RE = re.compile(r"[^\S\n]+")
_NEWLINE_RE = re.compile(r"\s*\n\s*")
_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+|\n+")
_TOKEN_RE = re.compile(r"[a-z0-9]+|[^a-z0-9\s]")


@dataclass
class RawEmail:
    """One email body with its binary label (1 = phishing, 0 = benign)."""

    id: str
    text: str
    label: int


@dataclass
class TokenizedEmail:
    """Fixed-shape token-id matrix [MAX_SENTENCES, MAX_TOKENS] plus the
    number of real (non-pad) sentence rows."""

    ids: np.ndarray
    real_sentence_count: int


def normalize_text(raw: str) -> str:
    """Lowercase ASCII text with markup stripped and whitespace collapsed.

    Newline runs are kept as a single newline so they can still act as
    sentence boundaries; all other whitespace runs become single spaces.
    """
    s = _TAG_RE.sub(" ", raw)
    s = s.encode("ascii", "ignore").decode("ascii")
    s = s.lower()
    s = _HSPACE_RE.sub(" ", s)
    s = _NEWLINE_RE.sub("\n", s)
    s = s.strip()
    if not s:
        raise EmptyEmailError("email text is empty after normalization")
    return s


def split_sentences(text: str) -> list[str]:
    """Split at '.', '!', '?' followed by whitespace/end and at newlines.

    Terminators stay attached to their sentence; empty fragments are
    dropped; text without any terminator is returned whole.
    """
    parts = [p.strip() for p in _SENTENCE_SPLIT_RE.split(text)]
    sentences = [p for p in parts if p]
    if not sentences:
        raise EmptyEmailError("email has no sentences")
    return sentences


def tokenize_sentence(sentence: str) -> list[str]:
    """Whitespace split with punctuation characters as standalone tokens."""
    return _TOKEN_RE.findall(sentence.lower())


@dataclass
class Vocabulary:
    """Frozen token -> id map with PAD = 0 and UNK = 1."""

    token_to_id: dict[str, int]
    id_to_token: list[str]

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    def encode_token(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def decode_id(self, token_id: int) -> str:
        if not 0 <= token_id < self.size:
            raise VocabularyError(f"id {token_id} outside vocabulary of size {self.size}")
        return self.id_to_token[token_id]

    def save(self, path: str | Path) -> None:
        """One token per line; the line index (from 0) is the id."""
        Path(path).write_text("\n".join(self.id_to_token) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        tokens = Path(path).read_text(encoding="utf-8").splitlines()
        return cls.from_tokens(tokens)

    @classmethod
    def from_tokens(cls, tokens: list[str]) -> "Vocabulary":
        if tokens[:2] != [PAD_TOKEN, UNK_TOKEN]:
            raise VocabularyError("vocabulary must start with the pad and unk tokens")
        return cls(token_to_id={t: i for i, t in enumerate(tokens)}, id_to_token=list(tokens))


def build_vocabulary(emails: Iterable[RawEmail], cap: int = 20000) -> Vocabulary:
    """Rank tokens by frequency (ties lexicographic) and keep the top cap-2.

    Build from the training split only; encode-time misses map to UNK.
    """
    counts: Counter[str] = Counter()
    for email in emails:
        for sentence in split_sentences(normalize_text(email.text)):
            counts.update(tokenize_sentence(sentence))
    if not counts:
        raise VocabularyError("no tokens found in the training emails")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    tokens = [PAD_TOKEN, UNK_TOKEN] + [t for t, _ in ranked[: max(cap - 2, 0)]]
    return Vocabulary.from_tokens(tokens)


def encode_email(email: RawEmail, vocab: Vocabulary,
                 max_sentences: int = MAX_SENTENCES,
                 max_tokens: int = MAX_TOKENS) -> TokenizedEmail:
    """Encode an email to a [max_sentences, max_tokens] id matrix.

    Sentences beyond the budget are dropped, token lists are truncated to
    ``max_tokens``, and missing slots are PAD.
    """
    sentences = split_sentences(normalize_text(email.text))
    ids = np.zeros((max_sentences, max_tokens), dtype=np.int32)
    real = 0
    for sentence in sentences:
        tokens = tokenize_sentence(sentence)
        if not tokens:
            continue
        if real == max_sentences:
            break
        for col, token in enumerate(tokens[:max_tokens]):
            ids[real, col] = vocab.encode_token(token)
        real += 1
    if real == 0:
        raise EmptyEmailError(f"email {email.id!r} has no tokenizable sentences")
    return TokenizedEmail(ids=ids, real_sentence_count=real)


def decode_row(row: np.ndarray, vocab: Vocabulary) -> list[str]:
    """Tokens for one sentence row, pads stripped (UNK stays as the unk token)."""
    return [vocab.decode_id(int(i)) for i in row if int(i) != PAD_ID]


def load_corpus_jsonl(path: str | Path, drop_duplicates: bool = True) -> list[RawEmail]:
    """Read {"id", "text", "label"} records; unknown fields are ignored.

    Exact-duplicate bodies (after the first occurrence) are dropped.
    """
    emails: list[RawEmail] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            label = int(obj["label"])
            if label not in (0, 1):
                raise ValueError(f"{path}:{line_no}: label must be 0 or 1, got {obj['label']}")
            if drop_duplicates:
                if obj["text"] in seen:
                    continue
                seen.add(obj["text"])
            emails.append(RawEmail(id=str(obj["id"]), text=str(obj["text"]), label=label))
    return emails


def write_corpus_jsonl(path: str | Path, emails: Iterable[RawEmail]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for e in emails:
            f.write(json.dumps({"id": e.id, "text": e.text, "label": e.label}) + "\n")
