"""Frozen-model inference: deterministic top-1 prediction for evaluation.

A :class:`TrainedModel` bundles parameters with the vocabulary and the
configuration used to train them, so a loaded checkpoint is self-contained.
Inference never samples and never applies dropout: sentences are ranked by
the selector probabilities and the classifier reads a hard one-hot mask of
the top-1 sentence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .model import (ModelParams, apply_mask, classify_batch, encode_sentences_batch,
                    hard_top1_mask, rank_sentences, selection_probs_batch)
from .tensor import Tensor
from .text import RawEmail, TokenizedEmail, Vocabulary, encode_email, normalize_text, split_sentences

_CHUNK = 256  # emails per inference batch


@dataclass
class Prediction:
    """Inference output for one email."""

    email_id: str
    label: int
    probabilities: np.ndarray       # [2] = (benign, phishing)
    relevance: np.ndarray           # selector probabilities [L]
    pad_mask: np.ndarray            # bool [L]
    top1_index: int


@dataclass
class TrainedModel:
    """Parameters plus everything needed to run them on raw text."""

    params: ModelParams
    vocab: Vocabulary
    config: Any

    def tokenize(self, email: RawEmail) -> TokenizedEmail:
        return encode_email(email, self.vocab,
                            max_sentences=self.params.max_sentences,
                            max_tokens=self.params.max_tokens)

    def sentences(self, email: RawEmail) -> list[str]:
        """The email's sentences in model indexing (normalized, truncated)."""
        return split_sentences(normalize_text(email.text))[: self.params.max_sentences]

    def predict_batch(self, emails: Sequence[RawEmail]) -> list[Prediction]:
        preds: list[Prediction] = []
        for start in range(0, len(emails), _CHUNK):
            chunk = emails[start:start + _CHUNK]
            toks = [self.tokenize(e) for e in chunk]
            ids = np.stack([t.ids for t in toks])
            counts = np.array([t.real_sentence_count for t in toks])
            enc = encode_sentences_batch(ids, counts, self.params, training=False, rng=None)
            p = selection_probs_batch(enc.X, self.params, training=False).data
            z = np.stack([hard_top1_mask(p[i], enc.pad_mask[i]) for i in range(len(chunk))])
            probs = classify_batch(apply_mask(enc.X, Tensor(z)), self.params,
                                   training=False).data
            for i, email in enumerate(chunk):
                preds.append(Prediction(
                    email_id=email.id,
                    label=int(np.argmax(probs[i])),
                    probabilities=probs[i],
                    relevance=p[i],
                    pad_mask=enc.pad_mask[i],
                    top1_index=int(np.argmax(z[i])),
                ))
        return preds

    def predict(self, email: RawEmail) -> Prediction:
        return self.predict_batch([email])[0]

    def rank(self, email: RawEmail, k: int) -> list[tuple[int, float]]:
        """(sentence index, relevance score) pairs, best first."""
        pred = self.predict(email)
        idx = rank_sentences(pred.relevance, pred.pad_mask, k)
        return [(i, float(pred.relevance[i])) for i in idx]
