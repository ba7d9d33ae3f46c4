"""Evaluation measures and per-email explanation reports.

All measures score the frozen model's top-1 selected sentence:

* label accuracy: fraction of emails whose label is predicted correctly
  from the top-1 sentence alone (applied to phishing and benign alike);
* cognitive true-positive: fraction of phishing emails whose top-1
  sentence contains a phrase from any of the six persuasion principles;
* SAC: as above but restricted to Scarcity, Authority, and Consistency;
* F1: harmonic precision/recall mean for the phishing class.

Phrase matching is whole-phrase substring search on normalized
(lowercased, whitespace-collapsed) text, so results are auditable and the
lexicon is fully replaceable via a JSON file.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

from .errors import ConfigError
from .pipeline import TrainedModel
from .text import RawEmail

PRINCIPLES = ("Reciprocity", "Consistency", "SocialProof", "Authority", "Liking", "Scarcity")
SAC_PRINCIPLES = ("Scarcity", "Authority", "Consistency")


def _normalize_phrase(phrase: str) -> str:
    return " ".join(phrase.lower().split())


def load_lexicon(path: str | Path) -> dict[str, list[str]]:
    """Load and validate a principle -> phrases map from JSON."""
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    return _validate_lexicon(raw, source=str(path))


def default_lexicon() -> dict[str, list[str]]:
    """The lexicon shipped with the package."""
    raw = json.loads(resources.files("phishloc.data").joinpath("lexicon.json").read_text())
    return _validate_lexicon(raw, source="builtin")


def _validate_lexicon(raw: dict, source: str) -> dict[str, list[str]]:
    missing = [p for p in PRINCIPLES if p not in raw]
    if missing:
        raise ConfigError(f"lexicon {source} is missing principles: {missing}")
    unknown = [k for k in raw if k not in PRINCIPLES]
    if unknown:
        raise ConfigError(f"lexicon {source} has unknown principles: {unknown}")
    lexicon: dict[str, list[str]] = {}
    for principle in PRINCIPLES:
        phrases = [_normalize_phrase(p) for p in raw[principle]]
        if not phrases or any(not p for p in phrases):
            raise ConfigError(f"lexicon {source}: {principle} has empty phrases")
        lexicon[principle] = phrases
    return lexicon


def sentence_matches(sentence: str, phrases: Sequence[str]) -> bool:
    text = _normalize_phrase(sentence)
    return any(phrase in text for phrase in phrases)


def matched_principles(sentence: str, lexicon: dict[str, list[str]]) -> list[str]:
    return [p for p in PRINCIPLES if sentence_matches(sentence, lexicon[p])]


@dataclass
class Explanation:
    """Top-k ranking plus the predicted label for one email."""

    email_id: str
    predicted_label: int
    probabilities: list[float]               # [benign, phishing]
    ranking: list[dict]                      # {index, sentence, score}, best first
    top1_principles: list[str]

    def to_json_dict(self) -> dict:
        return {
            "email_id": self.email_id,
            "predicted_label": self.predicted_label,
            "probabilities": self.probabilities,
            "ranking": self.ranking,
            "top1_principles": self.top1_principles,
        }


def label_accuracy(model: TrainedModel, emails: list[RawEmail]) -> float:
    """Fraction of emails classified correctly from their top-1 sentence."""
    if not emails:
        raise ConfigError("label_accuracy needs at least one email")
    preds = model.predict_batch(emails)
    return sum(1 for pr, e in zip(preds, emails) if pr.label == e.label) / len(emails)


def f1_score(predictions: Sequence[int], truths: Sequence[int],
             positive_class: int = 1) -> float:
    """Harmonic mean of precision and recall for the positive class."""
    if len(predictions) != len(truths):
        raise ConfigError(f"length mismatch: {len(predictions)} predictions, "
                          f"{len(truths)} truths")
    if not predictions:
        raise ConfigError("f1_score needs at least one prediction")
    tp = sum(1 for p, t in zip(predictions, truths)
             if p == positive_class and t == positive_class)
    fp = sum(1 for p, t in zip(predictions, truths)
             if p == positive_class and t != positive_class)
    fn = sum(1 for p, t in zip(predictions, truths)
             if p != positive_class and t == positive_class)
    if tp == 0:
        if fp == 0 and fn == 0:
            warnings.warn("no positive predictions or truths; F1 defined as 0")
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def _top1_sentences(model: TrainedModel, emails: list[RawEmail]) -> list[str]:
    preds = model.predict_batch(emails)
    out = []
    for pred, email in zip(preds, emails):
        out.append(model.sentences(email)[pred.top1_index])
    return out


def cognitive_true_positive(model: TrainedModel, phishing_emails: list[RawEmail],
                            lexicon: dict[str, list[str]]) -> float:
    """Fraction of phishing emails whose top-1 sentence carries any trigger."""
    if not phishing_emails:
        raise ConfigError("cognitive_true_positive needs at least one phishing email")
    all_phrases = [ph for p in PRINCIPLES for ph in lexicon[p]]
    hits = sum(1 for s in _top1_sentences(model, phishing_emails)
               if sentence_matches(s, all_phrases))
    return hits / len(phishing_emails)


def sac_score(model: TrainedModel, phishing_emails: list[RawEmail],
              lexicon: dict[str, list[str]]) -> float:
    """Like cognitive_true_positive, restricted to Scarcity/Authority/Consistency."""
    if not phishing_emails:
        raise ConfigError("sac_score needs at least one phishing email")
    sac_phrases = [ph for p in SAC_PRINCIPLES for ph in lexicon[p]]
    hits = sum(1 for s in _top1_sentences(model, phishing_emails)
               if sentence_matches(s, sac_phrases))
    return hits / len(phishing_emails)


def explain_email(model: TrainedModel, email: RawEmail,
                  lexicon: dict[str, list[str]], k: int = 3) -> Explanation:
    """Rank sentences, classify on the hard top-1 mask, annotate triggers."""
    pred = model.predict(email)
    sentences = model.sentences(email)
    ranking = [{"index": i, "sentence": sentences[i], "score": score}
               for i, score in model.rank(email, k)]
    return Explanation(
        email_id=email.id,
        predicted_label=pred.label,
        probabilities=[float(x) for x in pred.probabilities],
        ranking=ranking,
        top1_principles=matched_principles(sentences[pred.top1_index], lexicon),
    )


def write_metrics_csv(path: str | Path, rows: list[tuple[str, float, int]]) -> None:
    """Metrics summary with columns metric, value, n."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("metric,value,n\n")
        for metric, value, n in rows:
            f.write(f"{metric},{value},{n}\n")
