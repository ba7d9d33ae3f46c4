"""Seeded synthetic email corpus with planted trigger sentences.

Real corpora carry only email-level labels, so there is no ground truth
for which sentence makes an email phishing.  This generator plants exactly
one lexicon-bearing trigger sentence per phishing email at a uniformly
random position among otherwise neutral filler sentences; benign emails
are fillers only.  Fillers share one template pool across both classes, so
the only label signal is the trigger sentence itself, which makes
localization accuracy a sharp test of the selection mechanism.

The trigger index is written to a separate sidecar file so training code
physically cannot read it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .metrics import PRINCIPLES, default_lexicon, matched_principles, sentence_matches
from .pipeline import TrainedModel
from .text import RawEmail

FILLER_TEMPLATES = [
    "the team meeting is scheduled for {day} at {time}.",
    "please find the {doc} attached for this week.",
    "thanks again for your help with the {topic}.",
    "let me know if {day} works for a quick call.",
    "the {dept} team shared the revised {doc} this morning.",
    "lunch at the {place} was great last week.",
    "i will be out of the office on {day} afternoon.",
    "the printer on the third floor is working again.",
    "we are planning the next sprint review for early {month}.",
    "could you forward the notes from the {dept} workshop.",
    "the weather has been lovely for evening walks lately.",
    "my flight lands around {time} on {day}.",
    "the client demo went smoothly and feedback was positive.",
    "remember to submit the timesheet before friday.",
    "the new coffee machine arrived in the kitchen.",
    "the quarterly numbers look steady across both regions.",
    "parking near the annex reopens next {month}.",
    "the {topic} slides are ready for a final pass.",
    "we moved the standup to {time} starting next week.",
    "the vendor sent over the {doc} yesterday.",
]

FILLER_SLOTS = {
    "day": ["monday", "tuesday", "wednesday", "thursday", "friday"],
    "time": ["nine", "ten", "eleven", "noon", "two", "three", "four"],
    "doc": ["quarterly report", "meeting agenda", "project summary",
            "draft proposal", "budget sheet", "travel itinerary"],
    "dept": ["finance", "marketing", "engineering", "operations", "design", "research"],
    "topic": ["presentation", "onboarding session", "vendor review",
              "data migration", "product launch", "training plan"],
    "place": ["corner cafe", "new bistro", "office canteen", "thai place", "garden grill"],
    "month": ["january", "march", "april", "june", "september", "october"],
}

TRIGGER_TEMPLATES = {
    "Scarcity": [
        "act now or your mailbox will be deleted within two days.",
        "this offer expires soon so act immediately to keep your benefits.",
        "only a few left so respond before it is too late.",
        "your storage is running out and files will be deleted on friday.",
        "you will lose access unless you respond within 24 hours.",
        "this is the final notice before your subscription expires today.",
        "this is your last chance to stop the removal of your files.",
        "your mailbox will be suspended at midnight tonight.",
        "the portal will be closed to you unless you sign in now.",
    ],
    "Authority": [
        "this is an official notification from the security team.",
        "our compliance department asks that you verify your identity.",
        "the security department flagged unusual activity on your profile.",
        "policy requires that you authenticate your profile this week.",
        "the it helpdesk issued a mandatory verification for all staff.",
        "failure to comply may result in legal action against the holder.",
        "the system administrator locked your sign in for fraud prevention.",
        "an official notice has been filed regarding your mailbox.",
        "the account services team must review your credentials.",
    ],
    "Consistency": [
        "please confirm your information to keep your account active.",
        "update your account details before the new system rollout.",
        "you must reconfirm your billing address this week.",
        "as you requested we need you to confirm your details.",
        "renew your subscription to maintain your access.",
        "per your request the portal asks you to complete your registration.",
        "restore your account by confirming the attached form.",
        "you previously agreed to update the account records yearly.",
        "confirm your identity to continue using your profile.",
    ],
    "Reciprocity": [
        "we have credited a cash reward to thank you for your loyalty.",
        "claim your reward today with this free gift voucher.",
        "a bonus has been added to your balance as a thank you.",
        "enjoy this complimentary upgrade to show our appreciation.",
        "you have been awarded a gift card waiting in your name.",
        "redeem your credit now as a special offer for you.",
        "claim your prize before someone else does.",
        "this exclusive benefit is yours in return for your feedback.",
    ],
    "SocialProof": [
        "thousands of users have confirmed this change already.",
        "join millions of members who upgraded this month.",
        "most customers agree the new portal saves time.",
        "all other account holders completed this step last week.",
        "everyone is switching to the new secure login.",
        "users like you rated this service five stars.",
        "our community has grown because members trust us.",
        "this plan is trusted by millions around the world.",
        "other members have already signed up for early access.",
    ],
    "Liking": [
        "dear valued customer we picked this update just for you.",
        "dear member your renewal made the whole desk smile.",
        "we miss you and would love to see you back.",
        "you are special to us and this invite proves it.",
        "as our favorite reader you were specially selected.",
        "your friends at the service desk send their warmest regards.",
        "dear friend you have been personally invited to preview this.",
        "as a loyal customer you were chosen especially for this trial.",
    ],
}

DEFAULT_PRINCIPLE_WEIGHTS = {
    "Scarcity": 0.25, "Authority": 0.25, "Consistency": 0.2,
    "Reciprocity": 0.1, "SocialProof": 0.1, "Liking": 0.1,
}


@dataclass
class SynthConfig:
    n_emails: int = 2000
    phishing_ratio: float = 0.5
    sentences_min: int = 4
    sentences_max: int = 12
    principle_weights: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_PRINCIPLE_WEIGHTS))
    seed: int = 0

    def validate(self) -> None:
        if self.n_emails < 1:
            raise ConfigError(f"n_emails must be at least 1, got {self.n_emails}")
        if not 0.0 <= self.phishing_ratio <= 1.0:
            raise ConfigError(f"phishing_ratio must be in [0, 1], got {self.phishing_ratio}")
        if not 1 <= self.sentences_min <= self.sentences_max <= 100:
            raise ConfigError(
                f"sentence range [{self.sentences_min}, {self.sentences_max}] invalid")
        unknown = [k for k in self.principle_weights if k not in PRINCIPLES]
        if unknown:
            raise ConfigError(f"unknown principles in weights: {unknown}")
        if any(w < 0 for w in self.principle_weights.values()):
            raise ConfigError("principle weights must be non-negative")
        if sum(self.principle_weights.values()) <= 0:
            raise ConfigError("principle weights must not all be zero")


@dataclass
class SynthEmail(RawEmail):
    """A generated email plus its hidden ground truth."""

    trigger_index: int = -1      # -1 for benign
    principle: str | None = None


def _fill(template: str, rng: np.random.Generator) -> str:
    out = template
    while "{" in out:
        key = out[out.index("{") + 1:out.index("}")]
        choices = FILLER_SLOTS[key]
        out = out.replace("{" + key + "}", choices[rng.integers(len(choices))], 1)
    return out


def _all_phrases(lexicon: dict[str, list[str]]) -> list[str]:
    return [ph for p in PRINCIPLES for ph in lexicon[p]]


def generate_corpus(config: SynthConfig) -> list[SynthEmail]:
    """Deterministic corpus: same seed, byte-identical emails and ground truth.

    Every phishing email contains exactly one trigger sentence whose
    principle is drawn from the configured mix; benign emails contain none.
    Both facts are asserted against the shipped lexicon at generation time.
    """
    config.validate()
    lexicon = default_lexicon()
    phrases = _all_phrases(lexicon)
    principles = [p for p in PRINCIPLES if config.principle_weights.get(p, 0.0) > 0]
    weights = np.array([config.principle_weights[p] for p in principles], dtype=np.float64)
    weights /= weights.sum()

    n_phish = round(config.n_emails * config.phishing_ratio)
    labels = np.array([1] * n_phish + [0] * (config.n_emails - n_phish))
    label_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0]))
    labels = labels[label_rng.permutation(config.n_emails)]

    emails: list[SynthEmail] = []
    seen: set[str] = set()
    for i in range(config.n_emails):
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1 + i]))
        label = int(labels[i])
        for _ in range(1000):
            n_sent = int(rng.integers(config.sentences_min, config.sentences_max + 1))
            sentences = [_fill(FILLER_TEMPLATES[rng.integers(len(FILLER_TEMPLATES))], rng)
                         for _ in range(n_sent)]
            trigger_index = -1
            principle = None
            if label == 1:
                principle = principles[rng.choice(len(principles), p=weights)]
                templates = TRIGGER_TEMPLATES[principle]
                trigger = templates[rng.integers(len(templates))]
                trigger_index = int(rng.integers(0, n_sent))
                sentences[trigger_index] = trigger
                if principle not in matched_principles(trigger, lexicon):
                    raise AssertionError(f"trigger does not match its principle: {trigger!r}")
            for j, s in enumerate(sentences):
                if j != trigger_index and sentence_matches(s, phrases):
                    raise AssertionError(f"filler sentence matches the lexicon: {s!r}")
            text = " ".join(sentences)
            if text not in seen:
                break
        else:
            raise ConfigError("could not generate a unique email in 1000 attempts; "
                              "corpus too large for the template pool")
        seen.add(text)
        emails.append(SynthEmail(id=f"synth-{i:06d}", text=text, label=label,
                                 trigger_index=trigger_index, principle=principle))
    return emails


def write_sidecar_jsonl(path: str | Path, emails: list[SynthEmail]) -> None:
    """Ground truth {"id", "trigger_index", "principle"}, one row per email."""
    with open(path, "w", encoding="utf-8") as f:
        for e in emails:
            f.write(json.dumps({"id": e.id, "trigger_index": e.trigger_index,
                                "principle": e.principle}) + "\n")


def load_sidecar_jsonl(path: str | Path) -> dict[str, tuple[int, str | None]]:
    out: dict[str, tuple[int, str | None]] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                obj = json.loads(line)
                out[str(obj["id"])] = (int(obj["trigger_index"]), obj["principle"])
    return out


def attach_ground_truth(emails: list[RawEmail],
                        sidecar: dict[str, tuple[int, str | None]]) -> list[SynthEmail]:
    """Rebuild SynthEmail records from a corpus file plus its sidecar."""
    out = []
    for e in emails:
        trigger_index, principle = sidecar[e.id]
        out.append(SynthEmail(id=e.id, text=e.text, label=e.label,
                              trigger_index=trigger_index, principle=principle))
    return out


def localization_accuracy(model: TrainedModel, synth_emails: list[SynthEmail]) -> float:
    """Fraction of phishing emails whose rank-1 sentence is the planted trigger."""
    phishing = [e for e in synth_emails if e.label == 1]
    if not phishing:
        raise ConfigError("localization_accuracy needs at least one phishing email")
    if any(e.trigger_index < 0 for e in phishing):
        raise ConfigError("phishing email without a ground-truth trigger index")
    preds = model.predict_batch(phishing)
    hits = sum(1 for pr, e in zip(preds, phishing) if pr.top1_index == e.trigger_index)
    return hits / len(phishing)
