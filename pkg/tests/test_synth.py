"""Tests for the synthetic corpus generator and localization metric."""

import json

import numpy as np
import pytest

from phishloc.errors import ConfigError
from phishloc.metrics import PRINCIPLES, default_lexicon, sentence_matches
from phishloc.synth import (SynthConfig, SynthEmail, attach_ground_truth, generate_corpus,
                            load_sidecar_jsonl, localization_accuracy, write_sidecar_jsonl)
from phishloc.text import normalize_text, split_sentences, write_corpus_jsonl


class TestGeneration:
    def test_counts_and_single_trigger(self):
        emails = generate_corpus(SynthConfig(n_emails=10, phishing_ratio=0.5, seed=1))
        assert sum(e.label for e in emails) == 5
        lex = default_lexicon()
        phrases = [ph for p in PRINCIPLES for ph in lex[p]]
        for e in emails:
            sentences = split_sentences(normalize_text(e.text))
            hits = [i for i, s in enumerate(sentences) if sentence_matches(s, phrases)]
            if e.label == 1:
                assert hits == [e.trigger_index]
            else:
                assert hits == [] and e.trigger_index == -1

    def test_deterministic_bytes(self, tmp_path):
        for name in ("a", "b"):
            emails = generate_corpus(SynthConfig(n_emails=40, seed=9))
            write_corpus_jsonl(tmp_path / f"{name}.jsonl", emails)
            write_sidecar_jsonl(tmp_path / f"{name}.triggers.jsonl", emails)
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
        assert (tmp_path / "a.triggers.jsonl").read_bytes() == \
            (tmp_path / "b.triggers.jsonl").read_bytes()

    def test_text_survives_pipeline_unchanged(self):
        emails = generate_corpus(SynthConfig(n_emails=25, seed=2))
        for e in emails:
            assert normalize_text(e.text) == e.text
            sentences = split_sentences(e.text)
            assert " ".join(sentences) == e.text
            if e.label == 1:
                assert 0 <= e.trigger_index < len(sentences)

    def test_every_trigger_matches_its_principle(self):
        emails = generate_corpus(SynthConfig(n_emails=60, seed=3))
        lex = default_lexicon()
        for e in emails:
            if e.label == 1:
                sentence = split_sentences(e.text)[e.trigger_index]
                assert sentence_matches(sentence, lex[e.principle])

    def test_trigger_positions_uniform_within_length_bucket(self):
        emails = generate_corpus(SynthConfig(n_emails=4000, seed=4))
        counts = {}
        for e in emails:
            if e.label != 1:
                continue
            n = len(split_sentences(e.text))
            counts.setdefault(n, np.zeros(n))[e.trigger_index] += 1
        for n, hist in counts.items():
            frac = hist / hist.sum()
            assert np.all(np.abs(frac - 1.0 / n) < 0.03 + 2.0 / np.sqrt(hist.sum())), n

    def test_unique_texts(self):
        emails = generate_corpus(SynthConfig(n_emails=500, seed=5))
        texts = [e.text for e in emails]
        assert len(set(texts)) == len(texts)

    def test_invalid_config(self):
        with pytest.raises(ConfigError):
            generate_corpus(SynthConfig(n_emails=10, phishing_ratio=1.5))
        with pytest.raises(ConfigError):
            generate_corpus(SynthConfig(n_emails=0))
        with pytest.raises(ConfigError):
            generate_corpus(SynthConfig(sentences_min=5, sentences_max=3))


class TestSidecar:
    def test_roundtrip(self, tmp_path):
        emails = generate_corpus(SynthConfig(n_emails=20, seed=6))
        path = tmp_path / "gt.jsonl"
        write_sidecar_jsonl(path, emails)
        sidecar = load_sidecar_jsonl(path)
        rebuilt = attach_ground_truth(emails, sidecar)
        assert [(e.trigger_index, e.principle) for e in rebuilt] == \
            [(e.trigger_index, e.principle) for e in emails]

    def test_sidecar_has_only_ground_truth_fields(self, tmp_path):
        emails = generate_corpus(SynthConfig(n_emails=5, seed=7))
        path = tmp_path / "gt.jsonl"
        write_sidecar_jsonl(path, emails)
        for line in path.read_text().splitlines():
            assert set(json.loads(line)) == {"id", "trigger_index", "principle"}


class _StubModel:
    """Predicts a fixed top-1 index per email id."""

    def __init__(self, picks):
        self.picks = picks

    def predict_batch(self, emails):
        from phishloc.pipeline import Prediction

        return [Prediction(email_id=e.id, label=1, probabilities=np.array([0.0, 1.0]),
                           relevance=np.zeros(4), pad_mask=np.ones(4, bool),
                           top1_index=self.picks[e.id]) for e in emails]


class TestLocalizationAccuracy:
    def make_emails(self, n=20, seed=8):
        return generate_corpus(SynthConfig(n_emails=n, seed=seed))

    def test_ideal_selector_scores_one(self):
        emails = self.make_emails()
        model = _StubModel({e.id: e.trigger_index for e in emails})
        assert localization_accuracy(model, emails) == 1.0

    def test_matches_brute_force_count(self):
        emails = self.make_emails()
        rng = np.random.default_rng(0)
        picks = {e.id: int(rng.integers(0, 4)) for e in emails}
        model = _StubModel(picks)
        fast = localization_accuracy(model, emails)
        phishing = [e for e in emails if e.label == 1]
        slow = sum(1 for e in phishing if picks[e.id] == e.trigger_index) / len(phishing)
        assert fast == slow

    def test_uniform_random_selector_near_chance(self):
        emails = generate_corpus(SynthConfig(n_emails=3000, seed=10, sentences_min=8,
                                             sentences_max=8))
        rng = np.random.default_rng(1)
        model = _StubModel({e.id: int(rng.integers(0, 8)) for e in emails})
        assert abs(localization_accuracy(model, emails) - 1.0 / 8) < 0.03

    def test_empty_rejected(self):
        with pytest.raises(ConfigError):
            localization_accuracy(_StubModel({}), [])
        benign_only = [e for e in self.make_emails() if e.label == 0]
        with pytest.raises(ConfigError):
            localization_accuracy(_StubModel({}), benign_only)
