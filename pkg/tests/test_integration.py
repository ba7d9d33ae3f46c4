"""Integration checks on a quickly trained (but competent) small model."""

import numpy as np
import pytest

from phishloc import SynthConfig, TrainConfig, generate_corpus
from phishloc.metrics import default_lexicon, explain_email
from phishloc.text import RawEmail
from phishloc.train import train


@pytest.fixture(scope="module")
def small_trained_model():
    """Reduced-scale training that still localizes well (about half a minute)."""
    synth = generate_corpus(SynthConfig(n_emails=500, seed=1, sentences_min=3,
                                        sentences_max=8))
    corpus = [RawEmail(e.id, e.text, e.label) for e in synth]
    config = TrainConfig(seed=7, epochs=25, batch_size=64, embed_dim=32,
                         selector_hidden=(64, 64, 32), classifier_hidden=(64, 32))
    return train(corpus, config).model


class TestTrainedExplanations:
    def test_trigger_sentence_ranked_first(self, small_trained_model):
        """A lexicon-bearing sentence among fillers must take rank 1."""
        email = RawEmail(
            id="it-1",
            text="the team meeting is scheduled for monday at noon. "
                 "someone can access your paypal account, so please confirm your "
                 "identity to protect your account. "
                 "lunch at the corner cafe was great last week.",
            label=1)
        report = explain_email(small_trained_model, email, default_lexicon(), k=3)
        assert report.ranking[0]["index"] == 1
        assert report.predicted_label == 1
        assert "Consistency" in report.top1_principles

    def test_benign_email_predicted_benign(self, small_trained_model):
        email = RawEmail(
            id="it-2",
            text="please find the meeting agenda attached for this week. "
                 "my flight lands around two on friday. "
                 "the client demo went smoothly and feedback was positive.",
            label=0)
        report = explain_email(small_trained_model, email, default_lexicon(), k=1)
        assert report.predicted_label == 0
        assert report.top1_principles == []

    def test_relevance_separates_trigger_from_fillers(self, small_trained_model):
        emails = generate_corpus(SynthConfig(n_emails=40, seed=77, sentences_min=4,
                                             sentences_max=8))
        phishing = [e for e in emails if e.label == 1]
        preds = small_trained_model.predict_batch(phishing)
        trigger_p, filler_p = [], []
        for pred, email in zip(preds, phishing):
            real = np.flatnonzero(pred.pad_mask)
            for i in real:
                (trigger_p if i == email.trigger_index else filler_p).append(
                    pred.relevance[i])
        assert np.mean(trigger_p) > np.mean(filler_p)
