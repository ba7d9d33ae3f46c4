"""Train the selector + classifier end to end on a small corpus.

The training loop alternates two updates per minibatch: a disjoint step
that fits the classifier (and encoder) on random Bernoulli(0.5) masks, and
a joint step that fits everything on the selector's relaxed masks plus the
compression penalty.  Validation picks the checkpoint; the test metrics
score the top-1 selected sentence.

A scaled-down configuration keeps this demo around a minute on a laptop;
the full-scale experiment (2,000 emails, default layer sizes) lives in the
acceptance tests.
"""

import numpy as np

from phishloc import SynthConfig, TrainConfig, generate_corpus, localization_accuracy
from phishloc.metrics import (cognitive_true_positive, default_lexicon, f1_score,
                              label_accuracy, sac_score)
from phishloc.text import RawEmail
from phishloc.train import select_emails, train

synth = generate_corpus(SynthConfig(n_emails=500, seed=1, sentences_min=3,
                                    sentences_max=8))
corpus = [RawEmail(e.id, e.text, e.label) for e in synth]
by_id = {e.id: e for e in synth}

config = TrainConfig(
    seed=7,
    epochs=25,
    batch_size=64,
    embed_dim=32,                 # full scale: 150
    selector_hidden=(64, 64, 32),  # full scale: (300, 300, 100)
    classifier_hidden=(64, 32),    # full scale: (300, 100)
)
result = train(corpus, config)

print(f"best epoch: {result.best_epoch}  "
      f"(validation accuracy {result.best_val_accuracy:.3f})")
for row in result.log_rows:
    if row["val_accuracy"] != "":
        print(f"  epoch {row['epoch']}: validation accuracy {row['val_accuracy']:.3f}")

model = result.model
test_emails = select_emails(corpus, result.split.test_ids)
test_synth = [by_id[e.id] for e in test_emails]
phishing = [e for e in test_emails if e.label == 1]
lexicon = default_lexicon()
preds = model.predict_batch(test_emails)

print("\ntest-split metrics (top-1 selected sentence):")
print(f"  label accuracy          {label_accuracy(model, test_emails):.3f}")
print(f"  f1                      "
      f"{f1_score([p.label for p in preds], [e.label for e in test_emails]):.3f}")
print(f"  cognitive true-positive {cognitive_true_positive(model, phishing, lexicon):.3f}")
print(f"  sac                     {sac_score(model, phishing, lexicon):.3f}")
print(f"  localization accuracy   {localization_accuracy(model, test_synth):.3f}")

mass = float(np.mean([p.relevance[p.pad_mask].mean() for p in preds]))
print(f"\nmean selector probability over real sentences: {mass:.3f}")
print("(the compression penalty keeps this well below 1: the selector is choosy)")
