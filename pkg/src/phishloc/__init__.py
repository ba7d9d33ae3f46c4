"""Weakly supervised phishing-sentence localization.

Train a sentence selector and an email classifier from email-level labels
only, then explain each prediction by the single most relevant sentence.
"""

from .checkpoint import load_checkpoint, save_checkpoint
from .metrics import (Explanation, cognitive_true_positive, default_lexicon, explain_email,
                      f1_score, label_accuracy, load_lexicon, sac_score)
from .objectives import Batch, LossBreakdown, cross_entropy, ib_penalty, joint_loss, random_mask_loss
from .pipeline import Prediction, TrainedModel
from .synth import SynthConfig, SynthEmail, generate_corpus, localization_accuracy
from .text import RawEmail, TokenizedEmail, Vocabulary, build_vocabulary, encode_email
from .train import TrainConfig, TrainResult, split_dataset, train

__version__ = "0.1.0"

__all__ = [
    "Batch", "Explanation", "LossBreakdown", "Prediction", "RawEmail", "SynthConfig",
    "SynthEmail", "TokenizedEmail", "TrainConfig", "TrainResult", "TrainedModel",
    "Vocabulary", "build_vocabulary", "cognitive_true_positive", "cross_entropy",
    "default_lexicon", "encode_email", "explain_email", "f1_score", "generate_corpus",
    "ib_penalty", "joint_loss", "label_accuracy", "load_checkpoint", "load_lexicon",
    "localization_accuracy", "random_mask_loss", "sac_score", "save_checkpoint",
    "split_dataset", "train",
]
