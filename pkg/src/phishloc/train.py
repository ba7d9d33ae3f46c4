"""The training loop: dataset splitting, the alternating disjoint/joint
updates, and validation-based checkpoint selection.

Each minibatch gets two updates in order: first the classifier and encoder
step on the random-mask loss (the selector is untouched), then the joint
step on the masked cross-entropy plus compression penalty for all
parameters.  After every epoch the model is scored on the validation split
by top-1 label accuracy; the best-scoring parameters (earliest epoch on
ties) are returned.
"""

from __future__ import annotations

import copy
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, TrainingDivergedError
from .model import ModelParams, init_model_params
from .nn import Adam, clip_global_norm
from .objectives import Batch, joint_loss, random_mask_loss
from .tensor import Tape, backward, zero_grads
from .pipeline import TrainedModel
from .text import RawEmail, Vocabulary, build_vocabulary, encode_email

LOG_COLUMNS = ["epoch", "step", "ce", "ib_penalty", "total", "random_mask_loss",
               "grad_norm_pre", "grad_norm_post", "val_accuracy"]

# rng stream tags so one seed drives every component independently
_STREAM_SPLIT = 1
_STREAM_INIT = 2
_STREAM_TRAIN = 3


def rng_for(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, stream]))


@dataclass
class TrainConfig:
    """Hyperparameters for one training run."""

    ib_weight: float = 1e-2          # weight of the compression penalty (0 disables)
    prior_scale: float = 0.1         # scale of the zero-centered row prior
    temperature: float = 0.5         # relaxation temperature for both mask kinds
    learning_rate: float = 1e-3
    batch_size: int = 128
    epochs: int = 10
    clip_threshold: float = 5.0
    seed: int = 0
    max_sentences: int = 100
    max_tokens: int = 30
    embed_dim: int = 150
    kernel_size: int = 3
    retain_prob: float = 0.8
    vocab_cap: int = 20000
    selector_hidden: tuple[int, ...] = (300, 300, 100)
    classifier_hidden: tuple[int, ...] = (300, 100)
    use_random_mask_step: bool = True

    def validate(self) -> None:
        if self.ib_weight < 0:
            raise ConfigError(f"ib_weight must be non-negative, got {self.ib_weight}")
        for name in ("prior_scale", "temperature", "learning_rate", "clip_threshold",
                     "retain_prob"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.retain_prob > 1:
            raise ConfigError(f"retain_prob must be at most 1, got {self.retain_prob}")
        for name in ("batch_size", "epochs", "max_sentences", "max_tokens", "embed_dim",
                     "kernel_size", "vocab_cap", "seed"):
            if getattr(self, name) < 1 and name != "seed":
                raise ConfigError(f"{name} must be at least 1, got {getattr(self, name)}")


@dataclass
class SplitDataset:
    """Disjoint train/validation/test email-id lists covering the corpus."""

    train_ids: list[str]
    val_ids: list[str]
    test_ids: list[str]
    seed: int


def _apportion(weights: list[float], total: int) -> list[int]:
    """Integers proportional to ``weights`` summing to ``total`` (largest
    remainder)."""
    scale = total / sum(weights)
    floors = [int(w * scale) for w in weights]
    fractions = [w * scale - f for w, f in zip(weights, floors)]
    for i in sorted(range(len(weights)), key=lambda i: -fractions[i])[: total - sum(floors)]:
        floors[i] += 1
    return floors


def split_dataset(corpus: list[RawEmail], seed: int,
                  ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)) -> SplitDataset:
    """Seeded stratified shuffle-and-cut.

    Partition sizes land within one email of the requested ratios, and
    each partition keeps the corpus phishing ratio.
    """
    if len(corpus) < 10:
        raise ConfigError(f"corpus too small to split: {len(corpus)} < 10 emails")
    rng = rng_for(seed, _STREAM_SPLIT)
    by_label = {label: [e.id for e in corpus if e.label == label] for label in (0, 1)}
    by_label = {label: ids for label, ids in by_label.items() if ids}
    n = len(corpus)
    n_train = round(ratios[0] * n)
    n_val = round((ratios[0] + ratios[1]) * n) - n_train
    class_sizes = [len(ids) for ids in by_label.values()]
    train_alloc = _apportion(class_sizes, n_train)
    val_alloc = _apportion(class_sizes, n_val)
    parts: dict[str, list[str]] = {"train": [], "val": [], "test": []}
    for (label, ids), n_tr, n_va in zip(by_label.items(), train_alloc, val_alloc):
        order = rng.permutation(len(ids))
        shuffled = [ids[i] for i in order]
        parts["train"] += shuffled[:n_tr]
        parts["val"] += shuffled[n_tr:n_tr + n_va]
        parts["test"] += shuffled[n_tr + n_va:]
    return SplitDataset(train_ids=parts["train"], val_ids=parts["val"],
                        test_ids=parts["test"], seed=seed)


def select_emails(corpus: list[RawEmail], ids: list[str]) -> list[RawEmail]:
    by_id = {e.id: e for e in corpus}
    return [by_id[i] for i in ids]


def encode_corpus(emails: list[RawEmail], vocab: Vocabulary,
                  config: TrainConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Token ids [n, L, T], labels [n], real sentence counts [n]."""
    toks = [encode_email(e, vocab, config.max_sentences, config.max_tokens) for e in emails]
    ids = np.stack([t.ids for t in toks])
    labels = np.array([e.label for e in emails], dtype=np.int64)
    counts = np.array([t.real_sentence_count for t in toks], dtype=np.int64)
    return ids, labels, counts


def _apply_update(params: ModelParams, optimizer: Adam, names: list[str],
                  threshold: float) -> tuple[float, float]:
    """Clip the chosen parameters' gradients globally, then Adam-step them."""
    named = params.named_parameters()
    # parameter grads are freshly allocated by their backward rules, so the
    # in-place clip cannot alias another tensor's gradient
    grads = [named[n].grad_or_zeros() for n in names]
    for n, g in zip(names, grads):
        named[n].grad = g
    pre, post = clip_global_norm(grads, threshold)
    optimizer.step(names)
    return pre, post


def train_step_disjoint(batch: Batch, params: ModelParams, optimizer: Adam,
                        config: TrainConfig, rng: np.random.Generator) -> dict:
    """One Adam step of the classifier and encoder on the random-mask loss.

    Selector parameters are neither read nor written.
    """
    names = params.encoder_param_names() + params.classifier_param_names()
    all_tensors = list(params.named_parameters().values())
    zero_grads(all_tensors)
    with Tape() as tape:
        loss = random_mask_loss(batch, params, config, rng)
    value = loss.item()
    if not math.isfinite(value):
        raise TrainingDivergedError(f"random-mask loss became {value}")
    backward(loss, tape)
    pre, post = _apply_update(params, optimizer, names, config.clip_threshold)
    zero_grads(all_tensors)
    return {"random_mask_loss": value, "grad_norm_pre": pre, "grad_norm_post": post}


def train_step_joint(batch: Batch, params: ModelParams, optimizer: Adam,
                     config: TrainConfig, rng: np.random.Generator) -> dict:
    """One Adam step of all parameters on the joint objective."""
    names = list(params.named_parameters())
    all_tensors = list(params.named_parameters().values())
    zero_grads(all_tensors)
    with Tape() as tape:
        breakdown = joint_loss(batch, params, config, rng)
    if not math.isfinite(breakdown.total):
        raise TrainingDivergedError(
            f"joint loss became {breakdown.total} (ce={breakdown.ce}, "
            f"ib_penalty={breakdown.ib_penalty})")
    backward(breakdown.total_node, tape)
    pre, post = _apply_update(params, optimizer, names, config.clip_threshold)
    zero_grads(all_tensors)
    return {"ce": breakdown.ce, "ib_penalty": breakdown.ib_penalty,
            "total": breakdown.total, "grad_norm_pre": pre, "grad_norm_post": post}


@dataclass
class TrainResult:
    model: TrainedModel            # best-validation parameters
    log_rows: list[dict]
    best_epoch: int
    best_val_accuracy: float
    split: SplitDataset
    final_model: TrainedModel = field(repr=False, default=None)


def _snapshot(params: ModelParams) -> dict[str, np.ndarray]:
    return {name: t.data.copy() for name, t in params.named_parameters().items()}


def _restore(params: ModelParams, state: dict[str, np.ndarray]) -> ModelParams:
    clone = copy.deepcopy(params)
    for name, t in clone.named_parameters().items():
        t.data = state[name].copy()
        t.grad = None
    return clone


def validate_checkpoint(model: TrainedModel, emails: list[RawEmail]) -> dict:
    """Top-1 label accuracy and F1 on a frozen model, inference mode."""
    from .metrics import f1_score

    if not emails:
        raise ConfigError("validation split is empty")
    preds = model.predict_batch(emails)
    correct = sum(1 for pr, e in zip(preds, emails) if pr.label == e.label)
    f1 = f1_score([pr.label for pr in preds], [e.label for e in emails])
    return {"label_accuracy": correct / len(emails), "f1": f1, "n": len(emails)}


def train(corpus: list[RawEmail], config: TrainConfig) -> TrainResult:
    """Run the full alternating loop and keep the best-validation checkpoint."""
    config.validate()
    split = split_dataset(corpus, config.seed)
    train_emails = select_emails(corpus, split.train_ids)
    val_emails = select_emails(corpus, split.val_ids)
    vocab = build_vocabulary(train_emails, cap=config.vocab_cap)
    ids, labels, counts = encode_corpus(train_emails, vocab, config)

    init_rng = rng_for(config.seed, _STREAM_INIT)
    params = init_model_params(
        vocab_size=vocab.size, rng=init_rng,
        max_sentences=config.max_sentences, max_tokens=config.max_tokens,
        embed_dim=config.embed_dim, kernel_size=config.kernel_size,
        selector_hidden=tuple(config.selector_hidden),
        classifier_hidden=tuple(config.classifier_hidden))
    optimizer = Adam(params.named_parameters(), learning_rate=config.learning_rate)
    train_rng = rng_for(config.seed, _STREAM_TRAIN)

    n = len(train_emails)
    steps_per_epoch = math.ceil(n / config.batch_size)
    log_rows: list[dict] = []
    best_state: dict[str, np.ndarray] | None = None
    best_val = -1.0
    best_epoch = -1
    step = 0
    for epoch in range(1, config.epochs + 1):
        order = train_rng.permutation(n)
        for s in range(steps_per_epoch):
            idx = order[s * config.batch_size:(s + 1) * config.batch_size]
            batch = Batch(ids=ids[idx], labels=labels[idx], real_counts=counts[idx])
            step += 1
            row = {"epoch": epoch, "step": step, "ce": "", "ib_penalty": "", "total": "",
                   "random_mask_loss": "", "grad_norm_pre": "", "grad_norm_post": "",
                   "val_accuracy": ""}
            norms = []
            if config.use_random_mask_step:
                disjoint = train_step_disjoint(batch, params, optimizer, config, train_rng)
                row["random_mask_loss"] = disjoint["random_mask_loss"]
                norms.append((disjoint["grad_norm_pre"], disjoint["grad_norm_post"]))
            joint = train_step_joint(batch, params, optimizer, config, train_rng)
            row.update({k: joint[k] for k in ("ce", "ib_penalty", "total")})
            norms.append((joint["grad_norm_pre"], joint["grad_norm_post"]))
            row["grad_norm_pre"] = max(p for p, _ in norms)
            row["grad_norm_post"] = max(q for _, q in norms)
            log_rows.append(row)

        snapshot_model = TrainedModel(params=params, vocab=vocab, config=config)
        val = validate_checkpoint(snapshot_model, val_emails)
        log_rows.append({"epoch": epoch, "step": "", "ce": "", "ib_penalty": "", "total": "",
                         "random_mask_loss": "", "grad_norm_pre": "", "grad_norm_post": "",
                         "val_accuracy": val["label_accuracy"]})
        if val["label_accuracy"] > best_val:
            best_val = val["label_accuracy"]
            best_epoch = epoch
            best_state = _snapshot(params)

    best_params = _restore(params, best_state)
    return TrainResult(
        model=TrainedModel(params=best_params, vocab=vocab, config=config),
        log_rows=log_rows, best_epoch=best_epoch, best_val_accuracy=best_val,
        split=split,
        final_model=TrainedModel(params=params, vocab=vocab, config=config))


def write_training_log(path: str | Path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=LOG_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
