"""Training objectives for the selector and classifier.

The training signal has three parts:

* **Masked cross-entropy.**  Maximizing the dependence between the masked
  matrix X*z and the label Y is intractable directly, but a variational
  argument bounds it from below by the expected log-likelihood the
  classifier assigns to Y given X*z (up to a constant in the parameters).
  Minimizing the cross-entropy of the classifier on relaxed-mask samples
  therefore tightens that bound while training both networks.

* **Compression penalty.**  Left alone, the bound is also maximized by
  selecting everything.  Penalizing the dependence between X and X*z picks
  out small selections; with a zero-centered Gaussian prior of scale
  ``prior_scale`` on each masked row, the per-row KL term reduces (up to an
  additive constant with zero gradient) to p_i * ||x_i||^2 / (2 sigma^2),
  so the penalty is that sum, weighted by ``ib_weight``.  Pad rows are zero
  vectors and contribute nothing.

* **Random-mask cross-entropy.**  A classifier trained only against the
  selector's masks can learn to read the mask pattern itself rather than
  the sentences.  Training it (disjointly from the selector) on relaxed
  Bernoulli(0.5) masks anchors it to the data's own label distribution;
  the selector receives no gradient from this term by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .errors import ConfigError
from .model import (ModelParams, apply_mask, classify_batch, encode_sentences_batch,
                    sample_random_mask, sample_selection_mask, selection_probs_batch)
from .tensor import Tensor

PROB_FLOOR = 1e-12  # probabilities are clamped here before the log


@dataclass
class Batch:
    """Token ids [B, L, T], labels [B], and real sentence counts [B]."""

    ids: np.ndarray
    labels: np.ndarray
    real_counts: np.ndarray

    def __post_init__(self):
        if len(self.ids) == 0:
            raise ConfigError("batch must contain at least one email")


@dataclass
class LossBreakdown:
    """Components of the joint objective for one batch.

    ``total == ce + ib_weight * ib_penalty`` (up to 1e-12); ``total_node``
    is the differentiable scalar to backpropagate.
    """

    ce: float
    ib_penalty: float
    total: float
    ib_weight: float
    prior_scale: float
    total_node: Tensor = field(repr=False, default=None)


def cross_entropy(pred, y: int) -> float:
    """Negative log-likelihood -log pred[y] of a [2] probability vector."""
    p = pred.data if isinstance(pred, Tensor) else np.asarray(pred, dtype=np.float64)
    if y not in (0, 1):
        raise ConfigError(f"label must be 0 or 1, got {y}")
    return float(-np.log(np.clip(p[y], PROB_FLOOR, 1.0)))


def cross_entropy_mean(pred: Tensor, labels: np.ndarray) -> Tensor:
    """Differentiable mean of -log pred[b, labels[b]] over a batch."""
    labels = np.asarray(labels)
    if np.any((labels != 0) & (labels != 1)):
        raise ConfigError("labels must be 0 or 1")
    picked = T.select_index(pred, labels)
    return T.tmean(T.neg(T.log(T.clamp(picked, PROB_FLOOR, 1.0))))


def ib_penalty(p, x, prior_scale: float) -> float:
    """Selection cost of one email: sum_i p_i * ||x_i||^2 / (2 sigma^2)."""
    if prior_scale <= 0:
        raise ConfigError(f"prior_scale must be positive, got {prior_scale}")
    pv = p.data if isinstance(p, Tensor) else np.asarray(p, dtype=np.float64)
    xv = x.X.data if hasattr(x, "X") else (x.data if isinstance(x, Tensor) else np.asarray(x))
    sq_norms = (xv * xv).sum(axis=-1)
    return float((pv * sq_norms).sum() / (2.0 * prior_scale ** 2))


def ib_penalty_mean(p: Tensor, X: Tensor, prior_scale: float,
                    include_constant: bool = False) -> Tensor:
    """Differentiable batch mean of the selection cost.

    ``include_constant`` adds the prior's additive constant
    L * (log sigma + sigma^2 / 2); it has zero gradient and exists so tests
    can assert that dropping it changes no gradients.
    """
    if prior_scale <= 0:
        raise ConfigError(f"prior_scale must be positive, got {prior_scale}")
    sq_norms = T.tsum(T.square(X), axis=-1)
    per_email = T.tsum(T.mul(p, sq_norms), axis=-1)
    penalty = T.tmean(T.mul(per_email, 1.0 / (2.0 * prior_scale ** 2)))
    if include_constant:
        n_rows = X.shape[-2]
        penalty = T.add(penalty, n_rows * (np.log(prior_scale) + 0.5 * prior_scale ** 2))
    return penalty


def joint_loss(batch: Batch, params: ModelParams, config, rng: np.random.Generator,
               gumbel_noise: tuple[Tensor, Tensor] | None = None,
               include_constant: bool = False) -> LossBreakdown:
    """Masked cross-entropy plus the weighted compression penalty.

    Gradients reach the selector (through p and the relaxed mask), the
    classifier, and the encoder.
    """
    enc = encode_sentences_batch(batch.ids, batch.real_counts, params,
                                 training=True, rng=rng, retain_p=config.retain_prob)
    p = selection_probs_batch(enc.X, params, training=True, rng=rng,
                              retain_p=config.retain_prob)
    z = sample_selection_mask(p, config.temperature, rng, noise=gumbel_noise)
    pred = classify_batch(apply_mask(enc.X, z), params, training=True, rng=rng,
                          retain_p=config.retain_prob)
    ce = cross_entropy_mean(pred, batch.labels)
    penalty = ib_penalty_mean(p, enc.X, config.prior_scale, include_constant=include_constant)
    total = T.add(ce, T.mul(penalty, config.ib_weight))
    return LossBreakdown(ce=ce.item(), ib_penalty=penalty.item(), total=total.item(),
                         ib_weight=config.ib_weight, prior_scale=config.prior_scale,
                         total_node=total)


def random_mask_loss(batch: Batch, params: ModelParams, config,
                     rng: np.random.Generator,
                     mask_override: Tensor | None = None) -> Tensor:
    """Cross-entropy under relaxed Bernoulli(0.5) masks (scalar tensor).

    The mask does not depend on the selector, so selector parameters
    receive no gradient from this loss.  ``mask_override`` replaces the
    sampled mask for tests.
    """
    enc = encode_sentences_batch(batch.ids, batch.real_counts, params,
                                 training=True, rng=rng, retain_p=config.retain_prob)
    if mask_override is None:
        r = sample_random_mask(enc.X.shape[:-1], rng, config.temperature)
    else:
        r = mask_override
    pred = classify_batch(apply_mask(enc.X, r), params, training=True, rng=rng,
                          retain_p=config.retain_prob)
    return cross_entropy_mean(pred, batch.labels)
