"""The learnable pieces: sentence encoder, selection network, classifier,
relaxed-Bernoulli mask sampling, and top-k sentence ranking.

Each email is a [L, d] matrix of sentence vectors X.  The selector maps the
flattened matrix to per-sentence relevance probabilities p in (0, 1)^L.  A
relaxed Bernoulli sample z (temperature tau) gates the rows, and the
classifier reads the masked matrix X * z to predict benign vs phishing.
At inference there is no sampling: sentences are ranked by p and the
classifier sees a hard one-hot mask of the top-1 sentence.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ConfigError, DimensionError
from .nn import DenseLayer, EmbeddingTable, dense_forward, dropout_apply, embedding_lookup
from .tensor import Tensor


@dataclass
class EncodedEmail:
    """Sentence-vector matrix [L, d] plus which rows are real sentences.

    Pad rows are exactly zero."""

    X: Tensor
    pad_mask: np.ndarray  # bool [L], True = real sentence


@dataclass
class EncodedBatch:
    """Batched sentence vectors [B, L, d] with real-row mask [B, L]."""

    X: Tensor
    pad_mask: np.ndarray

    def email(self, i: int) -> EncodedEmail:
        return EncodedEmail(X=Tensor(self.X.data[i]), pad_mask=self.pad_mask[i])


@dataclass
class ModelParams:
    """All trainable parameters.

    The selector parameters drive the relevance probabilities; the
    classifier parameters map a masked sentence matrix to label
    probabilities; embedding and convolution parameters are shared by both
    paths through the encoded matrix.
    """

    embedding: EmbeddingTable
    conv_kernel: Tensor
    conv_bias: Tensor
    selector: list[DenseLayer]
    classifier: list[DenseLayer]
    max_sentences: int
    max_tokens: int
    embed_dim: int

    def named_parameters(self) -> dict[str, Tensor]:
        params = {
            "embedding.table": self.embedding.table,
            "conv.kernel": self.conv_kernel,
            "conv.bias": self.conv_bias,
        }
        for i, layer in enumerate(self.selector):
            params[f"selector.{i}.weight"] = layer.weight
            params[f"selector.{i}.bias"] = layer.bias
        for i, layer in enumerate(self.classifier):
            params[f"classifier.{i}.weight"] = layer.weight
            params[f"classifier.{i}.bias"] = layer.bias
        return params

    def encoder_param_names(self) -> list[str]:
        return ["embedding.table", "conv.kernel", "conv.bias"]

    def selector_param_names(self) -> list[str]:
        return [n for n in self.named_parameters() if n.startswith("selector.")]

    def classifier_param_names(self) -> list[str]:
        return [n for n in self.named_parameters() if n.startswith("classifier.")]


def init_model_params(vocab_size: int, rng: np.random.Generator,
                      max_sentences: int = 100, max_tokens: int = 30,
                      embed_dim: int = 150, kernel_size: int = 3,
                      selector_hidden: tuple[int, ...] = (300, 300, 100),
                      classifier_hidden: tuple[int, ...] = (300, 100)) -> ModelParams:
    """Seed-controlled initialization: uniform(+-0.05) embeddings, Glorot
    dense/conv weights, zero biases."""
    embedding = EmbeddingTable.create(vocab_size, embed_dim, rng)
    conv_limit = np.sqrt(6.0 / (kernel_size * embed_dim + kernel_size * embed_dim))
    conv_kernel = Tensor(rng.uniform(-conv_limit, conv_limit,
                                     size=(kernel_size, embed_dim, embed_dim)),
                         requires_grad=True)
    conv_bias = Tensor(np.zeros(embed_dim), requires_grad=True)

    flat_dim = max_sentences * embed_dim
    selector: list[DenseLayer] = []
    n_in = flat_dim
    for h in selector_hidden:
        selector.append(DenseLayer.create(n_in, h, "relu", rng))
        n_in = h
    selector.append(DenseLayer.create(n_in, max_sentences, "sigmoid", rng))

    classifier: list[DenseLayer] = []
    n_in = flat_dim
    for h in classifier_hidden:
        classifier.append(DenseLayer.create(n_in, h, "relu", rng))
        n_in = h
    classifier.append(DenseLayer.create(n_in, 2, "softmax", rng))

    return ModelParams(embedding=embedding, conv_kernel=conv_kernel, conv_bias=conv_bias,
                       selector=selector, classifier=classifier,
                       max_sentences=max_sentences, max_tokens=max_tokens,
                       embed_dim=embed_dim)


def encode_sentences_batch(ids: np.ndarray, real_counts: np.ndarray, params: ModelParams,
                           training: bool, rng: np.random.Generator | None,
                           retain_p: float = 0.8, trim_tokens: bool = True) -> EncodedBatch:
    """Encode token ids [B, L, T] to sentence vectors [B, L, d].

    Per real sentence: embedding lookup -> dropout -> valid conv (kernel 3)
    -> relu -> global max pool.  Pad sentences are skipped entirely and map
    to exact zero rows, which is equivalent to running them through the
    network and zeroing afterwards (their all-pad windows produce only the
    conv bias, which still competes in the pool via an appended bias row).

    ``trim_tokens`` drops trailing all-pad token columns shared by the whole
    batch before convolving; the appended bias row keeps the result exactly
    equal to the untrimmed computation (pad embeddings are frozen at zero).
    """
    b, l, t = ids.shape
    d = params.embed_dim
    k = params.conv_kernel.shape[0]
    pad_mask = np.arange(l)[None, :] < real_counts[:, None]
    flat_rows = np.flatnonzero(pad_mask.reshape(-1))
    if flat_rows.size == 0:
        return EncodedBatch(X=Tensor(np.zeros((b, l, d))), pad_mask=pad_mask)

    real_ids = ids.reshape(b * l, t)[flat_rows]
    if trim_tokens:
        token_lengths = (real_ids != 0).sum(axis=1)
        width = int(min(max(token_lengths.max() + k - 1, k), t))
    else:
        width = t
    trimmed = width < t

    emb = embedding_lookup(params.embedding, real_ids[:, :width])
    emb = dropout_apply(emb, retain_p, training, rng)
    conv = T.conv1d_valid(emb, params.conv_kernel, params.conv_bias)
    if trimmed:
        # stands in for the dropped all-pad windows, whose output is the bias
        conv = T.append_row(conv, params.conv_bias)
    pooled = T.global_max_pool(T.relu(conv))
    placed = T.scatter_rows(pooled, flat_rows, b * l)
    return EncodedBatch(X=T.reshape(placed, (b, l, d)), pad_mask=pad_mask)


def encode_sentences(tok, params: ModelParams, training: bool = False,
                     rng: np.random.Generator | None = None) -> EncodedEmail:
    """Single-email encoding; see :func:`encode_sentences_batch`."""
    batch = encode_sentences_batch(tok.ids[None], np.array([tok.real_sentence_count]),
                                   params, training, rng)
    return EncodedEmail(X=T.reshape(batch.X, batch.X.shape[1:]), pad_mask=batch.pad_mask[0])


def _mlp(layers: list[DenseLayer], x: Tensor, training: bool,
         rng: np.random.Generator | None, retain_p: float) -> Tensor:
    for layer in layers[:-1]:
        x = dropout_apply(dense_forward(layer, x), retain_p, training, rng)
    return dense_forward(layers[-1], x)


def selection_probs_batch(X: Tensor, params: ModelParams, training: bool = False,
                          rng: np.random.Generator | None = None,
                          retain_p: float = 0.8) -> Tensor:
    """Per-sentence relevance probabilities [B, L] from flattened [B, L*d]."""
    b = X.shape[0]
    flat = T.reshape(X, (b, X.shape[1] * X.shape[2]))
    return _mlp(params.selector, flat, training, rng, retain_p)


def selection_probs(x: EncodedEmail, params: ModelParams, training: bool = False,
                    rng: np.random.Generator | None = None) -> np.ndarray:
    """Single-email relevance probabilities [L]."""
    p = selection_probs_batch(T.reshape(x.X, (1,) + x.X.shape), params, training, rng)
    return p.data[0]


def classify_batch(X_masked: Tensor, params: ModelParams, training: bool = False,
                   rng: np.random.Generator | None = None,
                   retain_p: float = 0.8) -> Tensor:
    """Class probabilities [B, 2] (benign, phishing) for masked matrices."""
    b = X_masked.shape[0]
    flat = T.reshape(X_masked, (b, X_masked.shape[1] * X_masked.shape[2]))
    return _mlp(params.classifier, flat, training, rng, retain_p)


def classify(x_masked: Tensor, params: ModelParams, training: bool = False,
             rng: np.random.Generator | None = None) -> np.ndarray:
    """Single-email class probabilities [2]."""
    out = classify_batch(T.reshape(x_masked, (1,) + x_masked.shape), params, training, rng)
    return out.data[0]


def sample_selection_mask(p: Tensor, temperature: float, rng: np.random.Generator | None,
                          noise: tuple[Tensor, Tensor] | None = None) -> Tensor:
    """Relaxed Bernoulli sample z with per-entry keep probability p.

    z = sigmoid((log p - log(1-p) + a - b) / temperature) with a, b
    independent standard Gumbel draws; computed in log space and
    differentiable with respect to p.  ``noise`` overrides (a, b) for
    deterministic tests.
    """
    if temperature <= 0:
        raise ConfigError(f"temperature must be positive, got {temperature}")
    if noise is None:
        a = T.sample_gumbel(p.shape, rng)
        b = T.sample_gumbel(p.shape, rng)
    else:
        a, b = noise
    pc = T.clamp(p, T.UNIFORM_EPS, 1.0 - T.UNIFORM_EPS)
    logit = T.sub(T.log(pc), T.log(T.sub(1.0, pc)))
    return T.sigmoid(T.div(T.add(logit, T.sub(a, b)), temperature))


def sample_random_mask(shape, rng: np.random.Generator, temperature: float) -> Tensor:
    """Relaxed Bernoulli(0.5) mask used by the disjoint classifier step."""
    if temperature <= 0:
        raise ConfigError(f"temperature must be positive, got {temperature}")
    a = T.sample_gumbel(shape, rng)
    b = T.sample_gumbel(shape, rng)
    return T.sigmoid(T.div(T.sub(a, b), temperature))


def apply_mask(X: Tensor, z: Tensor) -> Tensor:
    """Row-wise gating: row i of the output is z_i times row i of X.

    Works on [L, d] with z [L] and on [B, L, d] with z [B, L].
    """
    if z.shape != X.shape[:-1]:
        raise DimensionError(f"mask shape {z.shape} does not match rows of {X.shape}")
    return T.mul(X, T.reshape(z, z.shape + (1,)))


def rank_sentences(p: np.ndarray, pad_mask: np.ndarray, k: int) -> list[int]:
    """Indices of the k most relevant real sentences, scores descending.

    Ties break toward the lower index; pad rows are never returned; k is
    clamped (with a warning) to the number of real sentences.
    """
    real = np.flatnonzero(pad_mask)
    if real.size == 0:
        raise DimensionError("cannot rank an email with no real sentences")
    if k > real.size:
        warnings.warn(f"k={k} exceeds the {real.size} real sentences; clamping")
        k = real.size
    if k < 1:
        raise ConfigError(f"k must be at least 1, got {k}")
    order = np.argsort(-p[real], kind="stable")
    return [int(real[i]) for i in order[:k]]


def hard_top1_mask(p: np.ndarray, pad_mask: np.ndarray) -> np.ndarray:
    """One-hot mask [L] selecting the top-1 real sentence."""
    z = np.zeros(p.shape[0])
    z[rank_sentences(p, pad_mask, 1)[0]] = 1.0
    return z
