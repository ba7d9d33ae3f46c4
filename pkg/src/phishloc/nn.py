"""Neural building blocks: embeddings, dense layers, dropout, Adam, clipping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .errors import ConfigError, VocabularyError
from .tensor import Tensor


def uniform_init(rng: np.random.Generator, shape, limit: float = 0.05) -> np.ndarray:
    return rng.uniform(-limit, limit, size=shape)


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


@dataclass
class EmbeddingTable:
    """Token embedding matrix [V, dim]; the pad row stays exactly zero."""

    table: Tensor
    pad_id: int = 0

    @classmethod
    def create(cls, vocab_size: int, dim: int, rng: np.random.Generator) -> "EmbeddingTable":
        data = uniform_init(rng, (vocab_size, dim))
        data[0] = 0.0
        return cls(table=Tensor(data, requires_grad=True))

    @property
    def vocab_size(self) -> int:
        return self.table.shape[0]


def embedding_lookup(emb: EmbeddingTable, ids: np.ndarray) -> Tensor:
    """Gather embedding rows for ``ids`` (any integer shape) -> [..., dim].

    The backward pass scatter-adds into the looked-up rows, except the pad
    row, which never receives gradient.
    """
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= emb.vocab_size):
        raise VocabularyError(
            f"token id out of range [0, {emb.vocab_size}): min={ids.min()}, max={ids.max()}")
    return T.gather_rows(emb.table, ids, frozen_row=emb.pad_id)


@dataclass
class DenseLayer:
    """Affine map plus activation: activation(x @ weight + bias)."""

    weight: Tensor
    bias: Tensor
    activation: str = "none"

    @classmethod
    def create(cls, n_in: int, n_out: int, activation: str,
               rng: np.random.Generator) -> "DenseLayer":
        w = glorot_uniform(rng, (n_in, n_out), fan_in=n_in, fan_out=n_out)
        return cls(weight=Tensor(w, requires_grad=True),
                   bias=Tensor(np.zeros(n_out), requires_grad=True),
                   activation=activation)


def dense_forward(layer: DenseLayer, x: Tensor) -> Tensor:
    pre = T.add(T.matmul(x, layer.weight), layer.bias)
    return T.apply_activation(layer.activation, pre)


def dropout_apply(x: Tensor, retain_p: float, training: bool,
                  rng: np.random.Generator | None) -> Tensor:
    """Inverted dropout: keep with probability ``retain_p``, scale by 1/retain_p.

    Inference mode is an exact identity.
    """
    if retain_p <= 0.0 or retain_p > 1.0:
        raise ConfigError(f"retain_p must be in (0, 1], got {retain_p}")
    if not training:
        return x
    mask = (rng.random(x.shape) < retain_p) / retain_p
    return T.mul(x, Tensor(mask))


@dataclass
class AdamState:
    """Per-parameter Adam moments with the fixed hyperparameters."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    learning_rate: float = 1e-3
    scratch: np.ndarray = field(default=None, repr=False, compare=False)

    @classmethod
    def for_param(cls, param: Tensor, learning_rate: float = 1e-3) -> "AdamState":
        return cls(m=np.zeros_like(param.data), v=np.zeros_like(param.data),
                   learning_rate=learning_rate)


def adam_step(state: AdamState, param: Tensor, grad: np.ndarray | None = None) -> None:
    """One bias-corrected Adam update, in place on ``param.data``.

    Parameter update:  p -= lr * m_hat / (sqrt(v_hat) + eps)  with the
    usual bias-corrected moments; computed allocation-free via a scratch
    buffer and algebraically folded constants.
    """
    g = param.grad if grad is None else grad
    if g is None:
        raise ValueError("adam_step called with no gradient populated")
    if g.shape != param.data.shape:
        raise ValueError(f"gradient shape {g.shape} != parameter shape {param.data.shape}")
    if state.scratch is None or state.scratch.shape != param.data.shape:
        state.scratch = np.empty_like(param.data)
    s = state.scratch
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    state.m *= state.beta1
    np.multiply(g, 1.0 - state.beta1, out=s)
    state.m += s
    state.v *= state.beta2
    np.multiply(g, g, out=s)
    s *= 1.0 - state.beta2
    state.v += s
    # m_hat/(sqrt(v_hat)+eps) == m / (bc1/sqrt(bc2) * sqrt(v) + bc1*eps)
    np.sqrt(state.v, out=s)
    s *= bc1 / np.sqrt(bc2)
    s += bc1 * state.eps
    np.divide(state.m, s, out=s)
    s *= state.learning_rate
    param.data -= s


class Adam:
    """Adam over a named parameter dict, updating a chosen subset per step."""

    def __init__(self, params: dict[str, Tensor], learning_rate: float = 1e-3):
        self.params = params
        self.states = {name: AdamState.for_param(p, learning_rate)
                       for name, p in params.items()}

    def step(self, names: list[str] | None = None) -> None:
        for name in (names if names is not None else self.params):
            adam_step(self.states[name], self.params[name])


def clip_global_norm(grads: list[np.ndarray], threshold: float) -> tuple[float, float]:
    """Scale all gradients so their global L2 norm is at most ``threshold``.

    Mutates the arrays in place; returns (pre-clip norm, post-clip norm).
    A zero norm is left untouched.
    """
    if threshold <= 0:
        raise ConfigError(f"clip threshold must be positive, got {threshold}")
    norm = float(np.sqrt(sum(float(np.dot(g.ravel(), g.ravel())) for g in grads)))
    if norm > threshold:
        scale = threshold / norm
        for g in grads:
            g *= scale
        return norm, norm * scale
    return norm, norm
