"""Self-describing binary checkpoints (format version 1).

Layout::

    bytes 0..7    magic b"PHLCKPT1"
    bytes 8..15   header length H, little-endian uint64
    bytes 16..16+H  UTF-8 JSON header
    remainder     parameter buffers, concatenated in header order

The header records the format version, the full training configuration,
the vocabulary (one token per id), and for every parameter its name,
shape, and byte offset into the buffer region.  All buffers are row-major
little-endian float64.  Writing is deterministic: parameters are stored in
name-sorted order.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .model import init_model_params
from .pipeline import TrainedModel
from .text import Vocabulary
from .train import TrainConfig

MAGIC = b"PHLCKPT1"
FORMAT_VERSION = 1


def save_checkpoint(path: str | Path, model: TrainedModel) -> None:
    params = model.params.named_parameters()
    names = sorted(params)
    entries = []
    offset = 0
    buffers = []
    for name in names:
        arr = np.ascontiguousarray(params[name].data, dtype="<f8")
        nbytes = arr.nbytes
        entries.append({"name": name, "shape": list(arr.shape),
                        "offset": offset, "nbytes": nbytes})
        buffers.append(arr.tobytes())
        offset += nbytes
    header = {
        "format_version": FORMAT_VERSION,
        "config": dataclasses.asdict(model.config),
        "vocab": model.vocab.id_to_token,
        "dtype": "<f8",
        "params": entries,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(len(header_bytes).to_bytes(8, "little"))
        f.write(header_bytes)
        for buf in buffers:
            f.write(buf)


def load_checkpoint(path: str | Path) -> TrainedModel:
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != MAGIC:
            raise ConfigError(f"{path} is not a checkpoint (bad magic {magic!r})")
        header_len = int.from_bytes(f.read(8), "little")
        header = json.loads(f.read(header_len).decode("utf-8"))
        if header["format_version"] != FORMAT_VERSION:
            raise ConfigError(f"unsupported checkpoint format {header['format_version']}")
        blob = f.read()

    cfg_dict = dict(header["config"])
    cfg_dict["selector_hidden"] = tuple(cfg_dict["selector_hidden"])
    cfg_dict["classifier_hidden"] = tuple(cfg_dict["classifier_hidden"])
    config = TrainConfig(**cfg_dict)
    vocab = Vocabulary.from_tokens(header["vocab"])

    params = init_model_params(
        vocab_size=vocab.size, rng=np.random.default_rng(0),
        max_sentences=config.max_sentences, max_tokens=config.max_tokens,
        embed_dim=config.embed_dim, kernel_size=config.kernel_size,
        selector_hidden=config.selector_hidden,
        classifier_hidden=config.classifier_hidden)
    named = params.named_parameters()
    loaded = set()
    for entry in header["params"]:
        name = entry["name"]
        if name not in named:
            raise ConfigError(f"checkpoint has unknown parameter {name!r}")
        arr = np.frombuffer(blob, dtype="<f8", count=int(np.prod(entry["shape"])),
                            offset=entry["offset"]).reshape(entry["shape"])
        if tuple(arr.shape) != named[name].data.shape:
            raise ConfigError(f"shape mismatch for {name!r}: checkpoint {arr.shape}, "
                              f"model {named[name].data.shape}")
        named[name].data = arr.astype(np.float64).copy()
        loaded.add(name)
    missing = set(named) - loaded
    if missing:
        raise ConfigError(f"checkpoint is missing parameters: {sorted(missing)}")
    return TrainedModel(params=params, vocab=vocab, config=config)
