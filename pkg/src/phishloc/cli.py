"""Command-line surface: data generation, training, evaluation, explanation.

Configuration is a flat key-value JSON document; command-line flags
override file values, and every command echoes the fully resolved
configuration it ran with (re-running with that file reproduces the
outputs exactly).  One ``--seed`` drives all randomness.

Exit codes: 0 success, 2 usage/config/input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, PhishlocError, TrainingDivergedError
from .metrics import (cognitive_true_positive, default_lexicon, explain_email, f1_score,
                      label_accuracy, load_lexicon, sac_score, write_metrics_csv)
from .synth import (SynthConfig, attach_ground_truth, generate_corpus, load_sidecar_jsonl,
                    localization_accuracy, write_sidecar_jsonl)
from .text import RawEmail, load_corpus_jsonl, write_corpus_jsonl
from .train import TrainConfig, select_emails, split_dataset, train, write_training_log

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

# every config key with its default; config files may set exactly these
CONFIG_DEFAULTS: dict = {
    "seed": 0,
    "out": None,
    "corpus": None,
    "lexicon": None,
    "checkpoint": None,
    "sidecar": None,
    "text": None,
    "k": 3,
    # training
    "lambda": 1e-2,
    "sigma": 0.1,
    "tau": 0.5,
    "epochs": 10,
    "batch_size": 128,
    "learning_rate": 1e-3,
    "clip_threshold": 5.0,
    "retain_prob": 0.8,
    "vocab_cap": 20000,
    "max_sentences": 100,
    "max_tokens": 30,
    "embed_dim": 150,
    "kernel_size": 3,
    "selector_hidden": [300, 300, 100],
    "classifier_hidden": [300, 100],
    "no_ib": False,
    "no_ddm": False,
    # generation
    "n": 2000,
    "phishing_ratio": 0.5,
    "sentences_min": 4,
    "sentences_max": 12,
}


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then config-file values, then explicit flags."""
    cfg = dict(CONFIG_DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as f:
            file_cfg = json.load(f)
        unknown = [k for k in file_cfg if k not in CONFIG_DEFAULTS]
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        cfg.update(file_cfg)
    for key in CONFIG_DEFAULTS:
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None and flag is not False:
            cfg[key] = flag
    return cfg


def train_config_from(cfg: dict) -> TrainConfig:
    config = TrainConfig(
        ib_weight=0.0 if cfg["no_ib"] else float(cfg["lambda"]),
        prior_scale=float(cfg["sigma"]),
        temperature=float(cfg["tau"]),
        learning_rate=float(cfg["learning_rate"]),
        batch_size=int(cfg["batch_size"]),
        epochs=int(cfg["epochs"]),
        clip_threshold=float(cfg["clip_threshold"]),
        seed=int(cfg["seed"]),
        max_sentences=int(cfg["max_sentences"]),
        max_tokens=int(cfg["max_tokens"]),
        embed_dim=int(cfg["embed_dim"]),
        kernel_size=int(cfg["kernel_size"]),
        retain_prob=float(cfg["retain_prob"]),
        vocab_cap=int(cfg["vocab_cap"]),
        selector_hidden=tuple(cfg["selector_hidden"]),
        classifier_hidden=tuple(cfg["classifier_hidden"]),
        use_random_mask_step=not cfg["no_ddm"],
    )
    config.validate()
    return config


def synth_config_from(cfg: dict) -> SynthConfig:
    config = SynthConfig(
        n_emails=int(cfg["n"]),
        phishing_ratio=float(cfg["phishing_ratio"]),
        sentences_min=int(cfg["sentences_min"]),
        sentences_max=int(cfg["sentences_max"]),
        seed=int(cfg["seed"]),
    )
    config.validate()
    return config


def _echo_config(cfg: dict, out_dir: Path | None) -> None:
    text = json.dumps(cfg, sort_keys=True, indent=2)
    if out_dir is not None:
        (out_dir / "effective_config.json").write_text(text + "\n", encoding="utf-8")
    else:
        print(text, file=sys.stderr)


def _require(cfg: dict, key: str) -> str:
    if not cfg.get(key):
        raise ConfigError(f"--{key.replace('_', '-')} is required for this command")
    return cfg[key]


def _out_dir(cfg: dict) -> Path:
    out = Path(_require(cfg, "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_lexicon(cfg: dict) -> dict:
    return load_lexicon(cfg["lexicon"]) if cfg["lexicon"] else default_lexicon()


def cmd_gen_data(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    synth_cfg = synth_config_from(cfg)
    out = _out_dir(cfg)
    emails = generate_corpus(synth_cfg)
    write_corpus_jsonl(out / "corpus.jsonl", emails)
    write_sidecar_jsonl(out / "corpus.triggers.jsonl", emails)
    _echo_config(cfg, out)
    n_phish = sum(e.label for e in emails)
    print(f"{len(emails)} emails ({n_phish} phishing) written to {out}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    config = train_config_from(cfg)
    corpus = load_corpus_jsonl(_require(cfg, "corpus"))
    out = _out_dir(cfg)
    result = train(corpus, config)

    from .checkpoint import save_checkpoint

    save_checkpoint(out / "checkpoint.bin", result.model)
    write_training_log(out / "training_log.csv", result.log_rows)
    _echo_config(cfg, out)
    print(f"best epoch {result.best_epoch} "
          f"(validation accuracy {result.best_val_accuracy:.4f}); "
          f"checkpoint and log written to {out}")
    return EXIT_OK


def _find_sidecar(cfg: dict, corpus_path: str) -> Path | None:
    if cfg.get("sidecar"):
        return Path(cfg["sidecar"])
    guess = Path(str(corpus_path).removesuffix(".jsonl") + ".triggers.jsonl")
    return guess if guess.exists() else None


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    corpus_path = _require(cfg, "corpus")

    from .checkpoint import load_checkpoint

    model = load_checkpoint(_require(cfg, "checkpoint"))
    corpus = load_corpus_jsonl(corpus_path)
    out = _out_dir(cfg)
    lexicon = _load_lexicon(cfg)

    split = split_dataset(corpus, model.config.seed)
    test_emails = select_emails(corpus, split.test_ids)
    phishing = [e for e in test_emails if e.label == 1]
    preds = model.predict_batch(test_emails)

    rows = [
        ("label_accuracy", label_accuracy(model, test_emails), len(test_emails)),
        ("f1", f1_score([p.label for p in preds], [e.label for e in test_emails]),
         len(test_emails)),
        ("cognitive_true_positive", cognitive_true_positive(model, phishing, lexicon),
         len(phishing)),
        ("sac", sac_score(model, phishing, lexicon), len(phishing)),
    ]
    sidecar_path = _find_sidecar(cfg, corpus_path)
    if sidecar_path is not None:
        sidecar = load_sidecar_jsonl(sidecar_path)
        synth_test = attach_ground_truth(test_emails, sidecar)
        rows.append(("localization_accuracy",
                     localization_accuracy(model, synth_test),
                     len(phishing)))
    write_metrics_csv(out / "metrics.csv", rows)
    _echo_config(cfg, out)
    for metric, value, n in rows:
        print(f"{metric}: {value:.4f} (n={n})")
    return EXIT_OK


def cmd_explain(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)

    from .checkpoint import load_checkpoint

    model = load_checkpoint(_require(cfg, "checkpoint"))
    lexicon = _load_lexicon(cfg)
    if cfg["text"]:
        emails = [RawEmail(id="stdin-0", text=cfg["text"], label=0)]
    elif cfg["corpus"]:
        emails = load_corpus_jsonl(cfg["corpus"])
    else:
        raise ConfigError("explain needs --text or --corpus")
    if not emails:
        raise ConfigError("no emails to explain")

    out = Path(cfg["out"]) if cfg["out"] else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    _echo_config(cfg, out)
    for email in emails:
        explanation = explain_email(model, email, lexicon, k=int(cfg["k"]))
        payload = json.dumps(explanation.to_json_dict())
        if out is not None:
            (out / f"{email.id}.explanation.json").write_text(payload + "\n",
                                                              encoding="utf-8")
        else:
            print(payload)
    if out is not None:
        print(f"{len(emails)} explanation(s) written to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phishloc",
        description="Weakly supervised phishing-sentence localization toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="flat JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")

    p_gen = sub.add_parser("gen-data", help="generate a synthetic corpus + sidecar")
    common(p_gen)
    p_gen.add_argument("--n", type=int, default=None, help="number of emails")
    p_gen.add_argument("--phishing-ratio", type=float, default=None)
    p_gen.set_defaults(func=cmd_gen_data)

    p_train = sub.add_parser("train", help="train on a corpus, keep the best checkpoint")
    common(p_train)
    p_train.add_argument("--corpus", default=None)
    p_train.add_argument("--lambda", dest="lambda", type=float, default=None,
                         help="compression penalty weight")
    p_train.add_argument("--sigma", type=float, default=None, help="prior scale")
    p_train.add_argument("--tau", type=float, default=None, help="relaxation temperature")
    p_train.add_argument("--epochs", type=int, default=None)
    p_train.add_argument("--batch-size", type=int, default=None)
    p_train.add_argument("--no-ib", action="store_true", default=False,
                         help="disable the compression penalty (lambda = 0)")
    p_train.add_argument("--no-ddm", action="store_true", default=False,
                         help="skip the disjoint random-mask classifier step")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="score a checkpoint on a corpus test split")
    common(p_eval)
    p_eval.add_argument("--corpus", default=None)
    p_eval.add_argument("--checkpoint", default=None)
    p_eval.add_argument("--lexicon", default=None)
    p_eval.set_defaults(func=cmd_eval)

    p_explain = sub.add_parser("explain", help="emit per-email explanation reports")
    common(p_explain)
    p_explain.add_argument("--corpus", default=None)
    p_explain.add_argument("--checkpoint", default=None)
    p_explain.add_argument("--lexicon", default=None)
    p_explain.add_argument("--text", default=None, help="explain a single email body")
    p_explain.add_argument("--k", type=int, default=None, help="ranking length")
    p_explain.set_defaults(func=cmd_explain)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (PhishlocError, OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
