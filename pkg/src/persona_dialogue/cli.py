"""Command-line entry point: train / eval / generate / chat / serve.

Configuration values resolve in order default < config file < flag, and every
resolved value's provenance is recorded in the run manifest.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import training
from .data import load_cmudog, load_convai2
from .training import Checkpoint, TrainConfig
from .vocab import tokenize

_OPTIONAL_INT = ("hidden", "epochs", "l_c_max", "l_p_max", "max_vocab", "max_steps")

CONFIG_PARSERS = {
    "dataset": str, "persona_mode": str, "embeddings_path": str,
    "emb_dim": int, "batch_size": int, "seed": int, "beam_size": int,
    "max_decode_len": int, "k_max": int, "min_freq": int,
    "lr": float, "dropout": float, "clip_norm": float,
    "target_valid_loss": float,
    "no_style": lambda s: s.lower() in ("1", "true", "yes"),
    "no_knowledge_update": lambda s: s.lower() in ("1", "true", "yes"),
    "no_coverage": lambda s: s.lower() in ("1", "true", "yes"),
    **{k: int for k in _OPTIONAL_INT},
}


def read_config_file(path: str) -> dict:
    """Flat ``key=value`` lines; blank lines and # comments ignored."""
    values = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in CONFIG_PARSERS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = CONFIG_PARSERS[key](val.strip())
    return values


def add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--dataset", choices=["convai2", "cmudog"])
    p.add_argument("--persona-mode", dest="persona_mode",
                   choices=["original", "revised"])
    p.add_argument("--hidden", type=int)
    p.add_argument("--emb-dim", dest="emb_dim", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--dropout", type=float)
    p.add_argument("--clip", dest="clip_norm", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--beam-size", dest="beam_size", type=int)
    p.add_argument("--max-decode-len", dest="max_decode_len", type=int)
    p.add_argument("--k-max", dest="k_max", type=int)
    p.add_argument("--l-c-max", dest="l_c_max", type=int)
    p.add_argument("--l-p-max", dest="l_p_max", type=int)
    p.add_argument("--min-freq", dest="min_freq", type=int)
    p.add_argument("--max-vocab", dest="max_vocab", type=int)
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p.add_argument("--target-valid-loss", dest="target_valid_loss", type=float)
    p.add_argument("--embeddings", dest="embeddings_path",
                   help="pretrained text vectors copied into the embedding table")
    p.add_argument("--no-style", dest="no_style", action="store_const", const=True)
    p.add_argument("--no-knowledge-update", dest="no_knowledge_update",
                   action="store_const", const=True)
    p.add_argument("--no-coverage", dest="no_coverage",
                   action="store_const", const=True)


def resolve_config(args) -> tuple[TrainConfig, dict]:
    """Merge defaults, config file, and flags; track provenance per key."""
    defaults = TrainConfig()
    values = {k: getattr(defaults, k) for k in defaults.__dataclass_fields__}
    manifest = {k: {"value": v, "source": "default"} for k, v in values.items()}
    if args.config:
        for k, v in read_config_file(args.config).items():
            values[k] = v
            manifest[k] = {"value": v, "source": "file"}
    for k in CONFIG_PARSERS:
        flag_val = getattr(args, k, None)
        if flag_val is not None:
            values[k] = flag_val
            manifest[k] = {"value": flag_val, "source": "flag"}
    config = TrainConfig(**values)
    for k in manifest:
        manifest[k]["value"] = getattr(config, k)
    return config, manifest


def load_examples(config: TrainConfig, path: str):
    if config.dataset == "cmudog":
        return load_cmudog(path)
    return load_convai2(path, config.persona_mode)


def cmd_train(args) -> int:
    config, manifest = resolve_config(args)
    train_examples = load_examples(config, args.data)
    if args.valid_data:
        valid_examples = load_examples(config, args.valid_data)
    else:
        rng = np.random.default_rng(config.seed)
        order = rng.permutation(len(train_examples))
        n_valid = max(1, len(train_examples) // 10)
        valid_examples = [train_examples[i] for i in order[:n_valid]]
        train_examples = [train_examples[i] for i in order[n_valid:]]
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "run_manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, default=str)
    history, best, _ = training.train(config, train_examples, valid_examples,
                                      out_dir=args.out, log_every=args.log_every)
    for rec in history:
        print(f"epoch {rec.epoch}: train_loss={rec.train_loss:.6f} "
              f"valid_loss={rec.valid_loss:.6f}")
    print(f"best checkpoint: epoch {best.epoch} "
          f"(valid_loss={best.valid_loss:.6f}) -> {args.out}/best.npz")
    return 0


def cmd_eval(args) -> int:
    checkpoint = Checkpoint.load(args.checkpoint)
    examples = load_examples(checkpoint.config, args.data)
    report, _ = training.evaluate(checkpoint, examples, beam_size=args.beam_size,
                                  max_len=args.max_decode_len, out_dir=args.out)
    sys.stdout.write(report.to_flat_text())
    return 0


def cmd_generate(args) -> int:
    checkpoint = Checkpoint.load(args.checkpoint)
    config = checkpoint.config.resolved()
    vocab = checkpoint.vocab
    beam = args.beam_size if args.beam_size is not None else config.beam_size
    max_len = (args.max_decode_len if args.max_decode_len is not None
               else config.max_decode_len)
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        with open(args.input, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                record = json.loads(line)
                persona_a = [vocab.encode(tokenize(s)[:config.k_max])
                             for s in record["persona_a"]]
                persona_b = [vocab.encode(tokenize(s)[:config.k_max])
                             for s in record.get("persona_b", record["persona_a"])]
                context = [vocab.encode(tokenize(s)[:config.k_max])
                           for s in record["context"][-config.l_c_max:]]
                ids = model_generate(checkpoint, persona_a, persona_b, context,
                                     beam, max_len)
                out.write(json.dumps({"reply": vocab.decode_text(ids)}) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def model_generate(checkpoint, persona_a, persona_b, context, beam, max_len):
    from . import model
    ex = {"persona_a": persona_a, "persona_b": persona_b, "context": context}
    return model.generate(checkpoint.params, ex,
                          flags=checkpoint.config.resolved().flags(),
                          beam_size=beam, max_len=max_len)


def cmd_chat(args, stdin=None, stdout=None) -> int:
    from .serve import ChatService, DecodeConfig
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    checkpoint = Checkpoint.load(args.checkpoint)
    service = ChatService(checkpoint)
    if args.persona:
        persona_a = [s.strip() for s in
                     open(args.persona, encoding="utf-8") if s.strip()]
    else:
        stdout.write("enter persona sentences, blank line to finish:\n")
        persona_a = []
        for line in stdin:
            if not line.strip():
                break
            persona_a.append(line.strip())
    decode = DecodeConfig(beam_size=args.beam_size or 1,
                          max_len=args.max_decode_len or 30)
    session = service.create_session(persona_a, None, decode)
    stdout.write("you> ")
    stdout.flush()
    for line in stdin:
        text = line.strip()
        if text in ("", "/quit", "/exit"):
            break
        result = service.post_message(session.session_id, text)
        cov = " ".join(f"{c:.2f}" for c in result["coverage"])
        stdout.write(f"bot> {result['reply']}\n[coverage {cov}]\nyou> ")
        stdout.flush()
    stdout.write("\n")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .serve import create_app
    ui_dir = args.ui_dir if args.ui_dir and os.path.isdir(args.ui_dir) else None
    app = create_app(args.checkpoint, ui_dir=ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="persona-dialogue",
        description="persona-aware dialogue model: train, evaluate, and chat")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model")
    add_config_flags(p)
    p.add_argument("--data", required=True, help="training corpus (supports {mode})")
    p.add_argument("--valid-data", dest="valid_data",
                   help="validation corpus; default: 10%% held out of --data")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--log-every", dest="log_every", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="decode a corpus and report metrics")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="directory for report + generations files")
    p.add_argument("--beam-size", dest="beam_size", type=int)
    p.add_argument("--max-decode-len", dest="max_decode_len", type=int)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("generate", help="batch-decode a JSONL file of contexts")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True,
                   help="JSONL with persona_a, optional persona_b, context")
    p.add_argument("--output", help="output JSONL (default stdout)")
    p.add_argument("--beam-size", dest="beam_size", type=int)
    p.add_argument("--max-decode-len", dest="max_decode_len", type=int)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("chat", help="interactive terminal chat")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--persona", help="file with one persona sentence per line")
    p.add_argument("--beam-size", dest="beam_size", type=int)
    p.add_argument("--max-decode-len", dest="max_decode_len", type=int)
    p.set_defaults(func=cmd_chat)

    p = sub.add_parser("serve", help="start the HTTP chat service")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui-dir", dest="ui_dir",
                   help="static chat UI directory to mount at /ui")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 130
    except Exception as e:  # runtime failure -> exit 1 with a message
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
