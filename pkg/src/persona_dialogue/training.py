"""Teacher-forced training with Adam, global-norm gradient clipping, seeded
shuffling, per-epoch CSV logging, checkpointing, and corpus evaluation."""

from __future__ import annotations

import csv
import json
import os
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import metrics as metrics_mod
from . import model as model_mod
from .data import (Batch, DialogueExample, encode_batch,
                   load_pretrained_embeddings)
from .metrics import EvalReport
from .model import AblationFlags, ForwardOptions
from .vocab import Vocabulary, build_vocab

DATASET_DEFAULTS = {
    "convai2": {"hidden": 800, "epochs": 25, "l_c_max": 10, "l_p_max": 5},
    "cmudog": {"hidden": 500, "epochs": 35, "l_c_max": 20, "l_p_max": 20},
}


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    """Everything a run needs; None fields resolve to per-dataset defaults."""

    dataset: str = "convai2"
    persona_mode: str = "original"
    hidden: int | None = None
    emb_dim: int = 300
    d_a: int | None = None
    lr: float = 0.00005
    dropout: float = 0.3
    clip_norm: float = 5.0
    epochs: int | None = None
    batch_size: int = 32
    seed: int = 0
    beam_size: int = 1
    max_decode_len: int = 30
    k_max: int = 30
    l_c_max: int | None = None
    l_p_max: int | None = None
    min_freq: int = 1
    max_vocab: int | None = None
    embeddings_path: str | None = None    # pretrained text vectors (token v_1 ... v_n)
    no_style: bool = False
    no_knowledge_update: bool = False
    no_coverage: bool = False
    max_steps: int | None = None           # stop mid-epoch after this many updates
    target_valid_loss: float | None = None  # early stop once validation reaches it

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must be in [0, 1)")
        if self.clip_norm <= 0:
            raise ValueError("clip_norm must be > 0")

    def resolved(self) -> "TrainConfig":
        defaults = DATASET_DEFAULTS.get(self.dataset, DATASET_DEFAULTS["convai2"])
        updates = {k: defaults[k] for k in ("hidden", "epochs", "l_c_max", "l_p_max")
                   if getattr(self, k) is None}
        return replace(self, **updates) if updates else self

    def flags(self) -> AblationFlags:
        return AblationFlags(no_style=self.no_style,
                             no_knowledge_update=self.no_knowledge_update,
                             no_coverage=self.no_coverage)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in known})


def clip_gradients(grads: dict, max_norm: float = 5.0) -> dict:
    """Scale all gradients so the global L2 norm is at most ``max_norm``."""
    total = 0.0
    for g in grads.values():
        if not np.isfinite(g).all():
            raise ValueError("non-finite gradient")
        total += float((g * g).sum())
    norm = np.sqrt(total)
    if norm <= max_norm:
        return grads
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}


class Adam:
    """Standard Adam with bias correction over a flat parameter dict."""

    def __init__(self, params: dict, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        b1t = 1 - self.beta1 ** self.t
        b2t = 1 - self.beta2 ** self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / b1t) / (np.sqrt(self.v[k] / b2t) + self.eps)

    def state_arrays(self) -> dict:
        out = {f"adam_m/{k}": v for k, v in self.m.items()}
        out.update({f"adam_v/{k}": v for k, v in self.v.items()})
        return out

    def load_state(self, arrays: dict, t: int) -> None:
        self.m = {k[len("adam_m/"):]: arrays[k] for k in arrays if k.startswith("adam_m/")}
        self.v = {k[len("adam_v/"):]: arrays[k] for k in arrays if k.startswith("adam_v/")}
        self.t = t


@dataclass
class Checkpoint:
    params: dict
    config: TrainConfig
    vocab: Vocabulary
    epoch: int = 0
    valid_loss: float = float("inf")
    adam_state: dict = field(default_factory=dict)
    adam_t: int = 0

    def save(self, path: str) -> None:
        arrays = {f"param/{k}": v for k, v in self.params.items()}
        arrays.update(self.adam_state)
        meta = {"config": self.config.to_dict(), "vocab": self.vocab.to_list(),
                "epoch": self.epoch, "valid_loss": self.valid_loss,
                "adam_t": self.adam_t}
        np.savez(path, __meta__=json.dumps(meta), **arrays)

    @classmethod
    def load(cls, path: str) -> "Checkpoint":
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["__meta__"]))
            params = {k[len("param/"):]: z[k] for k in z.files if k.startswith("param/")}
            adam_state = {k: z[k] for k in z.files if k.startswith(("adam_m/", "adam_v/"))}
        return cls(params=params, config=TrainConfig.from_dict(meta["config"]),
                   vocab=Vocabulary.from_list(meta["vocab"]), epoch=meta["epoch"],
                   valid_loss=meta["valid_loss"], adam_state=adam_state,
                   adam_t=meta["adam_t"])


def _param_norms(params: dict) -> dict:
    return {k: float(np.linalg.norm(v)) for k, v in params.items()}


def _batches(examples, batch_size, rng: np.random.Generator | None):
    order = np.arange(len(examples))
    if rng is not None:
        rng.shuffle(order)
    for start in range(0, len(order), batch_size):
        yield [examples[i] for i in order[start:start + batch_size]]


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    valid_loss: float
    wall_time: float


def corpus_loss(params: dict, examples, config: TrainConfig, vocab) -> float:
    """Token-weighted mean NLL over a corpus, evaluation mode."""
    opts = ForwardOptions(flags=config.flags())
    total, count = 0.0, 0
    for chunk in _batches(examples, config.batch_size, rng=None):
        batch = encode_batch(chunk, vocab, config.k_max, config.l_c_max,
                             config.l_p_max)
        loss = model_mod.batch_loss(params, batch, opts)
        n = int(batch.response_lens.sum())
        total += loss * n
        count += n
    return total / count


def train(config: TrainConfig, train_examples: list[DialogueExample],
          valid_examples: list[DialogueExample], out_dir: str | None = None,
          vocab: Vocabulary | None = None, params: dict | None = None,
          log_every: int | None = None):
    """Run the full training loop.

    Returns (history of EpochRecords, best Checkpoint, vocab). When
    ``out_dir`` is given, writes ``log.csv`` plus ``best.npz`` / ``last.npz``.
    """
    if not train_examples or not valid_examples:
        raise ValueError("need non-empty train and valid corpora")
    config = config.resolved()
    rng = np.random.default_rng(config.seed)
    if vocab is None:
        vocab = build_vocab(train_examples, config.min_freq, config.max_vocab)
    if params is None:
        embedding = None
        if config.embeddings_path:
            embedding = load_pretrained_embeddings(
                config.embeddings_path, vocab, config.emb_dim, config.seed)
        params = model_mod.init_params(rng, len(vocab), config.hidden,
                                       config.emb_dim, config.d_a,
                                       embedding=embedding)
    optimizer = Adam(params, lr=config.lr)
    flags = config.flags()

    log_path = None
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        log_path = os.path.join(out_dir, "log.csv")
        with open(log_path, "w", newline="") as f:
            csv.writer(f).writerow(["epoch", "train_loss", "valid_loss", "wall_time"])

    history: list[EpochRecord] = []
    best: Checkpoint | None = None
    step = 0
    stop = False
    start_time = time.time()

    for epoch in range(1, (config.epochs or 1) + 1):
        epoch_loss, epoch_tokens = 0.0, 0
        for batch_index, chunk in enumerate(_batches(train_examples,
                                                     config.batch_size, rng)):
            batch = encode_batch(chunk, vocab, config.k_max, config.l_c_max,
                                 config.l_p_max)
            opts = ForwardOptions(flags=flags, dropout=config.dropout,
                                  train=True, rng=rng)
            loss, grads = model_mod.batch_loss_and_grads(params, batch, opts)
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, batch {batch_index}; "
                    f"parameter norms: {_param_norms(params)}")
            grads = clip_gradients(grads, config.clip_norm)
            optimizer.step(params, grads)
            n = int(batch.response_lens.sum())
            epoch_loss += loss * n
            epoch_tokens += n
            step += 1
            if log_every and step % log_every == 0:
                print(f"step {step}: batch loss {loss:.4f}")
            if config.max_steps is not None and step >= config.max_steps:
                stop = True
                break

        train_loss = epoch_loss / max(epoch_tokens, 1)
        valid_loss = corpus_loss(params, valid_examples, config, vocab)
        record = EpochRecord(epoch=epoch, train_loss=train_loss,
                             valid_loss=valid_loss,
                             wall_time=time.time() - start_time)
        history.append(record)
        if log_path:
            with open(log_path, "a", newline="") as f:
                csv.writer(f).writerow([record.epoch, f"{record.train_loss:.10f}",
                                        f"{record.valid_loss:.10f}",
                                        f"{record.wall_time:.3f}"])

        if best is None or valid_loss < best.valid_loss:
            best = Checkpoint(params={k: v.copy() for k, v in params.items()},
                              config=config, vocab=vocab, epoch=epoch,
                              valid_loss=valid_loss,
                              adam_state=optimizer.state_arrays(),
                              adam_t=optimizer.t)
            if out_dir:
                best.save(os.path.join(out_dir, "best.npz"))
        if config.target_valid_loss is not None and valid_loss < config.target_valid_loss:
            stop = True
        if stop:
            break

    last = Checkpoint(params=params, config=config, vocab=vocab,
                      epoch=history[-1].epoch, valid_loss=history[-1].valid_loss,
                      adam_state=optimizer.state_arrays(), adam_t=optimizer.t)
    if out_dir:
        last.save(os.path.join(out_dir, "last.npz"))
    return history, best, vocab


def evaluate(checkpoint: Checkpoint, examples: list[DialogueExample],
             beam_size: int | None = None, max_len: int | None = None,
             out_dir: str | None = None):
    """Decode every example and score against gold responses.

    Returns (EvalReport, decoded token lists). With ``out_dir``, writes
    ``report.txt`` (flat key-value), ``report.json``, and ``generations.jsonl``
    with the knowledge / context / gold / generated quadruple per example.
    """
    if not examples:
        raise ValueError("cannot evaluate an empty corpus")
    config = checkpoint.config.resolved()
    vocab = checkpoint.vocab
    beam_size = beam_size if beam_size is not None else config.beam_size
    max_len = max_len if max_len is not None else config.max_decode_len
    expected = checkpoint.params["emb"].shape[0]
    if len(vocab) != expected:
        raise ValueError(f"vocabulary size {len(vocab)} does not match "
                         f"checkpoint embedding rows {expected}")

    batch = encode_batch(examples, vocab, config.k_max, config.l_c_max,
                         config.l_p_max)
    outputs, golds, knowledge = [], [], []
    for i in range(len(batch)):
        ex_ids = batch.example_ids(i)
        decoded = model_mod.generate(checkpoint.params, ex_ids,
                                     flags=config.flags(), beam_size=beam_size,
                                     max_len=max_len)
        outputs.append(vocab.decode(decoded))
        golds.append(list(examples[i].response))
        knowledge.append([list(s) for s in examples[i].persona_a])

    report = metrics_mod.evaluate_corpus(outputs, golds, knowledge)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.txt"), "w") as f:
            f.write(report.to_flat_text())
        with open(os.path.join(out_dir, "report.json"), "w") as f:
            f.write(report.to_json())
        with open(os.path.join(out_dir, "generations.jsonl"), "w") as f:
            for ex, out in zip(examples, outputs):
                f.write(json.dumps({
                    "knowledge": [" ".join(s) for s in ex.persona_a],
                    "context": [" ".join(t) for t in ex.context],
                    "gold": " ".join(ex.response),
                    "generated": " ".join(out),
                }) + "\n")
    return report, outputs
