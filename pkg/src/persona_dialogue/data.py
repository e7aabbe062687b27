"""Corpus loaders and batching for persona-grounded dialogue data.

ConvAI2 files are the numbered-line format: persona sentences first
(``N your persona: ...`` / ``N partner's persona: ...``), then tab-separated
exchange lines; the line number restarts at 1 for each new dialogue.
Document-grounded (CMUDoG-style) data is JSON: one record per conversation
with a ``history`` turn list and a ``document`` mapping of section index to
section text; sections become the knowledge sentences of both speakers.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .vocab import EOS_ID, PAD_ID, SOS_ID, SOS_TOKEN, Vocabulary, tokenize

PERSONA_MODES = ("original", "revised")


class ParseError(ValueError):
    pass


@dataclass
class DialogueExample:
    """One training instance: both speakers' persona sentences, the cumulative
    context (current query last), and the gold response. All tokenized."""

    persona_a: list[list[str]]
    persona_b: list[list[str]]
    context: list[list[str]]
    response: list[str]

    def __post_init__(self):
        if not self.context:
            raise ValueError("context must be non-empty")
        if not self.response:
            raise ValueError("response must be non-empty")
        for group in (self.persona_a, self.persona_b, self.context, [self.response]):
            for sent in group:
                if len(sent) < 1:
                    raise ValueError("every sentence must have at least one token")


@dataclass
class CorpusStats:
    n_dialogues: int
    n_utterances: int
    n_examples: int

    @property
    def mean_turns(self) -> float:
        return self.n_utterances / self.n_dialogues if self.n_dialogues else 0.0


def _strip_line_number(line: str, lineno: int, expected: int) -> tuple[int, str]:
    head, _, rest = line.partition(" ")
    if not head.isdigit():
        raise ParseError(f"line {lineno}: expected leading line number, got {head!r}")
    n = int(head)
    if n != expected and n != 1:
        raise ParseError(f"line {lineno}: line number {n} breaks the sequence "
                         f"(expected {expected} or a restart at 1)")
    return n, rest


def _dialogue_to_examples(persona_a, persona_b, turns, start_line) -> list[DialogueExample]:
    if not persona_a:
        raise ParseError(f"dialogue starting at line {start_line} has no persona block")
    if not persona_b:
        persona_b = [list(s) for s in persona_a]
    examples = []
    for i in range(1, len(turns), 2):
        examples.append(DialogueExample(
            persona_a=[list(s) for s in persona_a],
            persona_b=[list(s) for s in persona_b],
            context=[list(t) for t in turns[:i]],
            response=list(turns[i]),
        ))
    return examples


def load_convai2(path: str, persona_mode: str = "original",
                 with_stats: bool = False):
    """Parse a ConvAI2-format file into DialogueExamples (one per exchange
    line, context cumulative over both speakers' turns).

    ``persona_mode`` substitutes into a ``{mode}`` placeholder in ``path``
    when present (original and revised profiles ship as separate files).
    """
    if persona_mode not in PERSONA_MODES:
        raise ValueError(f"persona_mode must be one of {PERSONA_MODES}")
    path = path.format(mode=persona_mode) if "{mode}" in path else path

    examples: list[DialogueExample] = []
    n_dialogues = 0
    n_utterances = 0
    persona_a: list[list[str]] = []
    persona_b: list[list[str]] = []
    turns: list[list[str]] = []
    expected = 1
    dialogue_start = 1

    def flush(at_line):
        nonlocal n_dialogues, n_utterances
        if not (persona_a or persona_b or turns):
            return
        examples.extend(_dialogue_to_examples(persona_a, persona_b, turns, dialogue_start))
        n_dialogues += 1
        n_utterances += len(turns)

    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            n, rest = _strip_line_number(line, lineno, expected)
            if n == 1 and expected != 1:
                flush(lineno)
                persona_a, persona_b, turns = [], [], []
                dialogue_start = lineno
            expected = n + 1
            if rest.startswith("your persona:"):
                persona_a.append(tokenize(rest[len("your persona:"):]))
            elif rest.startswith("partner's persona:"):
                persona_b.append(tokenize(rest[len("partner's persona:"):]))
            else:
                fields = rest.split("\t")
                if len(fields) < 2 or not fields[0].strip() or not fields[1].strip():
                    raise ParseError(f"line {lineno}: exchange line needs utterance "
                                     f"and reply separated by a tab")
                turns.append(tokenize(fields[0]))
                turns.append(tokenize(fields[1]))
    flush("eof")
    if with_stats:
        return examples, CorpusStats(n_dialogues, n_utterances, len(examples))
    return examples


def _cmudog_records(path: str):
    if os.path.isdir(path):
        names = sorted(n for n in os.listdir(path) if n.endswith(".json"))
        for name in names:
            with open(os.path.join(path, name), encoding="utf-8") as f:
                loaded = json.load(f)
            yield from (loaded if isinstance(loaded, list) else [loaded])
        return
    with open(path, encoding="utf-8") as f:
        text = f.read().strip()
    if not text:
        return
    if text.startswith("["):
        yield from json.loads(text)
    else:  # one JSON record per line
        for line in text.splitlines():
            if line.strip():
                yield json.loads(line)


def _turn_text(turn) -> str:
    if isinstance(turn, str):
        return turn
    if isinstance(turn, dict) and "text" in turn:
        return turn["text"]
    raise KeyError("turn must be a string or carry a 'text' field")


def load_cmudog(path: str, with_stats: bool = False):
    """Parse document-grounded conversations into DialogueExamples.

    Every turn becomes a response-bearing example; the document's sections
    serve as the knowledge sentences of both speakers. The first turn of a
    conversation has no prior context, so its query slot holds a
    conversation-start marker turn.
    """
    examples: list[DialogueExample] = []
    n_dialogues = 0
    n_utterances = 0
    for idx, record in enumerate(_cmudog_records(path)):
        try:
            history = [tokenize(_turn_text(t)) for t in record["history"]]
            doc = record["document"]
            if isinstance(doc, dict):
                sections = [doc[k] for k in sorted(doc, key=lambda s: int(s))]
            else:
                sections = list(doc)
            knowledge = [tokenize(s if isinstance(s, str) else " ".join(s))
                         for s in sections]
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"record {idx}: {e}") from e
        if not history or not knowledge:
            raise ParseError(f"record {idx}: empty history or document")
        for t, response in enumerate(history):
            context = history[:t] if t > 0 else [[SOS_TOKEN]]
            examples.append(DialogueExample(
                persona_a=[list(s) for s in knowledge],
                persona_b=[list(s) for s in knowledge],
                context=[list(c) for c in context],
                response=list(response),
            ))
        n_dialogues += 1
        n_utterances += len(history)
    if with_stats:
        return examples, CorpusStats(n_dialogues, n_utterances, len(examples))
    return examples


@dataclass
class Batch:
    """Padded, masked id arrays for a list of examples.

    Sentence axes are padded with the pad id and carry 0/1 token masks plus
    length arrays; sentence-list axes carry per-slot lengths (0 = empty slot)
    and slot counts. Responses are stored framed for teacher forcing:
    ``response_in`` is [sos] + tokens, ``response_out`` is tokens + [eos].
    """

    persona_a_ids: np.ndarray    # [B, l_p, k]
    persona_a_lens: np.ndarray   # [B, l_p]
    n_persona_a: np.ndarray      # [B]
    persona_b_ids: np.ndarray
    persona_b_lens: np.ndarray
    n_persona_b: np.ndarray
    context_ids: np.ndarray      # [B, l_c, k]
    context_lens: np.ndarray     # [B, l_c]
    n_context: np.ndarray        # [B]
    response_in: np.ndarray      # [B, k+1]
    response_out: np.ndarray     # [B, k+1]
    response_lens: np.ndarray    # [B] (framed length, tokens + 1)
    persona_a_mask: np.ndarray = field(default=None)
    persona_b_mask: np.ndarray = field(default=None)
    context_mask: np.ndarray = field(default=None)
    response_mask: np.ndarray = field(default=None)

    def __len__(self) -> int:
        return self.persona_a_ids.shape[0]

    def example_ids(self, i: int) -> dict:
        """Recover the exact (unpadded) id lists of example ``i``."""
        pa = [self.persona_a_ids[i, j, :self.persona_a_lens[i, j]].tolist()
              for j in range(self.n_persona_a[i])]
        pb = [self.persona_b_ids[i, j, :self.persona_b_lens[i, j]].tolist()
              for j in range(self.n_persona_b[i])]
        ctx = [self.context_ids[i, j, :self.context_lens[i, j]].tolist()
               for j in range(self.n_context[i])]
        n = self.response_lens[i]
        return {"persona_a": pa, "persona_b": pb, "context": ctx,
                "response": self.response_out[i, :n - 1].tolist()}


def _pad_group(sentences, vocab, n_slots, k_max):
    ids = np.full((n_slots, k_max), PAD_ID, dtype=np.int64)
    lens = np.zeros(n_slots, dtype=np.int64)
    for j, sent in enumerate(sentences[:n_slots]):
        enc = vocab.encode(sent)[:k_max]
        ids[j, :len(enc)] = enc
        lens[j] = len(enc)
    return ids, lens


def encode_batch(examples: list[DialogueExample], vocab: Vocabulary,
                 k_max: int = 30, l_c_max: int = 10, l_p_max: int = 5) -> Batch:
    """Encode examples into one padded Batch. Sentences are truncated to
    ``k_max`` tokens, the context keeps its most recent ``l_c_max`` turns,
    and knowledge lists keep their first ``l_p_max`` sentences."""
    if min(k_max, l_c_max, l_p_max) < 1:
        raise ValueError("all caps must be >= 1")
    B = len(examples)
    pa_ids = np.full((B, l_p_max, k_max), PAD_ID, dtype=np.int64)
    pa_lens = np.zeros((B, l_p_max), dtype=np.int64)
    n_pa = np.zeros(B, dtype=np.int64)
    pb_ids = np.full((B, l_p_max, k_max), PAD_ID, dtype=np.int64)
    pb_lens = np.zeros((B, l_p_max), dtype=np.int64)
    n_pb = np.zeros(B, dtype=np.int64)
    ctx_ids = np.full((B, l_c_max, k_max), PAD_ID, dtype=np.int64)
    ctx_lens = np.zeros((B, l_c_max), dtype=np.int64)
    n_ctx = np.zeros(B, dtype=np.int64)
    resp_in = np.full((B, k_max + 1), PAD_ID, dtype=np.int64)
    resp_out = np.full((B, k_max + 1), PAD_ID, dtype=np.int64)
    resp_lens = np.zeros(B, dtype=np.int64)

    for i, ex in enumerate(examples):
        pa_ids[i], pa_lens[i] = _pad_group(ex.persona_a, vocab, l_p_max, k_max)
        n_pa[i] = min(len(ex.persona_a), l_p_max)
        pb_ids[i], pb_lens[i] = _pad_group(ex.persona_b, vocab, l_p_max, k_max)
        n_pb[i] = min(len(ex.persona_b), l_p_max)
        recent = ex.context[-l_c_max:]
        ctx_ids[i], ctx_lens[i] = _pad_group(recent, vocab, l_c_max, k_max)
        n_ctx[i] = len(recent)
        resp = vocab.encode(ex.response)[:k_max]
        resp_in[i, 0] = SOS_ID
        resp_in[i, 1:len(resp) + 1] = resp
        resp_out[i, :len(resp)] = resp
        resp_out[i, len(resp)] = EOS_ID
        resp_lens[i] = len(resp) + 1

    batch = Batch(pa_ids, pa_lens, n_pa, pb_ids, pb_lens, n_pb,
                  ctx_ids, ctx_lens, n_ctx, resp_in, resp_out, resp_lens)
    batch.persona_a_mask = _len_mask(pa_lens, k_max)
    batch.persona_b_mask = _len_mask(pb_lens, k_max)
    batch.context_mask = _len_mask(ctx_lens, k_max)
    batch.response_mask = _len_mask(resp_lens, k_max + 1)
    return batch


def _len_mask(lens: np.ndarray, width: int) -> np.ndarray:
    return (np.arange(width) < lens[..., None]).astype(np.int64)


def load_pretrained_embeddings(path: str, vocab: Vocabulary, dim: int = 300,
                               seed: int = 0) -> np.ndarray:
    """Read ``token v_1 ... v_dim`` text vectors into a [|V|, dim] matrix.

    In-vocabulary rows are copied from the file; tokens missing from it are
    drawn uniformly from [-0.1, 0.1] under ``seed``; the pad row is zero.
    """
    rng = np.random.default_rng(seed)
    matrix = rng.uniform(-0.1, 0.1, size=(len(vocab), dim))
    matrix[PAD_ID] = 0.0
    found = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise ParseError(f"line {lineno}: expected token plus {dim} values, "
                                 f"got {len(parts) - 1}")
            token = parts[0]
            if token in vocab and token not in found:
                idx = vocab.token_to_id[token]
                if idx != PAD_ID:
                    matrix[idx] = np.asarray(parts[1:], dtype=np.float64)
                found.add(token)
    return matrix
