"""Full model: parameter initialization, the end-to-end training forward pass,
and generation, all composed from the encoder / interaction / decoder modules.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import decoder, encoder, interaction
from .autodiff import Var, backward
from .data import Batch


@dataclass
class AblationFlags:
    """Switches matching the model's ablation studies."""

    no_style: bool = False             # bypass the style GRU and fusion gate
    no_knowledge_update: bool = False  # freeze knowledge representations
    no_coverage: bool = False          # freeze the coverage accumulator at zero


@dataclass
class ForwardOptions:
    flags: AblationFlags = field(default_factory=AblationFlags)
    dropout: float = 0.0
    train: bool = False
    rng: np.random.Generator | None = None
    trace: list | None = None

    def enc_kwargs(self) -> dict:
        return {"dropout_rate": self.dropout, "rng": self.rng,
                "train": self.train, "trace": self.trace}


def init_params(rng: np.random.Generator, vocab_size: int, hidden: int,
                emb_dim: int = 300, d_a: int | None = None,
                embedding: np.ndarray | None = None) -> dict:
    """All parameter arrays of the model as one flat name->array dict."""
    if embedding is None:
        embedding = rng.uniform(-0.1, 0.1, size=(vocab_size, emb_dim))
        embedding[0] = 0.0  # pad row
    params = {"emb": np.asarray(embedding, dtype=np.float64)}
    params.update(encoder.init_encoder_params(rng, hidden, emb_dim, d_a))
    params.update(interaction.init_interaction_params(rng, hidden, d_a))
    params.update(decoder.init_decoder_params(rng, hidden, emb_dim, vocab_size))
    return params


def wrap_params(params: dict) -> dict:
    """Wrap arrays into autodiff leaves; reuse one dict per tape."""
    return {k: Var(v) for k, v in params.items()}


def interact_over_turns(P: dict, h_knowledge: Var, context: list[list[int]],
                        opts: ForwardOptions):
    """Run the per-turn interaction recurrence over encoded context turns.

    Returns (context vector O, final KnowledgeState, summaries, per-turn
    coverage-view attention weights)."""
    state = interaction.initial_state(h_knowledge)
    summaries, rep_weights = [], []
    for turn_ids in context:
        h_c = encoder.f_enc(P, turn_ids, P["emb"], **opts.enc_kwargs()).pooled
        state, summary, weights = interaction.interaction_step(
            P, state, h_c,
            no_knowledge_update=opts.flags.no_knowledge_update,
            no_coverage=opts.flags.no_coverage, trace=opts.trace)
        summaries.append(summary)
        rep_weights.append(weights)
    context_vec = interaction.aggregate_history(P, summaries, trace=opts.trace)
    return context_vec, state, summaries, rep_weights


def encode_and_interact(P: dict, ex: dict, opts: ForwardOptions):
    """Shared front half of loss and generation: encode both personas and the
    context, run the interaction, and build the style vector (unless ablated).

    Returns (context vector, style vector or None, final state, summaries,
    per-turn coverage-view weights)."""
    h_a = encoder.encode_sentences(P, ex["persona_a"], P["emb"], **opts.enc_kwargs())
    context_vec, state, summaries, rep_weights = interact_over_turns(
        P, h_a, ex["context"], opts)
    style_vec = None
    if not opts.flags.no_style:
        h_b = encoder.encode_sentences(P, ex["persona_b"], P["emb"], **opts.enc_kwargs())
        style_vec = encoder.speaking_style(P, h_a, h_b)
    return context_vec, style_vec, state, summaries, rep_weights


def example_loss(P: dict, ex: dict, opts: ForwardOptions):
    """Teacher-forced NLL of one example's gold response.

    ``ex`` carries exact id lists: persona_a, persona_b, context, response.
    Returns (mean-per-token loss Var, token count).
    """
    context_vec, style_vec, _, _, _ = encode_and_interact(P, ex, opts)
    return decoder.teacher_forced_nll(
        P, P["emb"], context_vec, style_vec, ex["response"],
        no_style=opts.flags.no_style, dropout_rate=opts.dropout,
        rng=opts.rng, train=opts.train)


def batch_loss_and_grads(params: dict, batch: Batch, opts: ForwardOptions):
    """Token-weighted mean loss over a batch plus gradients w.r.t. every
    parameter (normalized the same way). Returns (loss value, grads dict)."""
    P = wrap_params(params)
    losses, counts = [], []
    for i in range(len(batch)):
        loss, n = example_loss(P, batch.example_ids(i), opts)
        losses.append(loss)
        counts.append(n)
    total = float(counts[0]) * losses[0]
    for loss, n in zip(losses[1:], counts[1:]):
        total = total + float(n) * loss
    mean = (1.0 / sum(counts)) * total
    backward(mean)
    grads = {k: (v.grad if v.grad is not None else np.zeros_like(v.data))
             for k, v in P.items()}
    return float(mean.data), grads


def batch_loss(params: dict, batch: Batch, opts: ForwardOptions) -> float:
    """Token-weighted mean loss only (no gradients), e.g. for validation."""
    P = wrap_params(params)
    total, count = 0.0, 0
    for i in range(len(batch)):
        loss, n = example_loss(P, batch.example_ids(i), opts)
        total += float(loss.data) * n
        count += n
    return total / count


def generate(params: dict, ex: dict, flags: AblationFlags | None = None,
             beam_size: int = 1, max_len: int = 30,
             trace: list | None = None) -> list[int]:
    """Decode a reply for one example's persona/context ids."""
    opts = ForwardOptions(flags=flags or AblationFlags(), trace=trace)
    P = wrap_params(params)
    context_vec, style_vec, _, _, _ = encode_and_interact(P, ex, opts)
    if beam_size == 1:
        return decoder.greedy_decode(P, P["emb"], context_vec, style_vec,
                                     max_len, no_style=opts.flags.no_style)
    return decoder.beam_decode(P, P["emb"], context_vec, style_vec,
                               beam_size, max_len, no_style=opts.flags.no_style)
