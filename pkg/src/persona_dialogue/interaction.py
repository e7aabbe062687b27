"""Per-turn interaction between conversation history and persona knowledge.

Each conversation turn attends over the knowledge sentences twice (a purely
semantic view and a coverage-aware view that knows how much each sentence has
already been used), fuses the two views into a persona-aware turn vector,
accumulates the coverage-view attention weights into the coverage vector, and
residually enriches the knowledge representations with the turn content.
A turn-level GRU with attention pooling then aggregates the per-turn vectors
into the single context vector consumed by the decoder.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad, layers
from .autodiff import Var


@dataclass
class KnowledgeState:
    """Knowledge sentence representations plus their coverage accumulator."""

    semantic: Var   # [l_p, d]
    coverage: Var   # [l_p], nonnegative, nondecreasing across turns

    @property
    def n_sentences(self) -> int:
        return self.semantic.shape[0]


@dataclass
class TurnSummary:
    """Raw and persona-aware vectors for one conversation turn."""

    raw: Var     # [d] pooled turn encoding
    fused: Var   # [d] fusion of the semantic and coverage attention views


def initial_state(h_knowledge: Var) -> KnowledgeState:
    """Fresh state: knowledge as encoded, coverage all zero (nothing used yet)."""
    return KnowledgeState(semantic=h_knowledge,
                          coverage=Var(np.zeros(h_knowledge.shape[0])))


def init_interaction_params(rng: np.random.Generator, d: int,
                            d_a: int | None = None) -> dict:
    """Parameter arrays for the interaction module, keyed under ``inter.``."""
    d_a = d_a or d
    p = {
        "inter.sem.w": layers.glorot_init(rng, (d_a, d)),
        "inter.sem.u": layers.glorot_init(rng, (d_a, d)),
        "inter.sem.v": layers.uniform_init(rng, d_a),
        "inter.cov.w": layers.glorot_init(rng, (d_a, d)),
        "inter.cov.u": layers.glorot_init(rng, (d_a, d)),
        "inter.cov.c": layers.uniform_init(rng, d_a),  # maps scalar coverage into score space
        "inter.cov.v": layers.uniform_init(rng, d_a),
        "inter.fuse.w_sem": layers.glorot_init(rng, (d, d)),
        "inter.fuse.w_rep": layers.glorot_init(rng, (d, d)),
        "inter.know.w": layers.glorot_init(rng, (d, 2 * d)),
        "inter.know.b": np.zeros(d),
        "inter.hpool.w": layers.glorot_init(rng, (d_a, d)),
        "inter.hpool.v": layers.uniform_init(rng, d_a),
    }
    for name, arr in layers.gru_param_arrays(rng, 2 * d, d).items():
        p[f"inter.turn.{name}"] = arr
    return p


def _attend(knowledge: Var, scores: Var):
    weights = ad.softmax(scores)
    return weights, weights @ knowledge


def semantic_attend(P: dict, state: KnowledgeState, turn: Var):
    """Attention over knowledge sentences driven by content alone.

    Returns (weights [l_p], attended vector [d]).
    """
    proj = ad.tanh(state.semantic @ layers.transpose(P["inter.sem.w"])
                   + P["inter.sem.u"] @ turn)
    return _attend(state.semantic, proj @ P["inter.sem.v"])


def coverage_attend(P: dict, state: KnowledgeState, turn: Var):
    """Attention over knowledge sentences that also sees accumulated usage.

    Each sentence's scalar coverage is mapped into score space, letting the
    model learn to steer attention away from already-used knowledge.
    Returns (weights [l_p], attended vector [d]).
    """
    cov_term = ad.reshape(state.coverage, (-1, 1)) * ad.reshape(P["inter.cov.c"], (1, -1))
    proj = ad.tanh(state.semantic @ layers.transpose(P["inter.cov.w"])
                   + P["inter.cov.u"] @ turn + cov_term)
    return _attend(state.semantic, proj @ P["inter.cov.v"])


def fuse_views(P: dict, sem_vec: Var, rep_vec: Var) -> Var:
    """Blend the semantic and coverage views into the persona-aware turn vector."""
    return ad.sigmoid(P["inter.fuse.w_sem"] @ sem_vec + P["inter.fuse.w_rep"] @ rep_vec)


def update_coverage(state: KnowledgeState, rep_weights: Var) -> Var:
    """Accumulate the coverage-view attention weights: s' = s + weights."""
    return state.coverage + rep_weights


def update_knowledge(P: dict, state: KnowledgeState, turn: Var) -> Var:
    """Residual enrichment of each knowledge row with the turn content.

    The gate input concatenates the elementwise sum and product of the turn
    vector with each knowledge row; the logistic output is added residually.
    """
    turn_row = ad.reshape(turn, (1, -1))
    mixed = ad.concat([turn_row + state.semantic, turn_row * state.semantic], axis=1)
    delta = ad.sigmoid(mixed @ layers.transpose(P["inter.know.w"]) + P["inter.know.b"])
    return state.semantic + delta


def interaction_step(P: dict, state: KnowledgeState, turn: Var, *,
                     no_knowledge_update: bool = False, no_coverage: bool = False,
                     trace: list | None = None):
    """One full turn of the interaction recurrence.

    Returns (next KnowledgeState, TurnSummary, coverage-view weights).
    """
    sem_weights, sem_vec = semantic_attend(P, state, turn)
    rep_weights, rep_vec = coverage_attend(P, state, turn)
    if trace is not None:
        trace.append(("semantic_attention", sem_weights.data))
        trace.append(("coverage_attention", rep_weights.data))
    fused = fuse_views(P, sem_vec, rep_vec)
    coverage = state.coverage if no_coverage else update_coverage(state, rep_weights)
    semantic = state.semantic if no_knowledge_update else update_knowledge(P, state, turn)
    next_state = KnowledgeState(semantic=semantic, coverage=coverage)
    return next_state, TurnSummary(raw=turn, fused=fused), rep_weights


def aggregate_history(P: dict, summaries: list[TurnSummary],
                      trace: list | None = None) -> Var:
    """Fold per-turn summaries into the context vector for the decoder.

    Concatenated [raw; fused] turn vectors run through a turn-level GRU in
    conversation order; attention pooling over its states gives the result.
    """
    if not summaries:
        raise ValueError("cannot aggregate an empty history")
    xs = [ad.concat([s.raw, s.fused]) for s in summaries]
    states = layers.gru_sequence({k[len("inter.turn."):]: v for k, v in P.items()
                                  if k.startswith("inter.turn.")}, xs)
    pooled, weights = layers.additive_pool(ad.stack(states),
                                           P["inter.hpool.w"], P["inter.hpool.v"])
    if trace is not None:
        trace.append(("history_pool", weights.data))
    return pooled
