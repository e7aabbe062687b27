"""Sentence encoder: bidirectional GRU with attention pooling, plus the
speaking-style vector built from both speakers' pooled knowledge encodings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad, layers
from .autodiff import Var


@dataclass
class SentenceEncoding:
    """Pooled sentence vector plus the per-token states it was pooled from."""

    pooled: Var   # [d]
    states: Var   # [k, d]; rows past the true length are zero


def init_encoder_params(rng: np.random.Generator, d: int, emb_dim: int,
                        d_a: int | None = None) -> dict:
    """Parameter arrays for the encoder, keyed under the ``enc.`` prefix.

    Each direction runs its own GRU with per-direction hidden size d; the two
    final state sequences are concatenated and linearly projected back to d.
    """
    d_a = d_a or d
    p = {}
    for direction in ("fwd", "bwd"):
        for name, arr in layers.gru_param_arrays(rng, emb_dim, d).items():
            p[f"enc.{direction}.{name}"] = arr
    p["enc.proj"] = layers.glorot_init(rng, (d, 2 * d))
    p["enc.pool.w"] = layers.glorot_init(rng, (d_a, d))
    p["enc.pool.v"] = layers.uniform_init(rng, d_a)
    p["enc.style.u"] = layers.glorot_init(rng, (d, d))
    p["enc.style.v"] = layers.glorot_init(rng, (d, d))
    return p


def _sub(P: dict, prefix: str) -> dict:
    plen = len(prefix) + 1
    return {k[plen:]: v for k, v in P.items() if k.startswith(prefix + ".")}


def bigru_encode(P: dict, emb: Var, length: int) -> Var:
    """Per-token states [k, d] from a bidirectional GRU over ``emb`` [k, emb_dim].

    Only the first ``length`` positions enter the recurrence; the remaining
    (padding) rows of the output are exactly zero.
    """
    k = emb.shape[0]
    if length < 1 or length > k:
        raise ValueError(f"sentence length must be in [1, {k}], got {length}")
    xs = [ad.getitem(emb, t) for t in range(length)]
    fwd = layers.gru_sequence(_sub(P, "enc.fwd"), xs)
    bwd = layers.gru_sequence(_sub(P, "enc.bwd"), xs[::-1])[::-1]
    proj = P["enc.proj"]
    rows = [proj @ ad.concat([f, b]) for f, b in zip(fwd, bwd)]
    d = proj.shape[0]
    rows += [Var(np.zeros(d)) for _ in range(k - length)]
    return ad.stack(rows)


def attention_pool(P: dict, states: Var, mask: np.ndarray | None = None,
                   trace: list | None = None) -> Var:
    """Pool per-token states into one sentence vector; see layers.additive_pool."""
    pooled, weights = layers.additive_pool(states, P["enc.pool.w"], P["enc.pool.v"], mask)
    if trace is not None:
        trace.append(("sentence_pool", weights.data))
    return pooled


def f_enc(P: dict, token_ids, embedding: Var, *, length: int | None = None,
          dropout_rate: float = 0.0, rng: np.random.Generator | None = None,
          train: bool = False, trace: list | None = None) -> SentenceEncoding:
    """Encode one tokenized sentence (list of vocab ids) end to end.

    ``length`` marks the true sentence length when ``token_ids`` carries a
    padding tail; positions past it never influence the result.
    """
    ids = np.asarray(token_ids, dtype=np.intp)
    length = len(ids) if length is None else length
    if length < 1:
        raise ValueError("cannot encode an empty sentence")
    emb = ad.rows(embedding, ids)
    emb = layers.dropout(emb, dropout_rate, rng, train)
    states = bigru_encode(P, emb, length)
    states = layers.dropout(states, dropout_rate, rng, train)
    mask = None if length == len(ids) else (np.arange(len(ids)) < length)
    pooled = attention_pool(P, states, mask=mask, trace=trace)
    return SentenceEncoding(pooled=pooled, states=states)


def encode_sentences(P: dict, sentences, embedding: Var, **kw) -> Var:
    """Encode a list of sentences into a [n, d] matrix of pooled vectors."""
    if not sentences:
        raise ValueError("need at least one sentence to encode")
    return ad.stack([f_enc(P, s, embedding, **kw).pooled for s in sentences])


def speaking_style(P: dict, h_a: Var, h_b: Var) -> Var:
    """Style vector from both speakers' knowledge encodings [n, d] each.

    Column-wise max over each speaker's sentence vectors, then an elementwise
    product of the two linearly mapped maxima. Invariant to sentence order.
    """
    a = ad.maxpool_columns(h_a)
    b = ad.maxpool_columns(h_b)
    return (P["enc.style.u"] @ a) * (P["enc.style.v"] @ b)
