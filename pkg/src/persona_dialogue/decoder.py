"""Response decoder: two GRUs (token-driven and style-driven) fused by a
learned gate, a softmax output layer over the vocabulary, NLL loss, and
greedy / beam search."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad, layers
from .autodiff import Var
from .vocab import EOS_ID, PAD_ID, SOS_ID


@dataclass
class DecoderState:
    hidden: Var        # [d]
    prev_token: int


def init_decoder_params(rng: np.random.Generator, d: int, emb_dim: int,
                        vocab_size: int) -> dict:
    """Parameter arrays for the decoder, keyed under ``dec.``."""
    p = {}
    for name, arr in layers.gru_param_arrays(rng, emb_dim, d).items():
        p[f"dec.tok.{name}"] = arr
    for name, arr in layers.gru_param_arrays(rng, d, d).items():
        p[f"dec.sty.{name}"] = arr
    p["dec.gate.w_y"] = layers.glorot_init(rng, (d, d))
    p["dec.gate.w_p"] = layers.glorot_init(rng, (d, d))
    p["dec.gate.v"] = layers.glorot_init(rng, (d, 2 * d))
    p["dec.init"] = layers.glorot_init(rng, (d, d))
    p["dec.out.w"] = layers.glorot_init(rng, (vocab_size, d + emb_dim))
    p["dec.out.b"] = np.zeros(vocab_size)
    return p


def _sub(P: dict, prefix: str) -> dict:
    plen = len(prefix) + 1
    return {k[plen:]: v for k, v in P.items() if k.startswith(prefix + ".")}


def init_state(P: dict, context_vec: Var) -> DecoderState:
    """Start the decoder from the aggregated context vector."""
    return DecoderState(hidden=ad.tanh(P["dec.init"] @ context_vec),
                        prev_token=SOS_ID)


def hgfu_step(P: dict, state: DecoderState, prev_emb: Var, style_vec: Var | None,
              *, no_style: bool = False) -> Var:
    """One decoder step gating between token-driven and style-driven states.

    With ``no_style`` the gate path is bypassed entirely and the new hidden
    state is the token GRU state, so the style vector cannot influence output.
    """
    s_tok = layers.gru_step(_sub(P, "dec.tok"), prev_emb, state.hidden)
    if no_style:
        return s_tok
    s_sty = layers.gru_step(_sub(P, "dec.sty"), style_vec, state.hidden)
    gate_in = ad.concat([ad.tanh(P["dec.gate.w_y"] @ s_tok),
                         ad.tanh(P["dec.gate.w_p"] @ s_sty)])
    r = ad.sigmoid(P["dec.gate.v"] @ gate_in)
    return r * s_tok + (1.0 - r) * s_sty


def output_logits(P: dict, hidden: Var, prev_emb: Var) -> Var:
    """Unnormalized scores over the vocabulary; the pad entry is forced to
    effectively -inf so pad can never be emitted."""
    logits = P["dec.out.w"] @ ad.concat([hidden, prev_emb]) + P["dec.out.b"]
    pad_mask = np.zeros(logits.shape[0])
    pad_mask[PAD_ID] = layers.NEG_INF
    return logits - pad_mask


def output_distribution(P: dict, hidden: Var, prev_emb: Var) -> Var:
    """Probability vector over the vocabulary (pad has probability exactly 0)."""
    return ad.softmax(output_logits(P, hidden, prev_emb))


def nll_loss(distributions: Var, targets, mask=None) -> Var:
    """Mean negative log-likelihood of ``targets`` [T] under per-step
    distributions [T, V]; masked positions are excluded from the mean."""
    targets = np.asarray(targets, dtype=np.intp)
    steps = np.arange(len(targets))
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if np.any(targets[mask] == PAD_ID):
            raise ValueError("pad id appears as an unmasked target")
        steps, targets = steps[mask], targets[mask]
    elif np.any(targets == PAD_ID):
        raise ValueError("pad id appears as an unmasked target")
    if len(steps) == 0:
        raise ValueError("loss needs at least one unmasked target")
    picked = ad.getitem(distributions, (steps, targets))
    return -1.0 * ad.vmean(ad.log(picked))


def teacher_forced_nll(P: dict, embedding: Var, context_vec: Var,
                       style_vec: Var | None, target_ids,
                       *, no_style: bool = False,
                       dropout_rate: float = 0.0,
                       rng: np.random.Generator | None = None,
                       train: bool = False):
    """Distributions and per-sequence NLL for one gold response.

    ``target_ids`` is the raw response (no framing); the decoder consumes
    [sos] + targets and predicts targets + [eos]. Returns (mean token loss,
    token count) so callers can re-weight for corpus-level aggregation.
    """
    target_ids = list(target_ids)
    inputs = [SOS_ID] + target_ids
    outputs = target_ids + [EOS_ID]
    state = init_state(P, context_vec)
    dists = []
    for t, prev in enumerate(inputs):
        prev_emb = ad.getitem(embedding, prev)
        prev_emb = layers.dropout(prev_emb, dropout_rate, rng, train)
        hidden = hgfu_step(P, state, prev_emb, style_vec, no_style=no_style)
        out_hidden = layers.dropout(hidden, dropout_rate, rng, train)
        dists.append(output_distribution(P, out_hidden, prev_emb))
        state = DecoderState(hidden=hidden, prev_token=outputs[t])
    loss = nll_loss(ad.stack(dists), outputs)
    return loss, len(outputs)


def greedy_decode(P: dict, embedding: Var, context_vec: Var, style_vec: Var | None,
                  max_len: int, *, no_style: bool = False) -> list[int]:
    """Argmax decoding; ties break toward the lowest token id. Stops at the
    end token (not included in the result) or after ``max_len`` tokens."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    state = init_state(P, context_vec)
    out: list[int] = []
    for _ in range(max_len):
        prev_emb = ad.getitem(embedding, state.prev_token)
        hidden = hgfu_step(P, state, prev_emb, style_vec, no_style=no_style)
        probs = output_distribution(P, hidden, prev_emb).data
        nxt = int(np.argmax(probs))
        if nxt == EOS_ID:
            break
        out.append(nxt)
        state = DecoderState(hidden=hidden, prev_token=nxt)
    return out


def sequence_score(P: dict, embedding: Var, context_vec: Var, style_vec: Var | None,
                   tokens: list[int], *, no_style: bool = False) -> float:
    """Mean log-probability the model assigns to ``tokens`` followed by the
    end token; the same normalization beam search ranks hypotheses by."""
    state = init_state(P, context_vec)
    total = 0.0
    symbols = list(tokens) + [EOS_ID]
    for prev, tok in zip([SOS_ID] + list(tokens), symbols):
        prev_emb = ad.getitem(embedding, prev)
        hidden = hgfu_step(P, state, prev_emb, style_vec, no_style=no_style)
        logp = ad.log_softmax(output_logits(P, hidden, prev_emb)).data
        total += float(logp[tok])
        state = DecoderState(hidden=hidden, prev_token=tok)
    return total / len(symbols)


@dataclass
class _Hyp:
    tokens: tuple
    logp_sum: float
    state: DecoderState

    def score(self) -> float:
        return self.logp_sum / max(len(self.tokens), 1)


def beam_decode(P: dict, embedding: Var, context_vec: Var, style_vec: Var | None,
                beam_size: int, max_len: int, *, no_style: bool = False) -> list[int]:
    """Length-normalized beam search. A hypothesis's score is its mean
    log-prob per symbol with the terminating end token always counted, so
    scores are comparable across eos-closed and length-capped hypotheses
    (and match ``sequence_score``). ``beam_size=1`` reproduces greedy
    decoding exactly."""
    if beam_size < 1:
        raise ValueError("beam_size must be >= 1")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    live = [_Hyp(tokens=(), logp_sum=0.0, state=init_state(P, context_vec))]
    finished: list[tuple[float, tuple]] = []

    def step_logp(hyp: _Hyp):
        prev_emb = ad.getitem(embedding, hyp.state.prev_token)
        hidden = hgfu_step(P, hyp.state, prev_emb, style_vec, no_style=no_style)
        return hidden, ad.log_softmax(output_logits(P, hidden, prev_emb)).data

    for _ in range(max_len):
        candidates: list[tuple[float, tuple, DecoderState, int]] = []
        for hyp in live:
            hidden, logp = step_logp(hyp)
            top = np.argsort(-logp, kind="stable")[:beam_size]
            for tok in top:
                candidates.append((hyp.logp_sum + float(logp[tok]), hyp.tokens,
                                   DecoderState(hidden=hidden, prev_token=int(tok)),
                                   int(tok)))
        candidates.sort(key=lambda c: -c[0])
        live = []
        for logp_sum, prefix, st, tok in candidates[:beam_size]:
            if tok == EOS_ID:
                finished.append((logp_sum / (len(prefix) + 1), prefix))
            else:
                live.append(_Hyp(tokens=prefix + (tok,), logp_sum=logp_sum, state=st))
        if not live:
            break

    for hyp in live:  # length cap hit: count a forced end token in the score
        _, logp = step_logp(hyp)
        score = (hyp.logp_sum + float(logp[EOS_ID])) / (len(hyp.tokens) + 1)
        finished.append((score, hyp.tokens))
    best = max(finished, key=lambda f: f[0])
    return list(best[1])
