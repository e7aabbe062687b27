"""GRU cells, additive attention pooling, dropout, and parameter init helpers."""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Var

NEG_INF = 1e30  # additive logit penalty; exp(-1e30) underflows to exactly 0


def uniform_init(rng: np.random.Generator, shape, scale: float = 0.1) -> np.ndarray:
    return rng.uniform(-scale, scale, size=shape)


def glorot_init(rng: np.random.Generator, shape) -> np.ndarray:
    """Fan-balanced uniform init; keeps activations O(1) at any width."""
    fan_out, fan_in = shape
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def gru_param_arrays(rng: np.random.Generator, input_size: int, hidden_size: int) -> dict:
    """Weights for one GRU direction: update z, reset r, candidate n."""
    p = {}
    for gate in ("z", "r", "n"):
        p[f"w_{gate}"] = glorot_init(rng, (hidden_size, input_size))
        p[f"u_{gate}"] = glorot_init(rng, (hidden_size, hidden_size))
        p[f"b_{gate}"] = np.zeros(hidden_size)
    return p


def gru_step(g: dict, x: Var, h: Var) -> Var:
    """One GRU step: h' = (1 - z) * n + z * h, with the reset gate applied
    to the previous state before the candidate transform."""
    z = ad.sigmoid(g["w_z"] @ x + g["u_z"] @ h + g["b_z"])
    r = ad.sigmoid(g["w_r"] @ x + g["u_r"] @ h + g["b_r"])
    n = ad.tanh(g["w_n"] @ x + g["u_n"] @ (r * h) + g["b_n"])
    return (1.0 - z) * n + z * h


def gru_sequence(g: dict, xs: list[Var] | Var, h0: Var | None = None) -> list[Var]:
    """Run a GRU over a sequence of input vectors, returning all states."""
    if isinstance(xs, Var):
        xs = [ad.getitem(xs, t) for t in range(xs.shape[0])]
    h = Var(np.zeros(g["u_z"].shape[0])) if h0 is None else h0
    states = []
    for x in xs:
        h = gru_step(g, x, h)
        states.append(h)
    return states


def transpose(a: Var) -> Var:
    return Var(a.data.T, (a,), lambda g: (g.T,))


def additive_pool(states: Var, w: Var, v: Var, mask: np.ndarray | None = None):
    """Attention pooling over the rows of ``states`` [k, d].

    Scores are v . tanh(w @ state_j); masked positions get weight exactly 0.
    Returns (pooled [d], weights [k]).
    """
    scores = ad.tanh(states @ transpose(w)) @ v
    if mask is not None:
        mask = np.asarray(mask, dtype=np.float64)
        if mask.sum() < 1:
            raise ValueError("attention pooling needs at least one unmasked position")
        scores = scores - (1.0 - mask) * NEG_INF
    weights = ad.softmax(scores)
    pooled = weights @ states
    return pooled, weights


def dropout(x: Var, rate: float, rng: np.random.Generator | None, train: bool) -> Var:
    """Inverted dropout; identity when not training or rate is 0."""
    if not train or rate <= 0.0:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * keep
