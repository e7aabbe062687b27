"""Shared test utilities: finite differences, error measures, rigged models."""

import numpy as np


def rigged_identity_checkpoint():
    """A checkpoint whose model emits 'hi' then stops, for pipeline checks.

    All weights are zero except: the 'hi' output bias, and one output-layer
    entry that drives the end token once the previous token is 'hi'.
    """
    from persona_dialogue import model
    from persona_dialogue.training import Checkpoint, TrainConfig
    from persona_dialogue.vocab import EOS_ID, SOS_ID, Vocabulary

    vocab = Vocabulary(["hi", "yo"])
    cfg = TrainConfig(hidden=4, emb_dim=3, dropout=0.0, epochs=1, batch_size=4,
                      seed=3, k_max=4, l_c_max=3, l_p_max=2)
    params = model.init_params(np.random.default_rng(0), len(vocab), 4, 3)
    for k in params:
        params[k] = np.zeros_like(params[k])
    hi = vocab.token_to_id["hi"]
    params["emb"][hi, 0] = 10.0
    params["emb"][SOS_ID, 1] = 10.0
    params["dec.out.b"][hi] = 30.0
    params["dec.out.w"][EOS_ID, 4 + 0] = 10.0
    return Checkpoint(params=params, config=cfg, vocab=vocab), vocab


def fd_grad(f, x, eps=1e-6):
    """Central finite-difference gradient of scalar f at array x."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat, gf = x.ravel(), g.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = f(x)
        flat[i] = orig - eps
        fm = f(x)
        flat[i] = orig
        gf[i] = (fp - fm) / (2 * eps)
    return g


def max_rel_err(a, b, floor=1e-8):
    """Max elementwise relative error with an absolute floor for tiny values."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))
