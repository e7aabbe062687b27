"""Encode persona sentences, inspect the pooling attention, and build the
speaking-style vector from both speakers' profiles."""

import numpy as np

from persona_dialogue import build_vocab, init_params, tokenize
from persona_dialogue.data import DialogueExample
from persona_dialogue import encoder, model

persona_a = ["i am a gold medalist olympian .",
             "gymnastics is my favorite sport .",
             "my favorite color is yellow ."]
persona_b = ["i love to read books .",
             "i hope to retire in a few years ."]

example = DialogueExample(persona_a=[tokenize(s) for s in persona_a],
                          persona_b=[tokenize(s) for s in persona_b],
                          context=[tokenize("hello there !")],
                          response=tokenize("hi !"))
vocab = build_vocab([example], min_freq=1)
print(f"vocabulary: {len(vocab)} entries")

rng = np.random.default_rng(0)
params = init_params(rng, len(vocab), hidden=16, emb_dim=12)
P = model.wrap_params(params)

trace = []
h_a = encoder.encode_sentences(P, [vocab.encode(tokenize(s)) for s in persona_a],
                               P["emb"], trace=trace)
print(f"\npersona-A encodings: {h_a.shape} (one pooled vector per sentence)")
for sent, (_, weights) in zip(persona_a, trace):
    bars = " ".join(f"{w:.2f}" for w in weights)
    print(f"  pooling weights [{bars}]  <- {sent}")

h_b = encoder.encode_sentences(P, [vocab.encode(tokenize(s)) for s in persona_b],
                               P["emb"])
style = encoder.speaking_style(P, h_a, h_b)
print(f"\nspeaking-style vector: shape {style.shape}, norm {np.linalg.norm(style.data):.3f}")

# the style vector ignores sentence order on either side
shuffled = encoder.encode_sentences(
    P, [vocab.encode(tokenize(s)) for s in persona_a[::-1]], P["emb"])
style2 = encoder.speaking_style(P, shuffled, h_b)
print(f"order invariance check: max diff {np.abs(style.data - style2.data).max():.2e}")
