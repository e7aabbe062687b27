"""Drive the HTTP chat service in-process: create a session, exchange turns,
and render the coverage of each persona sentence as a bar."""

import numpy as np
from fastapi.testclient import TestClient

from persona_dialogue import TrainConfig, build_vocab, init_params, serve, tokenize
from persona_dialogue.data import DialogueExample
from persona_dialogue.training import Checkpoint

persona_a = ["i am a gold medalist olympian .",
             "gymnastics is my favorite sport .",
             "i love italian food ."]
persona_b = ["i love to read books ."]

seed_example = DialogueExample(
    persona_a=[tokenize(s) for s in persona_a],
    persona_b=[tokenize(s) for s in persona_b],
    context=[tokenize("hello ! how are you today my friend ?")],
    response=tokenize("i am great , thanks !"))
vocab = build_vocab([seed_example], min_freq=1)
config = TrainConfig(hidden=16, emb_dim=12, dropout=0.0, epochs=1, seed=0,
                     k_max=12, l_c_max=6, l_p_max=5)
params = init_params(np.random.default_rng(0), len(vocab), 16, 12)
checkpoint = Checkpoint(params=params, config=config, vocab=vocab)

client = TestClient(serve.create_app(checkpoint))
session = client.post("/sessions", json={"persona_a": persona_a,
                                         "persona_b": persona_b}).json()
sid = session["session_id"]
print(f"session {sid[:8]}... created; coverage {session['coverage']}")

for text in ["hello ! how are you ?",
             "do you like sports ?",
             "what food do you love ?"]:
    out = client.post(f"/sessions/{sid}/messages", json={"text": text}).json()
    print(f"\nyou> {text}\nbot> {out['reply']}")
    turn_count = sum(out["coverage"])
    for sent, cov, att in zip(persona_a, out["coverage"], out["attention"]):
        bar = "#" * int(20 * cov / max(turn_count, 1))
        print(f"  {cov:5.2f} |{bar:<20}| (attn {att:.2f}) {sent}")

view = client.get(f"/sessions/{sid}").json()
print(f"\ntranscript has {len(view['transcript'])} turns; "
      f"coverage sum {sum(view['coverage']):.2f} after 3 messages")
client.delete(f"/sessions/{sid}")
print("session deleted")
