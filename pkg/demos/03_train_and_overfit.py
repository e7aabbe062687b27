"""Train end to end on a tiny synthetic corpus until the model reproduces
every gold response, then score the decodes with the metrics module."""

from persona_dialogue import TrainConfig, evaluate, train
from persona_dialogue.data import DialogueExample, encode_batch
from persona_dialogue import model

words = [f"w{i:02d}" for i in range(46)]
examples = [DialogueExample(
    persona_a=[[words[i], words[i + 8]]],
    persona_b=[[words[i + 16]]],
    context=[[words[24 + i], words[32 + i]]],
    response=[words[40 + (i % 6)], words[(i * 3) % 24], words[(i * 5 + 7) % 24]],
) for i in range(8)]

config = TrainConfig(hidden=32, emb_dim=32, lr=0.003, dropout=0.0,
                     epochs=2000, batch_size=8, seed=0, k_max=8,
                     l_c_max=2, l_p_max=2, max_steps=2000,
                     target_valid_loss=0.05)
history, best, vocab = train(config, examples, examples)
print(f"stopped after {len(history)} updates; "
      f"per-token loss {history[-1].valid_loss:.4f}")
for rec in history[:: max(1, len(history) // 8)]:
    print(f"  epoch {rec.epoch:4d}  train {rec.train_loss:.4f}  valid {rec.valid_loss:.4f}")

batch = encode_batch(examples, vocab, config.k_max, config.l_c_max, config.l_p_max)
print("\ngreedy decodes vs gold:")
for i, ex in enumerate(examples):
    ids = model.generate(best.params, batch.example_ids(i), beam_size=1, max_len=8)
    decoded = " ".join(vocab.decode(ids))
    gold = " ".join(ex.response)
    mark = "=" if decoded == gold else "!"
    print(f"  [{mark}] {decoded}   (gold: {gold})")

report, _ = evaluate(best, examples)
print(f"\ncorpus metrics: bleu1={report.bleu1:.3f} bleu2={report.bleu2:.3f} "
      f"distinct1={report.distinct1:.3f} distinct2={report.distinct2:.3f}")
