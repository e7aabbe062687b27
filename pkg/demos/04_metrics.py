"""The three metric families on worked examples, with the arithmetic shown."""

import math

from persona_dialogue import bleu_n, distinct_n, evaluate_corpus, knowledge_rpf1

print("BLEU with brevity penalty")
hyp, ref = ["the", "cat"], ["the", "cat", "sat"]
print(f"  hyp={hyp} ref={ref}")
print(f"  unigram precision 1.0, penalty exp(1 - 3/2) = {math.exp(-0.5):.5f}")
print(f"  bleu_n -> {bleu_n([hyp], [ref], 1):.5f}")

print("\nDistinct-n diversity")
print(f"  ['i','am','i'] has 2 distinct unigrams of 3: {distinct_n([['i', 'am', 'i']], 1):.4f}")
print(f"  ['a','b','a','b'] has 2 distinct bigrams of 3: {distinct_n([['a', 'b', 'a', 'b']], 2):.4f}")

print("\nKnowledge recall/precision/F1 (stopword-filtered unigram sets)")
knowledge = [["i", "have", "four", "children"], ["i'm", "a", "gold", "medalist"]]
reply = ["i", "have", "four", "children", "and", "i", "am", "a", "doctor"]
r, p, f1 = knowledge_rpf1(reply, knowledge)
print(f"  knowledge content words: four children gold medalist")
print(f"  reply content words:     four children doctor")
print(f"  recall {r:.4f}  precision {p:.4f}  f1 {f1:.4f}")

print("\nWhole-corpus report")
outputs = [["i", "love", "dogs"], ["gold", "medalist", "me"]]
golds = [["i", "love", "dogs", "a", "lot"], ["i", "am", "a", "gold", "medalist"]]
knowledge_lists = [[["i", "love", "dogs"]], [["i'm", "a", "gold", "medalist"]]]
report = evaluate_corpus(outputs, golds, knowledge_lists)
print(report.to_flat_text())
