"""Reference implementations of the automatic dialogue metrics: corpus BLEU-1/2
with brevity penalty, corpus-level Distinct-1/2, and set-based knowledge
recall/precision/F1 over stopword-filtered unigrams."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from importlib import resources

BLEU_EPS = 1e-9
BLEU_SMOOTHING = f"add-epsilon {BLEU_EPS:g}"


@dataclass
class EvalReport:
    bleu1: float
    bleu2: float
    distinct1: float
    distinct2: float
    knowledge_recall: float
    knowledge_precision: float
    knowledge_f1: float
    metadata: dict = field(default_factory=lambda: {"bleu_smoothing": BLEU_SMOOTHING})

    def metric_fields(self) -> dict:
        d = asdict(self)
        d.pop("metadata")
        return d

    def to_flat_text(self) -> str:
        lines = [f"{k}={v:.6f}" for k, v in self.metric_fields().items()]
        lines += [f"meta.{k}={v}" for k, v in self.metadata.items()]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def _ngram_counts(tokens, n) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _modified_precision(hypotheses, references, order: int) -> float:
    matches = total = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_counts = _ngram_counts(hyp, order)
        ref_counts = _ngram_counts(ref, order)
        matches += sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
        total += sum(hyp_counts.values())
    if total == 0:
        return BLEU_EPS
    return (matches + BLEU_EPS) / (total + BLEU_EPS)


def bleu_n(hypotheses, references, n: int) -> float:
    """Corpus-level BLEU-n: geometric mean of modified 1..n-gram precisions
    with brevity penalty; zero counts smoothed by a small epsilon."""
    if n not in (1, 2):
        raise ValueError("only BLEU-1 and BLEU-2 are supported")
    if not hypotheses:
        raise ValueError("need at least one hypothesis")
    if len(hypotheses) != len(references):
        raise ValueError("hypothesis/reference lists must have equal length")
    hyp_len = sum(len(h) for h in hypotheses)
    ref_len = sum(len(r) for r in references)
    if hyp_len == 0:
        return 0.0
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    log_p = [math.log(_modified_precision(hypotheses, references, k))
             for k in range(1, n + 1)]
    return bp * math.exp(sum(log_p) / n)


def distinct_n(hypotheses, n: int) -> float:
    """Distinct n-grams across all hypotheses divided by the total n-gram
    count (0 when there are no n-grams at all)."""
    if not hypotheses:
        raise ValueError("need at least one hypothesis")
    seen = set()
    total = 0
    for hyp in hypotheses:
        for i in range(len(hyp) - n + 1):
            seen.add(tuple(hyp[i:i + n]))
            total += 1
    return len(seen) / total if total else 0.0


def load_stopwords() -> frozenset:
    text = resources.files("persona_dialogue").joinpath("stopwords.txt").read_text()
    return frozenset(w for w in text.split("\n") if w)


_STOPWORDS: frozenset | None = None


def _stopwords() -> frozenset:
    global _STOPWORDS
    if _STOPWORDS is None:
        _STOPWORDS = load_stopwords()
    return _STOPWORDS


def _harmonic(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if (p + r) > 0 else 0.0


def knowledge_rpf1(hypothesis_tokens, knowledge_sentences):
    """Set overlap between a response and its grounding knowledge.

    Both sides are lowercased unigram sets with stopwords removed; returns
    (recall, precision, f1). Precision is 0 when the response has no content
    words; recall is 0 when the knowledge has none.
    """
    if not knowledge_sentences:
        raise ValueError("knowledge must be non-empty")
    stop = _stopwords()
    k_set = {t.lower() for sent in knowledge_sentences for t in sent} - stop
    r_set = {t.lower() for t in hypothesis_tokens} - stop
    overlap = len(k_set & r_set)
    precision = overlap / len(r_set) if r_set else 0.0
    recall = overlap / len(k_set) if k_set else 0.0
    return recall, precision, _harmonic(precision, recall)


def evaluate_corpus(outputs, golds, knowledge) -> EvalReport:
    """Aggregate all metric families over a decoded corpus.

    ``outputs`` and ``golds`` are token lists per example; ``knowledge`` is a
    list of knowledge sentence lists per example. Knowledge scores are
    per-example averages with the report F1 the harmonic mean of the averaged
    precision and recall.
    """
    if not (len(outputs) == len(golds) == len(knowledge)):
        raise ValueError("outputs, golds, and knowledge must align")
    if not outputs:
        raise ValueError("cannot evaluate an empty corpus")
    recalls, precisions = [], []
    for out, know in zip(outputs, knowledge):
        r, p, _ = knowledge_rpf1(out, know)
        recalls.append(r)
        precisions.append(p)
    recall = sum(recalls) / len(recalls)
    precision = sum(precisions) / len(precisions)
    return EvalReport(
        bleu1=bleu_n(outputs, golds, 1),
        bleu2=bleu_n(outputs, golds, 2),
        distinct1=distinct_n(outputs, 1),
        distinct2=distinct_n(outputs, 2),
        knowledge_recall=recall,
        knowledge_precision=precision,
        knowledge_f1=_harmonic(precision, recall),
    )
