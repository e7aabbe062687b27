"""Persona-aware multi-turn dialogue generation in pure numpy.

A bidirectional-GRU sentence encoder pools each persona sentence and
conversation turn; a per-turn interaction keeps a coverage accumulator over
the knowledge sentences and residually enriches them from the conversation;
a gated two-GRU decoder blends token context with a speaking-style vector
built from both speakers' personas. Training, evaluation metrics, an HTTP
chat service, and a CLI are included.
"""

from .autodiff import Var, backward
from .data import (Batch, CorpusStats, DialogueExample, ParseError,
                   encode_batch, load_cmudog, load_convai2,
                   load_pretrained_embeddings)
from .interaction import KnowledgeState, TurnSummary
from .metrics import (EvalReport, bleu_n, distinct_n, evaluate_corpus,
                      knowledge_rpf1)
from .model import AblationFlags, ForwardOptions, generate, init_params
from .training import (Adam, Checkpoint, TrainConfig, TrainingDiverged,
                       clip_gradients, evaluate, train)
from .vocab import Vocabulary, build_vocab, tokenize

__version__ = "0.1.0"

__all__ = [
    "AblationFlags", "Adam", "Batch", "Checkpoint", "CorpusStats",
    "DialogueExample", "EvalReport", "ForwardOptions", "KnowledgeState",
    "ParseError", "TrainConfig", "TrainingDiverged", "TurnSummary", "Var",
    "Vocabulary", "backward", "bleu_n", "build_vocab", "clip_gradients",
    "distinct_n", "encode_batch", "evaluate", "evaluate_corpus", "generate",
    "init_params", "knowledge_rpf1", "load_cmudog", "load_convai2",
    "load_pretrained_embeddings", "tokenize", "train",
]
