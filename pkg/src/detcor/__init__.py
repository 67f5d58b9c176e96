"""Alignment-agnostic detect-correct pipeline for character-level text correction."""

from .align import align, derive_labels, extract_edits
from .core import (
    Action,
    Edit,
    EditType,
    Mask,
    MaskedSequence,
    SentencePair,
    Tag,
    TokenLabel,
    apply_edits,
    read_labels_jsonl,
    read_parallel_tsv,
    write_labels_jsonl,
)
from .corrector import CharLM, ConfusionSet, fill, score_candidate, train_lm
from .detector import DetectorHyper, DetectorModel, Featurizer, loss_and_gradient, predict, tag, train
from .evaluate import EvalReport, errant_score, eval_sentence_level, f_beta, m2_score
from .modlogic import oracle_fill, rewrite
from .pipeline import correct_corpus, correct_sentence
from .synth import SynthConfig, corrupt, corrupt_corpus

__version__ = "0.1.0"
