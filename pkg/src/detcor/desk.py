"""Small synthetic experiment that exercises the whole pipeline on one CPU core."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from typing import Dict, List

import numpy as np

from .core import labels_from_tags
from .corrector import ConfusionSet, random_fill, train_lm
from .detector import DetectorHyper, Featurizer, tag, train
from .evaluate import m2_block_from_pair, m2_corpus
from .modlogic import rewrite
from .pipeline import correct_sentence
from .synth import SynthConfig, SynthResources, corrupt_corpus


def markov_vocabulary(size: int = 50) -> List[str]:
    return [chr(0x4E00 + k) for k in range(size)]


def markov_corpus(
    n: int,
    seed: int,
    vocab_size: int = 50,
    min_len: int = 8,
    max_len: int = 30,
    concentration: float = 0.1,
    table_seed: int = 1234,
) -> List[str]:
    """Sentences from a seeded order-2 Markov chain over CJK characters.

    ``table_seed`` fixes the chain itself; ``seed`` only drives sampling,
    so train and test sets drawn with different seeds share one source.
    """
    vocab = markov_vocabulary(vocab_size)
    V = vocab_size
    table = np.random.default_rng(table_seed).dirichlet(
        np.full(V, concentration), size=(V + 1, V + 1)
    )
    cdf = np.cumsum(table, axis=-1)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        length = int(rng.integers(min_len, max_len + 1))
        a = b = V  # begin context
        chars = []
        for u in rng.random(length):
            c = min(int(np.searchsorted(cdf[a, b], u, side="right")), V - 1)
            chars.append(vocab[c])
            a, b = b, c
        out.append("".join(chars))
    return out


def random_confusion(vocab: List[str], per_char: int = 3, seed: int = 0) -> ConfusionSet:
    rng = np.random.default_rng(seed)
    table = {}
    for k, ch in enumerate(vocab):
        others = [c for j, c in enumerate(vocab) if j != k]
        picks = rng.choice(len(others), size=per_char, replace=False)
        table[ch] = frozenset(others[int(j)] for j in picks)
    return ConfusionSet(table)


@dataclass
class DeskConfig:
    n_train: int = 5000
    n_test: int = 1000
    vocab_size: int = 50
    seed: int = 0
    epochs: int = 10
    dim: int = 1 << 18
    beam: int = 1


def run_desk_experiment(cfg: DeskConfig = DeskConfig(), log=None) -> Dict:
    """Train on synthetic data, then compare the pipeline with two baselines on M2 F0.5."""
    t0 = time.perf_counter()
    vocab = markov_vocabulary(cfg.vocab_size)
    confusion = random_confusion(vocab, seed=cfg.seed)
    train_clean = markov_corpus(cfg.n_train, cfg.seed + 1, cfg.vocab_size)
    test_clean = markov_corpus(cfg.n_test, cfg.seed + 2, cfg.vocab_size)
    res = SynthResources(confusion=confusion, vocabulary=vocab)
    train_pairs, train_manifest = corrupt_corpus(train_clean, SynthConfig(seed=cfg.seed + 3), res)
    test_pairs, test_manifest = corrupt_corpus(test_clean, SynthConfig(seed=cfg.seed + 4), res)

    featurizer = Featurizer.from_corpus(train_clean, dim=cfg.dim, confusable=confusion.table)
    det = train(train_pairs, DetectorHyper(dim=cfg.dim, epochs=cfg.epochs, seed=cfg.seed),
                featurizer=featurizer, log=log)
    lm = train_lm(train_clean)

    sources = [p.source for p in test_pairs]
    gold = [m2_block_from_pair(p)[1] for p in test_pairs]
    hyps = [correct_sentence(det, lm, s, confusion, cfg.beam)[0] for s in sources]
    rng = np.random.default_rng(cfg.seed + 5)
    ablation = [random_fill(lm, rewrite(s, labels_from_tags(tag(det, s))), rng) for s in sources]

    pipeline = m2_corpus(sources, hyps, gold)
    copy = m2_corpus(sources, sources, gold)
    rand = m2_corpus(sources, ablation, gold)
    return {
        "config": asdict(cfg),
        "train_manifest": {k: v for k, v in train_manifest.items() if k != "config"},
        "test_manifest": {k: v for k, v in test_manifest.items() if k != "config"},
        "detector_loss": det.history,
        "pipeline": pipeline.to_dict(diagnostics=False),
        "copy": copy.to_dict(diagnostics=False),
        "random_fill": rand.to_dict(diagnostics=False),
        "seconds": time.perf_counter() - t0,
    }
