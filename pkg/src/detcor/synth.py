"""Seeded synthetic corruption of clean sentences.

Per sample, three independent coin flips decide whether to substitute a
confusable character, delete one character and insert one extra
character. Insertions pick one of four modes (repeat, confusion,
high_freq, random). Gold labels come from aligning the corrupted
sentence back to the clean one.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .align import derive_labels
from .core import PathLike, SentencePair, _open_lines
from .corrector import ConfusionSet

MODES = ("repeat", "confusion", "high_freq", "random")


@dataclass
class SynthConfig:
    seed: int = 0
    p_delete_sample: float = 0.50
    p_insert_sample: float = 0.50
    mode_weights: Tuple[float, float, float, float] = (0.35, 0.30, 0.30, 0.05)
    p_substitute: float = 0.0
    top_n: int = 1000
    confusion_retries: int = 3

    def __post_init__(self):
        for name in ("p_delete_sample", "p_insert_sample", "p_substitute"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        self.mode_weights = tuple(float(w) for w in self.mode_weights)
        if len(self.mode_weights) != len(MODES) or min(self.mode_weights) < 0:
            raise ValueError("mode_weights needs four non-negative entries")
        if abs(sum(self.mode_weights) - 1.0) > 1e-9:
            raise ValueError(f"mode_weights sum to {sum(self.mode_weights)}, not 1")


@dataclass
class SynthResources:
    """Side inputs for insertion modes."""

    confusion: ConfusionSet = field(default_factory=ConfusionSet)
    lexicon: Sequence[Tuple[str, int]] = ()
    vocabulary: Sequence[str] = ()

    def top_lexicon(self, n: int) -> Tuple[List[str], np.ndarray]:
        ranked = sorted(self.lexicon, key=lambda wf: (-wf[1], wf[0]))[:n]
        words = [w for w, _ in ranked]
        freqs = np.asarray([f for _, f in ranked], dtype=float)
        return words, freqs / freqs.sum() if len(freqs) else freqs


def read_lexicon(path: PathLike) -> List[Tuple[str, int]]:
    out = []
    for lineno, line in _open_lines(path):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'word<TAB>frequency'")
        out.append((parts[0], int(parts[1])))
    return out


def char_lexicon(sentences) -> List[Tuple[str, int]]:
    counts = Counter()
    for s in sentences:
        counts.update(s)
    return sorted(counts.items(), key=lambda wf: (-wf[1], wf[0]))


def _anchors(s: str, confusion: ConfusionSet) -> List[int]:
    return [i for i, ch in enumerate(s) if ch in confusion]


def _pick(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def _insert(s: str, mode: str, rng, cfg: SynthConfig, res: SynthResources, top) -> Tuple[str, str]:
    """Insert one character by ``mode``; returns (new sentence, mode actually used)."""
    tries = 0
    while True:
        if mode == "repeat":
            i = int(rng.integers(len(s)))
            return s[: i + 1] + s[i] + s[i + 1 :], mode
        if mode == "confusion":
            anchors = _anchors(s, res.confusion)
            if anchors:
                i = _pick(rng, anchors)
                ch = _pick(rng, sorted(res.confusion[s[i]]))
                return s[: i + 1] + ch + s[i + 1 :], mode
            tries += 1
            if tries > cfg.confusion_retries:
                mode = "random"
            else:
                mode = MODES[int(rng.choice(len(MODES), p=cfg.mode_weights))]
            continue
        if mode == "high_freq" and len(top[0]):
            word = top[0][int(rng.choice(len(top[0]), p=top[1]))]
            ch = _pick(rng, word)
        else:
            mode = "random"
            vocab = res.vocabulary or sorted(set(s))
            ch = _pick(rng, vocab)
        i = int(rng.integers(len(s) + 1))
        return s[:i] + ch + s[i:], mode


def corrupt(
    clean: str,
    cfg: SynthConfig,
    rng: np.random.Generator,
    resources: Optional[SynthResources] = None,
    _top=None,
) -> Tuple[SentencePair, Dict]:
    """Corrupt one clean sentence; returns the labeled pair and what was done."""
    if len(clean) < 2:
        raise ValueError("need at least two characters to corrupt")
    res = resources or SynthResources()
    top = _top if _top is not None else res.top_lexicon(cfg.top_n)
    info = {"substituted": False, "deleted": False, "insert_mode": None}

    s = clean
    if rng.random() < cfg.p_substitute:
        anchors = _anchors(s, res.confusion)
        if anchors:
            i = _pick(rng, anchors)
            s = s[:i] + _pick(rng, sorted(res.confusion[s[i]])) + s[i + 1 :]
            info["substituted"] = True
    if rng.random() < cfg.p_delete_sample:
        i = int(rng.integers(len(s)))
        s = s[:i] + s[i + 1 :]
        info["deleted"] = True
    if rng.random() < cfg.p_insert_sample:
        mode = MODES[int(rng.choice(len(MODES), p=cfg.mode_weights))]
        s, info["insert_mode"] = _insert(s, mode, rng, cfg, res, top)

    labels, conflicts = derive_labels(SentencePair(s, clean))
    info["conflicts"] = conflicts
    return SentencePair(s, clean, labels), info


def sentence_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream per sentence, so results do not depend on processing order."""
    return np.random.default_rng([seed, index])


def corrupt_corpus(
    clean: Sequence[str], cfg: SynthConfig, resources: Optional[SynthResources] = None
) -> Tuple[List[SentencePair], Dict]:
    res = resources or SynthResources()
    if not res.vocabulary:
        res = SynthResources(res.confusion, res.lexicon, sorted({ch for s in clean for ch in s}))
    if not res.lexicon:
        res = SynthResources(res.confusion, char_lexicon(clean), res.vocabulary)
    top = res.top_lexicon(cfg.top_n)

    pairs = []
    modes = Counter({m: 0 for m in MODES})
    deleted = inserted = substituted = conflicts = too_short = 0
    for idx, s in enumerate(clean):
        if len(s) < 2:
            labels, _ = derive_labels(SentencePair(s, s))
            pairs.append(SentencePair(s, s, labels))
            too_short += 1
            continue
        pair, info = corrupt(s, cfg, sentence_rng(cfg.seed, idx), res, top)
        pairs.append(pair)
        deleted += info["deleted"]
        substituted += info["substituted"]
        conflicts += info["conflicts"]
        if info["insert_mode"]:
            inserted += 1
            modes[info["insert_mode"]] += 1
    n = len(pairs) - too_short
    manifest = {
        "sentences": len(pairs),
        "too_short": too_short,
        "deleted": deleted,
        "inserted": inserted,
        "substituted": substituted,
        "conflicts": conflicts,
        "modes": dict(modes),
        "fractions": {
            "deleted": deleted / n if n else 0.0,
            "inserted": inserted / n if n else 0.0,
            "substituted": substituted / n if n else 0.0,
            "modes": {m: (modes[m] / inserted if inserted else 0.0) for m in MODES},
        },
        "config": asdict(cfg),
    }
    return pairs, manifest


def write_manifest(manifest: Dict, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
