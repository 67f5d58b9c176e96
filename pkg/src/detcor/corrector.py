"""Mask filling with an add-k smoothed character trigram model."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .core import BOS, EOS, Mask, MaskedSequence, PathLike, _open_lines

LM_KIND = "charlm.v1"


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionSet:
    table: Mapping[str, FrozenSet[str]] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for ch, alts in self.table.items():
            alts = frozenset(a for a in alts if a != ch)
            if alts:
                clean[ch] = alts
        object.__setattr__(self, "table", clean)

    def __getitem__(self, ch: str) -> FrozenSet[str]:
        return self.table.get(ch, frozenset())

    def __contains__(self, ch: str) -> bool:
        return ch in self.table

    def __len__(self):
        return len(self.table)


def read_confusion(path: PathLike) -> ConfusionSet:
    """One entry per line: ``char<TAB>confusables`` (confusables unseparated)."""
    table: Dict[str, set] = {}
    for lineno, line in _open_lines(path):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2 or len(parts[0]) != 1:
            raise ValueError(f"{path}:{lineno}: expected 'char<TAB>confusables'")
        table.setdefault(parts[0], set()).update(parts[1])
    return ConfusionSet(table)


def write_confusion(confusion: ConfusionSet, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ch in sorted(confusion.table):
            fh.write(f"{ch}\t{''.join(sorted(confusion.table[ch]))}\n")


@dataclass
class CharLM:
    """Character trigram counts with add-k smoothing.

    Sentences are padded as ``BOS BOS s EOS``; the vocabulary is every
    observed character plus both padding symbols.
    """

    unigrams: Counter
    bigrams: Counter
    trigrams: Counter
    k: float = 0.01
    top_k: int = 2000

    def __post_init__(self):
        self.vocab: Tuple[str, ...] = tuple(
            sorted(set(self.unigrams) | {BOS, EOS})
        )
        self._vocab_set = frozenset(self.vocab)
        self._history: Counter = Counter()
        for tri, c in self.trigrams.items():
            self._history[tri[:2]] += c
        # ranked candidate list: most frequent first, padding excluded
        ranked = sorted(
            (ch for ch in self.unigrams if ch not in (BOS, EOS)),
            key=lambda ch: (-self.unigrams[ch], ch),
        )
        self.candidates: Tuple[str, ...] = tuple(ranked[: self.top_k])

    @property
    def V(self) -> int:
        return len(self.vocab)

    def __contains__(self, ch: str) -> bool:
        return ch in self._vocab_set

    def prob(self, c: str, history: str) -> float:
        """P(c | two-character history), add-k smoothed over the vocabulary."""
        num = self.trigrams.get(history + c, 0) + self.k
        return num / (self._history.get(history, 0) + self.k * self.V)

    def logprob(self, c: str, history: str) -> float:
        return math.log(self.prob(c, history))

    def to_json(self) -> dict:
        return {
            "kind": LM_KIND,
            "k": self.k,
            "top_k": self.top_k,
            "counts": {
                "1": dict(sorted(self.unigrams.items())),
                "2": dict(sorted(self.bigrams.items())),
                "3": dict(sorted(self.trigrams.items())),
            },
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CharLM":
        if obj.get("kind") != LM_KIND:
            raise ModelFormatError(f"expected kind {LM_KIND!r}, got {obj.get('kind')!r}")
        c = obj["counts"]
        return cls(
            Counter(c["1"]), Counter(c["2"]), Counter(c["3"]),
            k=float(obj["k"]), top_k=int(obj["top_k"]),
        )

    def save(self, path: PathLike) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_json(), fh, ensure_ascii=False)
            fh.write("\n")

    @classmethod
    def load(cls, path: PathLike) -> "CharLM":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def train_lm(corpus: Iterable[str], k: float = 0.01, top_k: int = 2000) -> CharLM:
    uni, bi, tri = Counter(), Counter(), Counter()
    n = 0
    for s in corpus:
        n += 1
        uni.update(s)
        padded = BOS + BOS + s + EOS
        bi.update(padded[j : j + 2] for j in range(1, len(padded) - 1))
        tri.update(padded[j : j + 3] for j in range(len(padded) - 2))
    if n == 0:
        raise ValueError("cannot train a language model on an empty corpus")
    return CharLM(uni, bi, tri, k=k, top_k=top_k)


def score_candidate(lm: CharLM, left: str, c: str, right: str = "") -> float:
    """log P(c | left) + log P(right[0] | left[-1], c).

    ``left`` is padded with BOS; the right term is dropped when ``right``
    is empty. Pass EOS as ``right`` to score against the sentence end.
    """
    if c not in lm:
        raise KeyError(f"candidate {c!r} not in vocabulary")
    hist = (BOS + BOS + left)[-2:]
    score = lm.logprob(c, hist)
    if right:
        score += lm.logprob(right[0], hist[-1] + c)
    return score


def _candidates(lm: CharLM, mask: Mask, confusion: Optional[ConfusionSet]) -> Sequence[str]:
    if confusion is not None and mask.kind == "mistaken" and mask.original is not None:
        cands = sorted(ch for ch in confusion[mask.original] if ch in lm)
        if cands:
            return cands
    return lm.candidates


def _context(slots: List, k: int) -> Tuple[str, str]:
    left = "".join(slots[max(0, k - 2) : k])
    if k + 1 == len(slots):
        right = EOS
    elif isinstance(slots[k + 1], Mask):
        right = ""
    else:
        right = slots[k + 1]
    return left, right


def fill(
    lm: CharLM,
    masked: MaskedSequence,
    confusion: Optional[ConfusionSet] = None,
    beam: int = 1,
) -> str:
    """Fill masks left to right, keeping the ``beam`` best partial fillings."""
    if beam < 1:
        raise ValueError("beam width must be >= 1")
    positions = [k for k, s in enumerate(masked.slots) if isinstance(s, Mask)]
    beams: List[Tuple[float, List]] = [(0.0, list(masked.slots))]
    for k in positions:
        mask = masked.slots[k]
        cands = _candidates(lm, mask, confusion)
        expanded = []
        for score, slots in beams:
            left, right = _context(slots, k)
            for c in cands:
                expanded.append((score + score_candidate(lm, left, c, right), slots, c))
        # stable sort keeps generation order on ties
        expanded.sort(key=lambda t: -t[0])
        beams = []
        for score, slots, c in expanded[:beam]:
            new = list(slots)
            new[k] = c
            beams.append((score, new))
    return "".join(beams[0][1])


def random_fill(lm: CharLM, masked: MaskedSequence, rng: np.random.Generator) -> str:
    """Ablation: fill each mask with a uniformly drawn candidate character."""
    cands = lm.candidates
    return "".join(
        cands[rng.integers(len(cands))] if isinstance(s, Mask) else s
        for s in masked.slots
    )
