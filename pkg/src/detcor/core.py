"""Domain types and corpus I/O.

Sentences are plain ``str`` objects; one token per Unicode scalar value.
A label sequence for a sentence of length n always has n + 1 entries: one
per character plus a terminal end slot that only carries an insert count.
"""

from __future__ import annotations

import enum
import json
import os
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence, Tuple, Union

PathLike = Union[str, os.PathLike]

# padding symbols; control characters never occur inside a sentence
BOS = "\x02"
EOS = "\x03"


class CorpusError(ValueError):
    """Malformed corpus or label file."""


class Action(str, enum.Enum):
    KEEP = "keep"
    MISTAKEN = "mistaken"
    REDUNDANT = "redundant"


class Tag(enum.IntEnum):
    """The four detector classes."""

    KEEP = 0
    MISTAKEN = 1
    MISSING = 2
    REDUNDANT = 3


class EditType(str, enum.Enum):
    MISSING = "M"
    REPLACEMENT = "R"
    UNNECESSARY = "U"
    NOOP = "noop"


@dataclass(frozen=True)
class TokenLabel:
    insert_before: int = 0
    action: Action = Action.KEEP

    def __post_init__(self):
        if self.insert_before < 0:
            raise ValueError("insert_before must be >= 0")
        if not isinstance(self.action, Action):
            object.__setattr__(self, "action", Action(self.action))

    def tag(self) -> Tag:
        """Project onto the four detector classes."""
        if self.action is Action.KEEP:
            return Tag.MISSING if self.insert_before > 0 else Tag.KEEP
        if self.action is Action.MISTAKEN:
            return Tag.MISTAKEN
        return Tag.REDUNDANT

    @classmethod
    def from_tag(cls, tag: Tag) -> "TokenLabel":
        return _TAG_TO_LABEL[Tag(tag)]


_TAG_TO_LABEL = {
    Tag.KEEP: TokenLabel(0, Action.KEEP),
    Tag.MISTAKEN: TokenLabel(0, Action.MISTAKEN),
    Tag.MISSING: TokenLabel(1, Action.KEEP),
    Tag.REDUNDANT: TokenLabel(0, Action.REDUNDANT),
}

KEEP = TokenLabel()

Labels = Tuple[TokenLabel, ...]


def labels_from_tags(tags: Sequence[Tag]) -> Labels:
    """Lift n + 1 four-class tags to TokenLabels.

    At the end slot only MISSING is meaningful; any other class there is
    read as KEEP.
    """
    out = [TokenLabel.from_tag(t) for t in tags[:-1]]
    out.append(TokenLabel(1) if tags and Tag(tags[-1]) is Tag.MISSING else KEEP)
    return tuple(out)


def tags_from_labels(labels: Sequence[TokenLabel]) -> Tuple[Tag, ...]:
    return tuple(lab.tag() for lab in labels)


def check_labels(sentence: str, labels: Sequence[TokenLabel]) -> None:
    if len(labels) != len(sentence) + 1:
        raise ValueError(
            f"label sequence has {len(labels)} entries, expected {len(sentence) + 1}"
        )
    if labels[-1].action is not Action.KEEP:
        raise ValueError("end slot may only carry an insert count")


def validate_sentence(text: str) -> str:
    for ch in text:
        if unicodedata.category(ch) == "Cc":
            raise ValueError(f"control character {ch!r} in sentence")
    return text


@dataclass(frozen=True)
class SentencePair:
    source: str
    target: str
    gold_labels: Optional[Labels] = None

    def __post_init__(self):
        if self.gold_labels is not None:
            object.__setattr__(self, "gold_labels", tuple(self.gold_labels))
            check_labels(self.source, self.gold_labels)


@dataclass(frozen=True)
class Mask:
    """An unfilled slot. ``source_index`` == len(source) means the end slot."""

    source_index: int
    kind: str  # "mistaken" | "missing"
    original: Optional[str] = None  # the replaced character for mistaken masks

    def __str__(self):
        return MASK_SYMBOL


MASK_SYMBOL = "□"

Slot = Union[str, Mask]


@dataclass(frozen=True)
class MaskedSequence:
    slots: Tuple[Slot, ...]
    source: str = ""

    def __len__(self):
        return len(self.slots)

    @property
    def masks(self) -> Tuple[Tuple[int, Mask], ...]:
        return tuple((k, s) for k, s in enumerate(self.slots) if isinstance(s, Mask))

    @property
    def n_masks(self) -> int:
        return sum(isinstance(s, Mask) for s in self.slots)

    def render(self, mask: str = MASK_SYMBOL) -> str:
        return "".join(mask if isinstance(s, Mask) else s for s in self.slots)

    def fixed(self) -> str:
        return "".join(s for s in self.slots if not isinstance(s, Mask))


@dataclass(frozen=True, order=True)
class Edit:
    start: int
    end: int
    replacement: str = ""
    etype: EditType = field(default=EditType.REPLACEMENT, compare=False)

    def __post_init__(self):
        if not isinstance(self.etype, EditType):
            object.__setattr__(self, "etype", EditType(self.etype))
        if self.etype is EditType.NOOP:
            return
        if self.end < self.start or self.start < 0:
            raise ValueError(f"bad edit span ({self.start}, {self.end})")
        if (self.start == self.end) != (self.etype is EditType.MISSING):
            raise ValueError(f"edit type {self.etype.name} inconsistent with span")
        if (self.end > self.start and not self.replacement) != (
            self.etype is EditType.UNNECESSARY
        ):
            raise ValueError(f"edit type {self.etype.name} inconsistent with replacement")

    @classmethod
    def make(cls, start: int, end: int, replacement: str) -> "Edit":
        """Build an edit, inferring its type from span and replacement."""
        if start == end:
            etype = EditType.MISSING
        elif not replacement:
            etype = EditType.UNNECESSARY
        else:
            etype = EditType.REPLACEMENT
        return cls(start, end, replacement, etype)

    @classmethod
    def noop(cls) -> "Edit":
        return cls(-1, -1, "", EditType.NOOP)

    @property
    def key(self) -> Tuple[int, int, str]:
        return (self.start, self.end, self.replacement)


def apply_edits(source: str, edits: Iterable[Edit]) -> str:
    """Apply non-overlapping edits right to left.

    Edits sharing a start offset are applied in list order, so two
    insertions at the same point come out in the order given.
    """
    real = [e for e in edits if e.etype is not EditType.NOOP]
    order = sorted(range(len(real)), key=lambda k: (real[k].start, k))
    out = source
    prev_start = len(source) + 1
    for k in reversed(order):
        e = real[k]
        if e.end > prev_start or e.end > len(source):
            raise ValueError(f"overlapping or out-of-range edit {e}")
        out = out[: e.start] + e.replacement + out[e.end :]
        prev_start = e.start
    return out


# --------------------------------------------------------------------------
# corpus files


def _open_lines(path: PathLike) -> Iterator[Tuple[int, str]]:
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, 1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise UnicodeDecodeError(
                    exc.encoding, exc.object, exc.start, exc.end,
                    f"{exc.reason} (line {lineno})",
                ) from None
            yield lineno, line.rstrip("\n").rstrip("\r")


def read_parallel_tsv(path: PathLike) -> Iterator[SentencePair]:
    """Yield ``source<TAB>target`` pairs, skipping blank lines."""
    for lineno, line in _open_lines(path):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise CorpusError(f"{path}:{lineno}: expected 2 tab-separated fields, got {len(fields)}")
        yield SentencePair(validate_sentence(fields[0]), validate_sentence(fields[1]))


def write_parallel_tsv(pairs: Iterable[SentencePair], path: PathLike) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in pairs:
            fh.write(f"{p.source}\t{p.target}\n")
            n += 1
    return n


def read_lines(path: PathLike) -> Iterator[str]:
    """Plain one-sentence-per-line corpus; blank lines skipped."""
    for _, line in _open_lines(path):
        if line.strip():
            yield validate_sentence(line)


def write_lines(lines: Iterable[str], path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def pair_to_json(pair: SentencePair) -> dict:
    if pair.gold_labels is None:
        raise ValueError("pair has no gold labels")
    check_labels(pair.source, pair.gold_labels)
    return {
        "source": pair.source,
        "target": pair.target,
        "labels": [
            {"ins": lab.insert_before, "act": lab.action.value}
            for lab in pair.gold_labels[:-1]
        ],
        "end_ins": pair.gold_labels[-1].insert_before,
    }


def pair_from_json(obj: dict) -> SentencePair:
    try:
        labels = [TokenLabel(int(d["ins"]), Action(d["act"])) for d in obj["labels"]]
        labels.append(TokenLabel(int(obj["end_ins"])))
        source, target = obj["source"], obj["target"]
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusError(f"bad label record: {exc}") from None
    if len(labels) != len(source) + 1:
        raise CorpusError(
            f"label count {len(labels) - 1} does not match source length {len(source)}"
        )
    return SentencePair(source, target, tuple(labels))


def write_labels_jsonl(pairs: Iterable[SentencePair], path: PathLike) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in pairs:
            fh.write(json.dumps(pair_to_json(p), ensure_ascii=False) + "\n")
            n += 1
    return n


def read_labels_jsonl(path: PathLike) -> Iterator[SentencePair]:
    for lineno, line in _open_lines(path):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"{path}:{lineno}: {exc}") from None
        try:
            yield pair_from_json(obj)
        except CorpusError as exc:
            raise CorpusError(f"{path}:{lineno}: {exc}") from None
