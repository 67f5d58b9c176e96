"""Detect, rewrite, fill: the end-to-end correction path."""

from __future__ import annotations

import json
import multiprocessing
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

from .core import PathLike, Tag, _open_lines, labels_from_tags, validate_sentence
from .corrector import CharLM, ConfusionSet, fill
from .detector import DetectorModel, tag
from .modlogic import rewrite


@dataclass(frozen=True)
class Trace:
    source: str
    tags: Tuple[Tag, ...]
    masked: str
    output: str
    n_masks: int

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "tags": [t.name.lower() for t in self.tags],
            "masked": self.masked,
            "output": self.output,
            "masks": self.n_masks,
        }


def correct_sentence(
    det: DetectorModel,
    lm: CharLM,
    x: str,
    confusion: Optional[ConfusionSet] = None,
    beam: int = 1,
    tag_bias: Optional[Sequence[float]] = None,
) -> Tuple[str, Trace]:
    tags = tag(det, x, tag_bias)
    masked = rewrite(x, labels_from_tags(tags))
    y = fill(lm, masked, confusion, beam)
    return y, Trace(x, tags, masked.render(), y, masked.n_masks)


# worker state for process pools; set once per worker by _init
_STATE: dict = {}


def _init(det, lm, confusion, beam, tag_bias):
    _STATE.update(det=det, lm=lm, confusion=confusion, beam=beam, tag_bias=tag_bias)


def _work(x: str) -> Trace:
    s = _STATE
    return correct_sentence(s["det"], s["lm"], x, s["confusion"], s["beam"], s["tag_bias"])[1]


def read_sources(path: PathLike) -> Iterator[str]:
    """One sentence per line; for TSV input the first field is the source."""
    for _, line in _open_lines(path):
        if line.strip():
            yield validate_sentence(line.split("\t", 1)[0])


def correct_many(
    det: DetectorModel,
    lm: CharLM,
    sentences: Iterable[str],
    confusion: Optional[ConfusionSet] = None,
    beam: int = 1,
    tag_bias: Optional[Sequence[float]] = None,
    jobs: int = 1,
) -> Iterator[Trace]:
    """Order-preserving map of ``correct_sentence`` over ``sentences``."""
    if jobs <= 1:
        for x in sentences:
            yield correct_sentence(det, lm, x, confusion, beam, tag_bias)[1]
        return
    with multiprocessing.Pool(jobs, _init, (det, lm, confusion, beam, tag_bias)) as pool:
        yield from pool.imap(_work, sentences, chunksize=32)


def correct_corpus(
    det: DetectorModel,
    lm: CharLM,
    in_path: PathLike,
    out_path: PathLike,
    confusion: Optional[ConfusionSet] = None,
    beam: int = 1,
    tag_bias: Optional[Sequence[float]] = None,
    jobs: int = 1,
    trace_path: Optional[PathLike] = None,
) -> dict:
    """Correct a corpus file into ``source<TAB>corrected`` lines.

    Returns summary counts: sentences processed, sentences changed, masks
    filled and per-class tag counts.
    """
    tags: Counter = Counter({t.name.lower(): 0 for t in Tag})
    n = changed = masks = 0
    trace_fh = open(trace_path, "w", encoding="utf-8", newline="\n") if trace_path else None
    try:
        with open(out_path, "w", encoding="utf-8", newline="\n") as out:
            for tr in correct_many(det, lm, read_sources(in_path), confusion, beam, tag_bias, jobs):
                out.write(f"{tr.source}\t{tr.output}\n")
                if trace_fh is not None:
                    trace_fh.write(json.dumps(tr.to_json(), ensure_ascii=False) + "\n")
                n += 1
                changed += tr.output != tr.source
                masks += tr.n_masks
                tags.update(t.name.lower() for t in _effective(tr.tags))
    finally:
        if trace_fh is not None:
            trace_fh.close()
    return {"sentences": n, "changed": changed, "masks_filled": masks, "tags": dict(tags)}


def _effective(tags: Sequence[Tag]) -> List[Tag]:
    # the end slot only distinguishes missing from keep
    end = tags[-1] if tags[-1] is Tag.MISSING else Tag.KEEP
    return list(tags[:-1]) + [end]
