"""Unit-cost Levenshtein alignment, gold-label derivation and edit extraction."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .core import Action, Edit, Labels, SentencePair, TokenLabel


class OpKind(enum.Enum):
    MATCH = "M"
    SUBSTITUTE = "S"
    DELETE = "D"
    INSERT = "I"


@dataclass(frozen=True)
class AlignmentOp:
    kind: OpKind
    src: Optional[int]  # None for Insert
    tgt: Optional[int]  # None for Delete

    @property
    def cost(self) -> int:
        return 0 if self.kind is OpKind.MATCH else 1


def prefix_table(a: str, b: str) -> List[List[int]]:
    """``P[i][j]`` = edit distance between ``a[:i]`` and ``b[:j]``."""
    m = len(b)
    prev = list(range(m + 1))
    table = [prev]
    for i, ai in enumerate(a, 1):
        row = [i] * (m + 1)
        for j in range(1, m + 1):
            row[j] = min(prev[j - 1] + (ai != b[j - 1]), prev[j] + 1, row[j - 1] + 1)
        table.append(row)
        prev = row
    return table


def suffix_table(a: str, b: str) -> List[List[int]]:
    """``S[i][j]`` = edit distance between ``a[i:]`` and ``b[j:]``."""
    rev = prefix_table(a[::-1], b[::-1])
    return [row[::-1] for row in rev[::-1]]


def edit_distance(a: str, b: str) -> int:
    return prefix_table(a, b)[len(a)][len(b)]


def align(source: str, target: str) -> List[AlignmentOp]:
    """Minimal-cost alignment with a deterministic tie-break.

    The trace walks the suffix-distance table from the start of both
    strings and, among optimal moves, prefers Match > Substitute > Delete
    > Insert. Redundant duplicates therefore lose their *later* copy.
    """
    S = suffix_table(source, target)
    n, m = len(source), len(target)
    i = j = 0
    ops: List[AlignmentOp] = []
    while i < n or j < m:
        here = S[i][j]
        if i < n and j < m:
            if source[i] == target[j] and S[i + 1][j + 1] == here:
                ops.append(AlignmentOp(OpKind.MATCH, i, j))
                i, j = i + 1, j + 1
                continue
            if source[i] != target[j] and S[i + 1][j + 1] + 1 == here:
                ops.append(AlignmentOp(OpKind.SUBSTITUTE, i, j))
                i, j = i + 1, j + 1
                continue
        if i < n and S[i + 1][j] + 1 == here:
            ops.append(AlignmentOp(OpKind.DELETE, i, None))
            i += 1
            continue
        ops.append(AlignmentOp(OpKind.INSERT, None, j))
        j += 1
    return ops


def labels_from_alignment(n: int, ops: List[AlignmentOp]) -> Tuple[Labels, int]:
    pending = 0
    ins = [0] * (n + 1)
    act = [Action.KEEP] * n
    for op in ops:
        if op.kind is OpKind.INSERT:
            pending += 1
            continue
        i = op.src
        ins[i] = pending
        pending = 0
        if op.kind is OpKind.SUBSTITUTE:
            act[i] = Action.MISTAKEN
        elif op.kind is OpKind.DELETE:
            act[i] = Action.REDUNDANT
    ins[n] = pending
    conflicts = 0
    for i in range(n):
        if ins[i] and act[i] is not Action.KEEP:
            # single label per token: the action wins
            ins[i] = 0
            conflicts += 1
    labels = tuple(TokenLabel(ins[i], act[i]) for i in range(n)) + (TokenLabel(ins[n]),)
    return labels, conflicts


def derive_labels(pair: SentencePair) -> Tuple[Labels, int]:
    """Gold labels (n + 1 entries) for a pair, plus the conflict count."""
    return labels_from_alignment(len(pair.source), align(pair.source, pair.target))


def extract_edits(source: str, target: str, merge: bool = True) -> List[Edit]:
    """Span edits turning ``source`` into ``target``.

    With ``merge`` on, runs of adjacent non-match operations become one
    edit; otherwise every operation is its own edit.
    """
    ops = align(source, target)
    edits: List[Edit] = []
    run: List[AlignmentOp] = []
    pos = 0  # source offset of the next op

    def flush(run, start):
        end = start + sum(op.kind is not OpKind.INSERT for op in run)
        repl = "".join(target[op.tgt] for op in run if op.kind is not OpKind.DELETE)
        edits.append(Edit.make(start, end, repl))

    run_start = 0
    for op in ops:
        if op.kind is OpKind.MATCH:
            if run:
                flush(run, run_start)
                run = []
            pos += 1
            continue
        if not merge:
            flush([op], pos)
        else:
            if not run:
                run_start = pos
            run.append(op)
        if op.kind is not OpKind.INSERT:
            pos += 1
    if run:
        flush(run, run_start)
    return edits
