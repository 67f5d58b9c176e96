"""Modification logic: turn a source sentence plus labels into a masked sequence."""

from __future__ import annotations

from typing import List, Sequence

from .align import OpKind, align
from .core import Action, Mask, MaskedSequence, SentencePair, Slot, TokenLabel, check_labels


class OracleError(ValueError):
    pass


def rewrite(source: str, labels: Sequence[TokenLabel]) -> MaskedSequence:
    """Rewrite ``source`` according to ``labels`` (n + 1 entries).

    Each token first emits ``insert_before`` missing-masks, then itself
    (keep), a mistaken-mask, or nothing (redundant). The end slot emits
    its trailing missing-masks.
    """
    check_labels(source, labels)
    slots: List[Slot] = []
    for i, (ch, lab) in enumerate(zip(source, labels)):
        slots.extend(Mask(i, "missing") for _ in range(lab.insert_before))
        if lab.action is Action.KEEP:
            slots.append(ch)
        elif lab.action is Action.MISTAKEN:
            slots.append(Mask(i, "mistaken", ch))
    n = len(source)
    slots.extend(Mask(n, "missing") for _ in range(labels[n].insert_before))
    return MaskedSequence(tuple(slots), source)


def oracle_fill(masked: MaskedSequence, pair: SentencePair) -> str:
    """Fill masks with the gold characters recovered from the alignment.

    Test oracle only: assumes ``masked`` came from ``pair.source`` and
    labels derived from the same alignment.
    """
    if masked.source != pair.source:
        raise OracleError("masked sequence was not built from this source")
    n = len(pair.source)
    inserted: List[List[str]] = [[] for _ in range(n + 1)]
    substituted = {}
    pending: List[str] = []
    for op in align(pair.source, pair.target):
        if op.kind is OpKind.INSERT:
            pending.append(pair.target[op.tgt])
            continue
        inserted[op.src] = pending
        pending = []
        if op.kind is OpKind.SUBSTITUTE:
            substituted[op.src] = pair.target[op.tgt]
    inserted[n] = pending

    used = [0] * (n + 1)
    out = []
    for slot in masked.slots:
        if not isinstance(slot, Mask):
            out.append(slot)
            continue
        i = slot.source_index
        if slot.kind == "mistaken":
            if i not in substituted:
                raise OracleError(f"no substitution at source index {i}")
            out.append(substituted[i])
        else:
            if used[i] >= len(inserted[i]):
                raise OracleError(f"no insertion left before source index {i}")
            out.append(inserted[i][used[i]])
            used[i] += 1
    return "".join(out)
