"""Scoring: sentence-level P/R/F, MaxMatch (M2) and ERRANT-style span scoring."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

from .align import derive_labels, extract_edits, prefix_table, suffix_table
from .core import (
    CorpusError,
    Edit,
    EditType,
    PathLike,
    SentencePair,
    Tag,
    _open_lines,
    tags_from_labels,
)

M2_SPAN_CAP = 4


def f_beta(p: float, r: float, beta: float = 1.0) -> float:
    b2 = beta * beta
    denom = b2 * p + r
    if denom == 0:
        return 0.0
    return (1 + b2) * p * r / denom


@dataclass
class EvalReport:
    precision: float
    recall: float
    f_score: float
    beta: float
    tp: int
    proposed: int
    gold: int
    per_sentence: List[dict] = field(default_factory=list)

    @classmethod
    def from_counts(cls, tp, proposed, gold, beta, empty_is_perfect=True, per_sentence=None):
        """Build a report from counts.

        With ``empty_is_perfect`` (the MaxMatch convention) nothing proposed
        gives P = 1 and nothing to find gives R = 1; otherwise both are 0.
        """
        default = 1.0 if empty_is_perfect else 0.0
        p = tp / proposed if proposed else default
        r = tp / gold if gold else default
        return cls(p, r, f_beta(p, r, beta), beta, tp, proposed, gold, per_sentence or [])

    def to_dict(self, diagnostics: bool = True) -> dict:
        d = asdict(self)
        if not diagnostics:
            d.pop("per_sentence")
        return d

    def table(self, title: str = "") -> str:
        head = f"{'':<12}{'TP':>7}{'Prop.':>7}{'Gold':>7}{'Prec.':>9}{'Rec.':>9}{'F' + format(self.beta, 'g'):>9}"
        row = (
            f"{title:<12}{self.tp:>7}{self.proposed:>7}{self.gold:>7}"
            f"{self.precision:>9.4f}{self.recall:>9.4f}{self.f_score:>9.4f}"
        )
        return head + "\n" + row


# --------------------------------------------------------------------------
# sentence level


def _norm_tags(tags: Sequence[Tag]) -> Tuple[Tag, ...]:
    tags = tuple(Tag(t) for t in tags)
    end = tags[-1] if tags[-1] is Tag.MISSING else Tag.KEEP
    return tags[:-1] + (end,)


def eval_sentence_level(
    pairs: Sequence[SentencePair],
    hypotheses: Sequence[str],
    predicted_tags: Optional[Sequence[Sequence[Tag]]] = None,
) -> Tuple[EvalReport, EvalReport]:
    """Sentence-level detection and correction reports (beta = 1).

    A sentence counts as detected only when its predicted four-class tags
    equal the gold tags exactly, and as corrected only when the hypothesis
    equals the target. Without ``predicted_tags`` the predictions are read
    off the alignment of source to hypothesis. Empty denominators give 0.
    """
    if len(pairs) != len(hypotheses):
        raise ValueError(f"{len(pairs)} gold pairs but {len(hypotheses)} hypotheses")
    if predicted_tags is not None and len(predicted_tags) != len(pairs):
        raise ValueError("predicted tag count differs from pair count")
    d_tp = d_prop = c_tp = c_prop = n_err = 0
    rows = []
    for k, (pair, hyp) in enumerate(zip(pairs, hypotheses)):
        erroneous = pair.source != pair.target
        gold = _norm_tags(tags_from_labels(derive_labels(pair)[0]))
        if predicted_tags is not None:
            pred = _norm_tags(predicted_tags[k])
            if len(pred) != len(pair.source) + 1:
                raise ValueError(f"sentence {k}: predicted tag count does not match source")
        else:
            pred = _norm_tags(tags_from_labels(derive_labels(SentencePair(pair.source, hyp))[0]))
        flagged = any(t is not Tag.KEEP for t in pred)
        detected = erroneous and pred == gold
        changed = hyp != pair.source
        corrected = erroneous and hyp == pair.target
        n_err += erroneous
        d_prop += flagged
        d_tp += detected
        c_prop += changed
        c_tp += corrected
        rows.append({"erroneous": erroneous, "flagged": flagged, "detected": detected,
                     "changed": changed, "corrected": corrected})
    det = EvalReport.from_counts(d_tp, d_prop, n_err, 1.0, empty_is_perfect=False, per_sentence=rows)
    cor = EvalReport.from_counts(c_tp, c_prop, n_err, 1.0, empty_is_perfect=False)
    return det, cor


# --------------------------------------------------------------------------
# M2 files


@dataclass
class M2Block:
    source: str
    annotations: Dict[int, List[Edit]]

    def edit_sets(self) -> List[List[Edit]]:
        if not self.annotations:
            return [[]]
        return [self.annotations[a] for a in sorted(self.annotations)]


def _check_edits(source: str, edits: Sequence[Edit]) -> None:
    for e in edits:
        if e.etype is EditType.NOOP:
            continue
        if not 0 <= e.start <= e.end <= len(source):
            raise ValueError(f"edit span ({e.start}, {e.end}) outside source of length {len(source)}")


def _m2_chars(text: str) -> str:
    if any(ch.isspace() for ch in text):
        raise ValueError("character-level M2 cannot represent whitespace characters")
    return " ".join(text)


def format_m2_block(source: str, edit_sets: Sequence[Sequence[Edit]]) -> str:
    lines = ["S " + _m2_chars(source)]
    for annot, edits in enumerate(edit_sets):
        real = [e for e in edits if e.etype is not EditType.NOOP]
        if not real:
            lines.append(f"A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||{annot}")
        for e in real:
            lines.append(
                f"A {e.start} {e.end}|||{e.etype.value}|||{_m2_chars(e.replacement)}"
                f"|||REQUIRED|||-NONE-|||{annot}"
            )
    return "\n".join(lines) + "\n"


def write_m2(blocks: Sequence[Tuple[str, Sequence[Sequence[Edit]]]], path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for source, sets in blocks:
            fh.write(format_m2_block(source, sets) + "\n")


def m2_block_from_pair(pair: SentencePair) -> Tuple[str, List[List[Edit]]]:
    return pair.source, [extract_edits(pair.source, pair.target, merge=True)]


def read_m2(path: PathLike) -> List[M2Block]:
    blocks: List[M2Block] = []
    current: Optional[M2Block] = None
    for lineno, line in _open_lines(path):
        if not line.strip():
            current = None
            continue
        if line.startswith("S"):
            toks = line[2:].split(" ") if len(line) > 2 else []
            if any(len(t) != 1 for t in toks):
                raise CorpusError(f"{path}:{lineno}: expected one character per token")
            current = M2Block("".join(toks), {})
            blocks.append(current)
        elif line.startswith("A "):
            if current is None:
                raise CorpusError(f"{path}:{lineno}: annotation outside a sentence block")
            fields = line[2:].split("|||")
            if len(fields) != 6:
                raise CorpusError(f"{path}:{lineno}: expected 6 '|||' fields")
            try:
                start, end = (int(x) for x in fields[0].split())
                annot = int(fields[5])
            except ValueError:
                raise CorpusError(f"{path}:{lineno}: bad span or annotator id") from None
            edits = current.annotations.setdefault(annot, [])
            if fields[1] == "noop" or start < 0:
                continue
            corr = "" if fields[2] == "-NONE-" else fields[2].replace(" ", "")
            try:
                edit = Edit.make(start, end, corr)
                _check_edits(current.source, [edit])
            except ValueError as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from None
            edits.append(edit)
        else:
            raise CorpusError(f"{path}:{lineno}: unexpected line")
    return blocks


# --------------------------------------------------------------------------
# MaxMatch


def _lattice_edges(source: str, hyp: str, cap: int = M2_SPAN_CAP):
    """Nodes on minimal alignment paths and the edges between them.

    Returns ``(nodes, out)`` where ``out[u]`` lists ``(v, edit_key | None)``.
    ``None`` marks a match edge; an edit edge exists from u to v when a
    chain of optimal operations leads from u to v starting and ending with
    a non-match operation and spanning at most ``cap`` characters on
    either side.
    """
    n, m = len(source), len(hyp)
    P = prefix_table(source, hyp)
    S = suffix_table(source, hyp)
    D = P[n][m]

    def moves(i, j):
        base = P[i][j]
        out = []
        if i < n and j < m:
            same = source[i] == hyp[j]
            if base + (not same) + S[i + 1][j + 1] == D:
                out.append((same, i + 1, j + 1))
        if i < n and base + 1 + S[i + 1][j] == D:
            out.append((False, i + 1, j))
        if j < m and base + 1 + S[i][j + 1] == D:
            out.append((False, i, j + 1))
        return out

    nodes = [(i, j) for i in range(n + 1) for j in range(m + 1) if P[i][j] + S[i][j] == D]
    out: Dict[Tuple[int, int], list] = {}
    for (i0, j0) in nodes:
        edges = []
        stack = []
        for is_match, i, j in moves(i0, j0):
            if is_match:
                edges.append(((i, j), None))
            else:
                stack.append((i, j, True))
        # segments may contain unchanged characters but must not end on one
        seen = set()
        ends = set()
        while stack:
            i, j, after_edit = stack.pop()
            if (i, j, after_edit) in seen:
                continue
            seen.add((i, j, after_edit))
            if after_edit:
                ends.add((i, j))
            for is_match, i2, j2 in moves(i, j):
                if max(i2 - i0, j2 - j0) <= cap:
                    stack.append((i2, j2, not is_match))
        for (i, j) in sorted(ends):
            edges.append(((i, j), (i0, i, hyp[j0:j])))
        out[(i0, j0)] = edges
    return nodes, out


def maxmatch(source: str, hyp: str, gold: Sequence[Edit], cap: int = M2_SPAN_CAP):
    """Best system edit set on the edit lattice.

    Maximizes the number of edits identical to a gold edit, then
    minimizes the number of unmatched system edits. Each gold edit is
    credited at most once. Returns ``(tp, proposed, system_edits)``.
    """
    _check_edits(source, gold)
    gold_keys = {e.key for e in gold if e.etype is not EditType.NOOP}
    nodes, out = _lattice_edges(source, hyp, cap)
    order = sorted(nodes, key=lambda v: (v[0] + v[1], v[0]))
    # state: (node, gold insertions already credited at this column)
    best: Dict[Tuple[Tuple[int, int], FrozenSet], Tuple[Tuple[int, int], object]] = {
        ((0, 0), frozenset()): ((0, 0), None)
    }
    by_node: Dict[Tuple[int, int], List[FrozenSet]] = {(0, 0): [frozenset()]}
    for u in order:
        for credited in by_node.get(u, []):
            (tp, negfp), _ = best[(u, credited)]
            for v, key in out.get(u, []):
                if key is None:
                    state, val = (v, frozenset()), (tp, negfp)
                else:
                    is_ins = key[0] == key[1]
                    hit = key in gold_keys and not (is_ins and key in credited)
                    nxt = (credited | {key}) if (is_ins and hit) else (credited if is_ins else frozenset())
                    state = (v, nxt)
                    val = (tp + 1, negfp) if hit else (tp, negfp - 1)
                if state not in best or val > best[state][0]:
                    if state not in best:
                        by_node.setdefault(v, []).append(state[1])
                    best[state] = (val, (u, credited, key))
    end = (len(source), len(hyp))
    credited = max(by_node[end], key=lambda c: best[(end, c)][0])
    tp, negfp = best[(end, credited)][0]
    edits = []
    state = (end, credited)
    while best[state][1] is not None:
        u, c, key = best[state][1]
        if key is not None:
            edits.append(Edit.make(*key))
        state = (u, c)
    edits.reverse()
    return tp, tp - negfp, edits


def _pick_annotator(stats, totals, beta):
    """Index of the annotator maximizing corpus F given running totals."""
    def score(k):
        tp, prop, gold = stats[k]
        r = EvalReport.from_counts(totals[0] + tp, totals[1] + prop, totals[2] + gold, beta)
        return (r.f_score, tp, -gold, -k)

    return max(range(len(stats)), key=score)


def m2_corpus(
    sources: Sequence[str],
    hypotheses: Sequence[str],
    gold_edit_sets: Sequence[Sequence[Sequence[Edit]]],
    beta: float = 0.5,
) -> EvalReport:
    """MaxMatch over a corpus; per sentence the best-scoring annotator is used."""
    if not (len(sources) == len(hypotheses) == len(gold_edit_sets)):
        raise ValueError("sources, hypotheses and gold sets differ in length")
    totals = [0, 0, 0]
    rows = []
    for src, hyp, sets in zip(sources, hypotheses, gold_edit_sets):
        sets = list(sets) or [[]]
        results = [maxmatch(src, hyp, g) for g in sets]
        stats = [
            (tp, prop, sum(e.etype is not EditType.NOOP for e in g))
            for (tp, prop, _), g in zip(results, sets)
        ]
        k = _pick_annotator(stats, totals, beta)
        for a in range(3):
            totals[a] += stats[k][a]
        rows.append({
            "annotator": k, "tp": stats[k][0], "proposed": stats[k][1], "gold": stats[k][2],
            "system": [[e.start, e.end, e.replacement] for e in results[k][2]],
        })
    return EvalReport.from_counts(*totals, beta, per_sentence=rows)


def m2_score(
    source: str, hypothesis: str, gold_edit_sets: Sequence[Sequence[Edit]], beta: float = 0.5
) -> EvalReport:
    return m2_corpus([source], [hypothesis], [gold_edit_sets], beta)


# --------------------------------------------------------------------------
# ERRANT-style


def _errant_counts(source, hyp, gold, type_sensitive):
    _check_edits(source, gold)
    system = extract_edits(source, hyp, merge=True)
    gold = [e for e in gold if e.etype is not EditType.NOOP]
    if type_sensitive:
        gkeys = {(e.key, e.etype) for e in gold}
        tp = sum((e.key, e.etype) in gkeys for e in system)
    else:
        gkeys = {e.key for e in gold}
        tp = sum(e.key in gkeys for e in system)
    return tp, len(system), len(gold), system


def errant_corpus(
    sources: Sequence[str],
    hypotheses: Sequence[str],
    gold_edit_sets: Sequence[Sequence[Sequence[Edit]]],
    beta: float = 0.5,
    type_sensitive: bool = False,
) -> EvalReport:
    if not (len(sources) == len(hypotheses) == len(gold_edit_sets)):
        raise ValueError("sources, hypotheses and gold sets differ in length")
    totals = [0, 0, 0]
    rows = []
    for src, hyp, sets in zip(sources, hypotheses, gold_edit_sets):
        sets = list(sets) or [[]]
        results = [_errant_counts(src, hyp, g, type_sensitive) for g in sets]
        k = _pick_annotator([r[:3] for r in results], totals, beta)
        for a in range(3):
            totals[a] += results[k][a]
        rows.append({
            "annotator": k, "tp": results[k][0], "proposed": results[k][1], "gold": results[k][2],
            "system": [[e.start, e.end, e.replacement, e.etype.value] for e in results[k][3]],
        })
    return EvalReport.from_counts(*totals, beta, per_sentence=rows)


def errant_score(
    source: str,
    hypothesis: str,
    gold: Sequence[Edit],
    beta: float = 0.5,
    type_sensitive: bool = False,
) -> EvalReport:
    return errant_corpus([source], [hypothesis], [[gold]], beta, type_sensitive)


def write_report(reports: Mapping[str, EvalReport], path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({k: r.to_dict() for k, r in reports.items()}, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
