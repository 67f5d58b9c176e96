import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from detcor.align import extract_edits
from detcor.core import CorpusError, Edit, EditType, SentencePair, Tag, apply_edits
from detcor.evaluate import (
    EvalReport,
    errant_corpus,
    errant_score,
    eval_sentence_level,
    f_beta,
    format_m2_block,
    m2_block_from_pair,
    m2_corpus,
    m2_score,
    maxmatch,
    read_m2,
    write_m2,
    write_report,
)

from oracles import alignment_edits, brute_maxmatch_tp, minimal_alignments


def ref_f(p, r, beta):
    if p == 0 and r == 0:
        return 0.0
    return (1 + beta**2) * p * r / (beta**2 * p + r)


def test_f_beta_closed_form_values():
    assert f_beta(0.737, 0.732, 1) == pytest.approx(2 * 0.737 * 0.732 / (0.737 + 0.732), abs=1e-15)
    # 1.25 * 0.0223 / 0.15575 and 1.25 * 0.06545113 / 0.294575
    assert f_beta(0.223, 0.100, 0.5) == pytest.approx(0.02787500 / 0.15575, rel=1e-12)
    assert f_beta(0.2971, 0.2203, 0.5) == pytest.approx(0.0818139125 / 0.294575, rel=1e-12)
    assert f_beta(0, 0, 0.5) == 0.0


@pytest.mark.parametrize("p,r,beta,printed,h", [
    (73.7, 73.2, 1, 73.5, 0.05),
    (22.3, 10, 0.5, 17.9, 0.05),
    (29.71, 22.03, 0.5, 27.77, 0.005),
])
def test_printed_scores_within_rounding_of_printed_inputs(p, r, beta, printed, h):
    # F is increasing in both P and R, so rounding of the inputs bounds the output
    lo = f_beta(p - h, r - h, beta)
    hi = f_beta(p + h, r + h, beta)
    assert lo - h <= printed <= hi + h


@settings(max_examples=200)
@given(st.floats(0, 1), st.floats(0.1, 4))
def test_equal_precision_recall(x, beta):
    assert f_beta(x, x, beta) == pytest.approx(x, abs=1e-12)


@settings(max_examples=200)
@given(st.floats(0, 1, allow_subnormal=False), st.floats(0, 1, allow_subnormal=False), st.floats(0.1, 4))
def test_f_beta_matches_reference_and_is_bounded(p, r, beta):
    f = f_beta(p, r, beta)
    assert 0 <= f <= 1 + 1e-12
    assert f == pytest.approx(ref_f(p, r, beta), abs=1e-12)
    assert min(p, r) - 1e-12 <= f <= max(p, r) + 1e-12


# sentence level

PAIRS = [SentencePair("axc", "abc"), SentencePair("ayc", "abc")]


def test_sentence_level_perfect():
    det, cor = eval_sentence_level(PAIRS, ["abc", "abc"])
    assert (cor.precision, cor.recall, cor.f_score) == (1.0, 1.0, 1.0)
    assert det.f_score == 1.0


def test_sentence_level_copy():
    det, cor = eval_sentence_level(PAIRS, ["axc", "ayc"])
    assert cor.recall == 0 and cor.proposed == 0 and cor.f_score == 0
    assert det.proposed == 0


def test_sentence_level_half_fixed():
    _, cor = eval_sentence_level(PAIRS, ["abc", "ayc"])
    assert cor.precision == 1.0 and cor.recall == 0.5
    assert cor.f_score == pytest.approx(2 / 3)


def test_sentence_level_detection_needs_exact_classes():
    keep, mis = Tag.KEEP, Tag.MISTAKEN
    pairs = [SentencePair("axc", "abc"), SentencePair("abc", "abc")]
    good = [[keep, mis, keep, keep], [keep] * 4]
    det, _ = eval_sentence_level(pairs, ["abc", "abc"], good)
    assert (det.tp, det.proposed, det.gold) == (1, 1, 1)
    wrong_class = [[keep, Tag.REDUNDANT, keep, keep], [keep, keep, mis, keep]]
    det, _ = eval_sentence_level(pairs, ["abc", "abc"], wrong_class)
    assert (det.tp, det.proposed, det.gold) == (0, 2, 1)


def test_sentence_level_count_mismatch():
    with pytest.raises(ValueError):
        eval_sentence_level(PAIRS, ["abc"])


# M2

GOLD2 = [Edit.make(1, 2, "x"), Edit.make(3, 4, "y")]


def test_m2_perfect():
    hyp = apply_edits("abcd", GOLD2)
    r = m2_score("abcd", hyp, [GOLD2])
    assert (r.precision, r.recall, r.f_score) == (1.0, 1.0, 1.0)


def test_m2_copy_baseline():
    r = m2_score("abcd", "abcd", [GOLD2])
    assert r.recall == 0 and r.f_score == 0 and r.precision == 1.0 and r.proposed == 0


def test_m2_one_of_two():
    r = m2_score("abcd", "axcd", [GOLD2])
    assert (r.precision, r.recall) == (1.0, 0.5)
    assert r.f_score == pytest.approx(1.25 * 0.5 / (0.25 + 0.5))


def test_m2_empty_gold_and_no_change():
    r = m2_score("abc", "abc", [[]])
    assert (r.precision, r.recall, r.f_score) == (1.0, 1.0, 1.0)


def test_m2_finds_merged_gold_edit():
    # gold treats a two-character rewrite as one edit; the lattice must find it
    gold = [Edit.make(1, 3, "xy")]
    r = m2_score("abcd", "axyd", [gold])
    assert r.tp == 1 and r.proposed == 1
    # and split gold edits are found on the same hypothesis
    r = m2_score("abcd", "axyd", [[Edit.make(1, 2, "x"), Edit.make(2, 3, "y")]])
    assert r.tp == 2 and r.proposed == 2


def test_m2_multi_annotator_picks_best():
    sets = [[Edit.make(1, 2, "x")], [Edit.make(1, 2, "z")]]
    r = m2_score("abc", "azc", sets)
    assert r.f_score == 1.0 and r.per_sentence[0]["annotator"] == 1


def test_m2_rejects_out_of_range_gold():
    with pytest.raises(ValueError):
        m2_score("abc", "abc", [[Edit.make(2, 5, "x")]])


def test_corpus_counts_are_sums():
    srcs = ["abcd", "abc", "ab"]
    hyps = ["axcd", "abc", "b"]
    gold = [[GOLD2], [[Edit.make(0, 1, "z")]], [[Edit.make(0, 1, "")]]]
    total = m2_corpus(srcs, hyps, gold)
    parts = [m2_score(s, h, g) for s, h, g in zip(srcs, hyps, gold)]
    assert total.tp == sum(p.tp for p in parts)
    assert total.proposed == sum(p.proposed for p in parts)
    assert total.gold == sum(p.gold for p in parts)


short = st.text(alphabet="abcd", max_size=8)


@st.composite
def m2_case(draw):
    src, hyp, other = draw(short), draw(short), draw(short)
    _, aligns = minimal_alignments(src, hyp)
    pool = set(alignment_edits(hyp, aligns[draw(st.integers(0, len(aligns) - 1))]))
    pool |= {e.key for e in extract_edits(src, hyp)}
    pool |= {e.key for e in extract_edits(src, other)}
    pool = sorted(pool)
    gold = draw(st.lists(st.sampled_from(pool), max_size=3, unique=True)) if pool else []
    return src, hyp, gold


@settings(max_examples=300, deadline=None)
@given(m2_case())
def test_maxmatch_equals_brute_force(case):
    src, hyp, gold_keys = case
    gold = [Edit.make(*k) for k in gold_keys]
    tp, proposed, edits = maxmatch(src, hyp, gold)
    assert tp == brute_maxmatch_tp(src, hyp, gold_keys)
    assert apply_edits(src, edits) == hyp and proposed == len(edits)
    # never worse than any single minimal alignment with per-op edits
    _, aligns = minimal_alignments(src, hyp)
    for ops in aligns:
        assert tp >= len(set(alignment_edits(hyp, ops)) & set(gold_keys))


# ERRANT-style

def test_errant_perfect():
    r = errant_score("abcd", "axcy", GOLD2)
    assert r.f_score == 1.0


def test_errant_two_proposed_one_correct():
    r = errant_score("abcd", "axcy", [Edit.make(1, 2, "x")])
    assert (r.precision, r.recall) == (0.5, 1.0)
    assert r.f_score == pytest.approx(1.25 * 0.5 / (0.125 + 1))


def test_errant_type_sensitivity():
    gold = [Edit(1, 2, "x", EditType.REPLACEMENT)]
    assert errant_score("abc", "axc", gold, type_sensitive=True).tp == 1
    # same span and string under a different type; bypasses the consistency check
    bogus = Edit.make(1, 2, "x")
    object.__setattr__(bogus, "etype", EditType.UNNECESSARY)
    assert errant_score("abc", "axc", [bogus], type_sensitive=True).tp == 0
    assert errant_score("abc", "axc", [bogus], type_sensitive=False).tp == 1


def test_errant_corpus_multiple_annotators():
    r = errant_corpus(["abc"], ["azc"], [[[Edit.make(1, 2, "x")], [Edit.make(1, 2, "z")]]])
    assert r.f_score == 1.0


# files and reports

def test_m2_block_format_is_exact():
    text = format_m2_block("abc", [[Edit.make(1, 2, "x"), Edit.make(3, 3, "d")], []])
    assert text == (
        "S a b c\n"
        "A 1 2|||R|||x|||REQUIRED|||-NONE-|||0\n"
        "A 3 3|||M|||d|||REQUIRED|||-NONE-|||0\n"
        "A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||1\n"
    )
    assert format_m2_block("ab", [[Edit.make(0, 1, "")]]).splitlines()[1] == (
        "A 0 1|||U||||||REQUIRED|||-NONE-|||0"
    )


def test_m2_file_round_trip(tmp_path):
    blocks = [
        ("abc", [[Edit.make(1, 2, "x")], [Edit.make(0, 0, "z"), Edit.make(2, 3, "")]]),
        ("中文", [[]]),
        ("xy", [[Edit.make(0, 2, "yx")]]),
    ]
    path = tmp_path / "g.m2"
    write_m2(blocks, path)
    got = read_m2(path)
    assert [b.source for b in got] == ["abc", "中文", "xy"]
    assert [b.edit_sets() for b in got] == [sets for _, sets in blocks]
    # writing again gives the same bytes
    path2 = tmp_path / "g2.m2"
    write_m2([(b.source, b.edit_sets()) for b in got], path2)
    assert path.read_bytes() == path2.read_bytes()


def test_m2_reader_validates_spans(tmp_path):
    path = tmp_path / "bad.m2"
    path.write_text("S a b\nA 1 4|||R|||x|||REQUIRED|||-NONE-|||0\n", encoding="utf-8")
    with pytest.raises(CorpusError, match=":2:"):
        read_m2(path)


def test_m2_block_from_pair():
    src, sets = m2_block_from_pair(SentencePair("axyd", "abcd"))
    assert src == "axyd" and sets == [[Edit.make(1, 3, "bc")]]


def test_report_json_and_table(tmp_path):
    rep = EvalReport.from_counts(3, 4, 6, 0.5)
    assert rep.f_score == pytest.approx(ref_f(0.75, 0.5, 0.5))
    path = tmp_path / "r.json"
    write_report({"correction": rep}, path)
    obj = json.loads(path.read_text())
    assert obj["correction"]["tp"] == 3 and math.isclose(obj["correction"]["recall"], 0.5)
    assert "F0.5" in rep.table("correction")
    empty = EvalReport.from_counts(0, 0, 0, 1.0, empty_is_perfect=False)
    assert (empty.precision, empty.recall, empty.f_score) == (0.0, 0.0, 0.0)
