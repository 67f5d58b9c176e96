import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from detcor.core import Action, Mask, SentencePair, Tag, TokenLabel, labels_from_tags
from detcor.modlogic import OracleError, oracle_fill, rewrite

K = TokenLabel()
MIS = TokenLabel(0, Action.MISTAKEN)
RED = TokenLabel(0, Action.REDUNDANT)


def test_all_keep_is_identity():
    out = rewrite("abc", (K,) * 4)
    assert out.render() == "abc" and out.n_masks == 0


def test_mistaken_becomes_mask():
    out = rewrite("abc", (K, MIS, K, K))
    assert out.render("_") == "a_c"
    (_, m), = out.masks
    assert (m.source_index, m.kind, m.original) == (1, "mistaken", "b")


def test_missing_inserts_mask_before_token():
    out = rewrite("abc", (K, TokenLabel(1), K, K))
    assert out.render("_") == "a_bc"
    (k, m), = out.masks
    assert k == 1 and (m.source_index, m.kind) == (1, "missing")


def test_redundant_is_dropped():
    out = rewrite("abc", (K, RED, K, K))
    assert out.render() == "ac" and out.n_masks == 0


def test_end_slot_insertions():
    out = rewrite("ab", (K, K, TokenLabel(2)))
    assert out.render("_") == "ab__"
    assert all(m.source_index == 2 for _, m in out.masks)


def test_label_count_mismatch():
    with pytest.raises(ValueError):
        rewrite("abc", (K,) * 3)


def test_oracle_fill_examples():
    assert oracle_fill(rewrite("abc", (K,) * 4), SentencePair("abc", "abc")) == "abc"
    assert oracle_fill(rewrite("axc", (K, MIS, K, K)), SentencePair("axc", "abc")) == "abc"
    assert oracle_fill(rewrite("ac", (K, TokenLabel(1), K)), SentencePair("ac", "abc")) == "abc"


def test_oracle_fill_rejects_inconsistent_provenance():
    with pytest.raises(OracleError):
        oracle_fill(rewrite("abc", (K, MIS, K, K)), SentencePair("abc", "abc"))


labels_strategy = st.builds(
    TokenLabel, st.integers(0, 3), st.sampled_from(list(Action))
)


@st.composite
def sentence_and_labels(draw):
    s = draw(st.text(alphabet="abcdxy", max_size=12))
    labels = draw(st.lists(labels_strategy, min_size=len(s), max_size=len(s)))
    end = draw(st.integers(0, 3))
    return s, tuple(labels) + (TokenLabel(end),)


@settings(max_examples=300)
@given(sentence_and_labels())
def test_length_law_and_order(sl):
    s, labels = sl
    out = rewrite(s, labels)
    n_red = sum(lab.action is Action.REDUNDANT for lab in labels)
    n_mis = sum(lab.action is Action.MISTAKEN for lab in labels)
    n_ins = sum(lab.insert_before for lab in labels)
    assert len(out) == len(s) + n_ins - n_red
    assert out.n_masks == n_ins + n_mis
    kept = "".join(ch for ch, lab in zip(s, labels) if lab.action is Action.KEEP)
    assert out.fixed() == kept


@settings(max_examples=200)
@given(st.text(alphabet="abcd", max_size=10), st.data())
def test_four_class_case_by_case(s, data):
    tags = data.draw(st.lists(st.sampled_from(list(Tag)), min_size=len(s) + 1, max_size=len(s) + 1))
    out = rewrite(s, labels_from_tags(tags))
    expected = []
    for ch, t in zip(s, tags):
        if t is Tag.KEEP:
            expected.append(ch)
        elif t is Tag.MISTAKEN:
            expected.append("_")
        elif t is Tag.MISSING:
            expected += ["_", ch]
    if tags[-1] is Tag.MISSING:
        expected.append("_")
    assert out.render("_") == "".join(expected)
