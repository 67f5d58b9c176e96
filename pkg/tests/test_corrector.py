import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from detcor.core import BOS, EOS, Mask, MaskedSequence
from detcor.corrector import (
    CharLM,
    ConfusionSet,
    ModelFormatError,
    fill,
    read_confusion,
    score_candidate,
    train_lm,
    write_confusion,
)


def masked(*slots, source=""):
    return MaskedSequence(tuple(slots), source)


@pytest.fixture(scope="module")
def abc_lm():
    return train_lm(["abc"] * 100)


def test_bigram_count():
    lm = train_lm(["ab"])
    assert lm.bigrams["ab"] == 1


def test_conditional_probability_closed_form(abc_lm):
    # V = {a, b, c, BOS, EOS}; (100 + k) / (100 + kV)
    expected = (100 + 0.01) / (100 + 0.01 * 5)
    assert abc_lm.prob("c", "ab") == pytest.approx(expected, rel=1e-12)
    assert expected > 0.999


def test_vocabulary(abc_lm):
    assert set(abc_lm.vocab) == {"a", "b", "c", BOS, EOS}
    assert BOS not in abc_lm.candidates and EOS not in abc_lm.candidates


def test_empty_corpus_rejected():
    with pytest.raises(ValueError):
        train_lm([])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.text(alphabet="abcde", min_size=0, max_size=6), min_size=1, max_size=8),
       st.text(alphabet="abcdexy", min_size=2, max_size=2))
def test_distributions_normalize(corpus, hist):
    lm = train_lm(corpus)
    assert math.fsum(lm.prob(c, hist) for c in lm.vocab) == pytest.approx(1.0, abs=1e-9)


def test_score_prefers_observed_continuation(abc_lm):
    assert score_candidate(abc_lm, "ab", "c") > score_candidate(abc_lm, "ab", "a")


def test_symmetric_corpus_scores_tie():
    lm = train_lm(["ab", "ac"] * 5)
    assert score_candidate(lm, "a", "b") == score_candidate(lm, "a", "c")
    assert score_candidate(lm, "a", "b", EOS) == score_candidate(lm, "a", "c", EOS)


def test_unseen_context_has_finite_floor(abc_lm):
    s = score_candidate(abc_lm, "cc", "a", "b")
    assert math.isfinite(s)
    # floor: two factors of k / (k V)
    assert s == pytest.approx(2 * math.log(1 / 5), rel=1e-12)


def test_candidate_must_be_in_vocabulary(abc_lm):
    with pytest.raises(KeyError):
        score_candidate(abc_lm, "ab", "z")


def test_fill_no_masks_is_identity(abc_lm):
    assert fill(abc_lm, masked("x", "y", "z")) == "xyz"


def test_fill_completes_trigram(abc_lm):
    assert fill(abc_lm, masked("a", "b", Mask(2, "missing"))) == "abc"


def test_confusion_restricts_candidates(abc_lm):
    conf = ConfusionSet({"x": {"b"}})
    m = masked("a", Mask(1, "mistaken", "x"), "c", source="axc")
    assert fill(abc_lm, m, conf) == "abc"
    conf_c = ConfusionSet({"x": {"c"}})
    assert fill(abc_lm, m, conf_c) == "acc"


def test_empty_confusion_entry_falls_back(abc_lm):
    conf = ConfusionSet({"q": {"z"}})  # no entry for 'x'; 'z' unknown anyway
    m = masked("a", Mask(1, "mistaken", "x"), "c")
    assert fill(abc_lm, m, conf) == "abc"
    m2 = masked("a", Mask(1, "mistaken", "q"), "c")
    assert fill(abc_lm, m2, conf) == "abc"  # 'z' not in vocabulary -> top-K


def test_confusion_set_drops_self_maps():
    conf = ConfusionSet({"a": {"a", "b"}, "c": {"c"}})
    assert conf.table == {"a": frozenset("b")} and "c" not in conf


def random_masked(rng, n):
    slots = []
    for k in range(n):
        if rng.random() < 0.4:
            slots.append(Mask(k, "missing"))
        else:
            slots.append(str(rng.choice(list("abcd"))))
    return MaskedSequence(tuple(slots))


def test_fill_length_and_determinism():
    rng = np.random.default_rng(5)
    corpus = ["".join(rng.choice(list("abcd"), size=8)) for _ in range(50)]
    lm = train_lm(corpus)
    for _ in range(100):
        m = random_masked(rng, int(rng.integers(0, 10)))
        for beam in (1, 3):
            out = fill(lm, m, beam=beam)
            assert len(out) == len(m)
            assert out == fill(lm, m, beam=beam)
            for k, s in enumerate(m.slots):
                if isinstance(s, str):
                    assert out[k] == s


def test_single_mask_full_beam_is_argmax():
    rng = np.random.default_rng(6)
    lm = train_lm(["".join(rng.choice(list("abcde"), size=7)) for _ in range(40)])
    for _ in range(50):
        n = int(rng.integers(1, 7))
        pos = int(rng.integers(0, n))
        chars = rng.choice(list("abcde"), size=n)
        slots = tuple(Mask(pos, "missing") if k == pos else str(c) for k, c in enumerate(chars))
        m = MaskedSequence(slots)
        left = "".join(slots[max(0, pos - 2):pos])
        right = EOS if pos == n - 1 else slots[pos + 1]
        scores = {c: score_candidate(lm, left, c, right) for c in lm.candidates}
        best = max(scores.values())
        out = fill(lm, m, beam=lm.V)
        assert scores[out[pos]] == best


def test_bad_beam(abc_lm):
    with pytest.raises(ValueError):
        fill(abc_lm, masked("a"), beam=0)


def test_lm_json_round_trip(tmp_path, abc_lm):
    path = tmp_path / "lm.json"
    abc_lm.save(path)
    lm2 = CharLM.load(path)
    assert lm2.vocab == abc_lm.vocab and lm2.trigrams == abc_lm.trigrams
    assert lm2.prob("c", "ab") == abc_lm.prob("c", "ab")
    path.write_text('{"kind": "charlm.v0"}', encoding="utf-8")
    with pytest.raises(ModelFormatError):
        CharLM.load(path)


def test_confusion_file_round_trip(tmp_path):
    conf = ConfusionSet({"己": {"已", "巳"}, "a": {"b"}})
    path = tmp_path / "conf.txt"
    write_confusion(conf, path)
    assert read_confusion(path) == conf
    path.write_text("ab\tc\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_confusion(path)
