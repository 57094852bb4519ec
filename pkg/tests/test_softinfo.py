import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shmbs.softinfo import (
    Lexicon,
    daily_score,
    load_corpus,
    load_lexicon,
    relevant,
    score_corpus,
    score_document,
    score_sentence,
    split_sentences,
    tokenize,
)

LEX = Lexicon.from_rows([("good", 0.5, "adjective"), ("falls", -0.2, "verb"),
                         ("stock", 0.1, "other"), ("sell off", -0.8, "verb"), ("sell", 0.3, "verb")])


def test_split_basic():
    assert split_sentences("A up. B down?") == ["A up.", "B down?"]
    assert split_sentences("") == []


def test_split_abbreviation():
    assert split_sentences("U.S. markets rose. Prices fell.") == ["U.S. markets rose.", "Prices fell."]


def test_relevant_whole_token():
    wl = {"ndx": ["NASDAQ"]}
    assert relevant("NASDAQ surged", wl) == {"ndx": True}
    assert relevant("nasdaqx surged", wl) == {"ndx": False}
    assert relevant("", wl) == {"ndx": False}


def test_score_hand_case():
    assert score_sentence("good falls", LEX) == pytest.approx((0.5 * 1.5 - 0.2 * 1.5) / 2)
    assert score_sentence("good falls", LEX) == pytest.approx(0.225)


def test_no_hits():
    assert score_sentence("the market", LEX) == 0.0


def test_negation_inverts():
    assert score_sentence("not good falls", LEX) == pytest.approx(-0.15)


def test_double_negation():
    assert score_sentence("not never good falls", LEX) == pytest.approx(0.225 * 2 / 4)


def test_phrase_longest_first():
    # "sell off" (-0.8) wins over "sell" (0.3); denominator is the token count
    assert score_sentence("sell off", LEX) == pytest.approx(-0.8 * 1.5 / 2)


def test_daily_mean():
    docs = ["NDX good falls.", "NDX not good falls.", "NDX flat."]
    out = daily_score(docs, {"ndx": ["ndx"]}, LEX)
    # token counts include the symbol: 3, 4 and 2 tokens
    want = np.mean([(0.75 - 0.3) / 3, -(0.75 - 0.3) / 4, 0.0])
    assert out["ndx"] == pytest.approx(want)


def test_daily_chain_from_sentence_scores():
    lex = Lexicon.from_rows([("good", 0.5, "adjective"), ("falls", -0.2, "verb")])
    pols = [score_sentence("good falls", lex), score_sentence("not good falls", lex), 0.0]
    assert pols == pytest.approx([0.225, -0.15, 0.0])
    assert np.mean(pols) == pytest.approx(0.025)


def test_daily_two_docs_and_empty():
    lex = Lexicon.from_rows([("up", 0.8, "other"), ("down", -0.4, "other")])
    wl = {"a": ["a"]}
    assert daily_score(["a up"], wl, lex)["a"] == pytest.approx(0.4)
    assert daily_score(["a up", "a down"], wl, lex)["a"] == pytest.approx(0.1)
    assert np.isnan(daily_score([], wl, lex)["a"])


def test_document_sums_relevant_sentences():
    doc = score_document("XYZ good. Others good. XYZ falls.", LEX, ["xyz"])
    assert [rel for _, rel, _ in doc.sentences] == [True, False, True]
    assert doc.pol == pytest.approx(0.75 / 2 - 0.3 / 2)


def test_lexicon_bounds():
    with pytest.raises(ValueError):
        Lexicon({"x": 1.5})
    with pytest.raises(ValueError):
        Lexicon({"x": 0.5}, {"x": "noun"})


def test_tokenize_apostrophes():
    assert tokenize("Don't STOP, it's 'fine'") == ["don't", "stop", "it's", "fine"]
    assert score_sentence("don't good falls", LEX) == pytest.approx(-0.15)


WORDS = ["good", "falls", "stock", "the", "not", "rally", "sell", "never", "x1"]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(WORDS), min_size=1, max_size=12))
def test_polarity_bound(tokens):
    assert abs(score_sentence(" ".join(tokens), LEX)) <= 1.5


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(WORDS), min_size=1, max_size=10), st.randoms())
def test_order_invariance(tokens, rnd):
    shuffled = list(tokens)
    rnd.shuffle(shuffled)
    lex = Lexicon.from_rows([(w, v, "verb") for w, v in (("good", 0.5), ("falls", -0.2), ("rally", 0.9))])
    assert score_sentence(" ".join(shuffled), lex) == pytest.approx(score_sentence(" ".join(tokens), lex))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(["good", "falls", "rally", "the"]), min_size=1, max_size=8),
       st.integers(0, 4))
def test_negation_parity(tokens, n_neg):
    base = score_sentence(" ".join(tokens), LEX)
    neg = score_sentence(" ".join(["not"] * n_neg + tokens), LEX)
    scale = len(tokens) / (len(tokens) + n_neg)
    assert neg == pytest.approx((-1) ** n_neg * base * scale)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sampled_from(["AAA good.", "AAA falls.", "AAA flat.", "AAA not good."]),
                min_size=1, max_size=6), st.randoms())
def test_daily_order_invariant(docs, rnd):
    shuffled = list(docs)
    rnd.shuffle(shuffled)
    wl = {"a": ["aaa"]}
    assert daily_score(shuffled, wl, LEX)["a"] == pytest.approx(daily_score(docs, wl, LEX)["a"])


def test_lexicon_file(tmp_path):
    f = tmp_path / "lex.tsv"
    f.write_text("# token\tscore\tpos\ngood\t0.5\tadjective\nsell off\t-0.8\tverb\nflat\t0\n")
    lex = load_lexicon(f)
    assert lex.entries == {"good": 0.5, "sell off": -0.8, "flat": 0.0}
    assert lex.weight("flat") == 1.0 and lex.weight("good") == 1.5


def test_corpus_jsonl_and_scores(tmp_path):
    f = tmp_path / "c.jsonl"
    rows = [{"date": "2020-01-06", "text": "AAA good falls."},
            {"date": "2020-01-06", "text": "BBB good.", "assets": ["b"]},
            {"date": "2020-01-07", "text": "AAA not good falls."}]
    f.write_text("\n".join(json.dumps(r) for r in rows))
    arts = load_corpus(f)
    days, d2 = score_corpus(arts, {"a": ["aaa"], "b": ["bbb"]}, LEX)
    assert days == ["2020-01-06", "2020-01-07"]
    assert d2[0, 0] == pytest.approx(0.45 / 3)
    assert d2[0, 1] == pytest.approx(np.mean([0.0, 0.75 / 2]))
    assert d2[1, 0] == pytest.approx(-0.45 / 4)


def test_corpus_csv(tmp_path):
    f = tmp_path / "c.csv"
    f.write_text('date,text,assets\n2020-01-06,"AAA good.",a;b\n')
    arts = load_corpus(f)
    assert arts[0].assets == ("a", "b")
