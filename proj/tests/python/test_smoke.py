"""Smoke tests for the python module against the compiled core."""

import math
import random
import unicodedata

import pytest

legalir = pytest.importorskip("legalir")


def test_nfc_matches_unicodedata_on_random_strings():
    pool = (
        list("abcdefXYZ0123 .,!()_")
        + ["à", "ả", "̀", "́", "̉", "̣", "̂"]
        + ["ᄀ", "ᅡ", "ᆨ", "가", "Å", "Ω", "İ"]
    )
    rng = random.Random(20240817)
    for _ in range(500):
        s = "".join(rng.choice(pool) for _ in range(rng.randrange(0, 30)))
        assert legalir.nfc(s) == unicodedata.normalize("NFC", s)


def test_normalize_documented_examples():
    accent = [("oà", "òa")]
    abbrev = [("HĐXX", "hội đồng xét xử")]
    assert legalir.normalize("oà", accent_map=accent) == "òa"
    assert (
        legalir.normalize("HĐXX", abbreviation_map=abbrev)
        == "hội đồng xét xử"
    )
    assert legalir.normalize("") == ""
    assert legalir.normalize("Chây ì NỘP PHẠT.") == "chây ì nộp phạt"


def test_tokenize_and_stopwords():
    tokens = legalir.tokenize("hội đồng xét xử",
                              compounds=["hội đồng", "xét xử"])
    assert tokens == ["hội_đồng", "xét_xử"]
    assert legalir.tokenize("abc def") == ["abc", "def"]
    assert legalir.remove_stopwords(["a", "b", "a"], ["a"]) == ["b"]


def test_bm25_formula_spot_value():
    index = legalir.Bm25Index.build([("d1", ["term", "x"]), ("d2", ["y", "z"])])
    assert index.score(["term"], "d1") == pytest.approx(math.log(2.0), abs=1e-12)
    assert index.score(["term"], "d2") == 0.0
    hits = index.top_k(["term"], 5)
    assert [h[0] for h in hits] == ["d1"]


def test_segment_offsets():
    passages = legalir.segment([f"w{i}" for i in range(10)], window=4, stride=3)
    assert [(p[0], p[1], len(p[2])) for p in passages] == [(0, 0, 4), (1, 3, 4), (2, 6, 4)]
    assert legalir.representative_passage_index(
        ["needle"], [["a", "b"], ["needle", "c"], ["d", "e"]]
    ) == 1


def test_f_beta_and_eval():
    assert legalir.f_beta(0.5, 1.0, 2.0) == pytest.approx(0.833333, abs=1e-6)
    assert legalir.f_beta(1.0, 0.5, 2.0) == pytest.approx(0.555556, abs=1e-6)
    assert legalir.prf([("l", "a")], [("l", "a"), ("l", "b")]) == (1.0, 0.5)

    gold = {"q1": [("l", "a")], "q2": [("l", "b")]}
    report = legalir.evaluate(gold, gold)
    assert report["macro_f2"] == 1.0
    half = legalir.evaluate({"q1": [("l", "a")]}, gold)
    assert half["macro_f2"] == pytest.approx(0.5)


def test_lm_normalization_and_selection():
    sentences = [["a", "b", "c"], ["a", "b", "d"], ["b", "c", "d"]] * 5
    lm = legalir.NGramLm.train(sentences, order=2, discount=0.75, unk_threshold=1)
    vocab = lm.vocab
    for ctx in ([], ["a"], ["b"]):
        total = sum(lm.conditional(ctx, w) for w in vocab)
        assert total == pytest.approx(1.0, abs=1e-9)

    pp_in = lm.perplexity(["a", "b", "c"])
    pp_out = lm.perplexity(["zz", "yy", "xx"])
    assert pp_in < pp_out
    kept = legalir.select_indomain(lm, [["a", "b", "c"], ["zz", "yy", "xx"]],
                                   threshold=(pp_in + pp_out) / 2)
    assert len(kept) == 1


def test_filter_scored_partition():
    rows = [("s1", 277.18), ("s2", 3383.04), ("s3", 404.96), ("s4", 35.01),
            ("s5", 87.62), ("s6", 1322.54), ("s7", 99.30), ("s8", 152.27)]
    kept = legalir.filter_scored(rows, 200.0)
    assert sorted(score for _, score in kept) == [35.01, 87.62, 99.30, 152.27]


def test_selection_policies():
    assert legalir.aggregate_article([0.2, 0.9, 0.4]) == pytest.approx(0.9)
    top = legalir.select_relevant([("l", "A", 0.9), ("l", "B", 0.3)], policy="top1")
    assert top == [("l", "A")]
    both = legalir.select_relevant([("l", "A", 0.9), ("l", "B", 0.8)],
                                   policy="threshold", tau=0.75)
    assert both == [("l", "A"), ("l", "B")]
