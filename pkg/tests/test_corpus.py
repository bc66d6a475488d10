import json
import math

import pytest

from netsumm.corpus import (
    STOPWORDS,
    Corpus,
    CorpusError,
    Document,
    build_corpus,
    load_corpus,
    tfidf,
    tokenize,
    top_terms,
    write_jsonl,
)

from oracles import brute_tfidf

LN2 = math.log(2.0)


def test_tokenize_rules():
    assert tokenize("The CAT, the DOG!") == ["cat", "dog"]
    assert tokenize("x y z ab") == ["ab"]  # single-char tokens dropped
    assert tokenize("The THE the", drop_stopwords=False) == ["the", "the", "the"]


def test_plain_dir_load(tmp_path):
    (tmp_path / "a.txt").write_text("cat dog")
    (tmp_path / "b.txt").write_text("dog fish")
    corpus = load_corpus(tmp_path, "plain-dir")
    assert corpus.ids == ("a", "b")
    assert corpus.vocabulary == ("cat", "dog", "fish")


def test_jsonl_load_and_order(tmp_path):
    path = tmp_path / "docs.jsonl"
    path.write_text(
        json.dumps({"id": "z", "text": "late words"})
        + "\n"
        + json.dumps({"id": "a", "text": "early words", "relevant": True})
        + "\n"
    )
    corpus = load_corpus(path)
    assert corpus.ids == ("a", "z")  # lexicographic by id
    assert corpus.documents[0].relevant is True


def test_duplicate_id_error(tmp_path):
    path = tmp_path / "docs.jsonl"
    path.write_text(
        json.dumps({"id": "d1", "text": "one"}) + "\n" + json.dumps({"id": "d1", "text": "two"}) + "\n"
    )
    with pytest.raises(CorpusError, match="d1"):
        load_corpus(path)


def test_empty_dir_error(tmp_path):
    with pytest.raises(CorpusError, match="no documents found"):
        load_corpus(tmp_path, "plain-dir")


def test_missing_path_error(tmp_path):
    with pytest.raises(CorpusError, match="does not exist"):
        load_corpus(tmp_path / "nope")


def test_malformed_jsonl_reports_line(tmp_path):
    path = tmp_path / "docs.jsonl"
    path.write_text(json.dumps({"id": "a", "text": "ok"}) + "\n{broken\n")
    with pytest.raises(CorpusError, match=":2"):
        load_corpus(path)


def test_empty_body_error():
    with pytest.raises(CorpusError, match="empty document body"):
        build_corpus([Document("a", "   ")])


def test_single_document_all_idf_zero():
    corpus = build_corpus([Document("only", "cat dog cat")])
    assert tfidf(corpus) == [{}]


def test_two_doc_tfidf(tiny_corpus):
    vecs = tfidf(tiny_corpus)
    cat = tiny_corpus.term_ids["cat"]
    fish = tiny_corpus.term_ids["fish"]
    assert vecs[0] == {cat: pytest.approx(LN2)}
    assert vecs[1] == {fish: pytest.approx(LN2)}


def test_tfidf_matches_brute_force(small_corpus):
    vecs = tfidf(small_corpus)
    oracle = brute_tfidf([d.text for d in small_corpus.documents], STOPWORDS)
    for vec, expected in zip(vecs, oracle):
        named = {small_corpus.vocabulary[t]: w for t, w in vec.items()}
        assert named.keys() == expected.keys()
        for term, w in expected.items():
            assert named[term] == pytest.approx(w, abs=1e-12)


def test_top_terms_tie_break(tiny_corpus):
    assert top_terms(tiny_corpus, {"a", "b"}, 1) == [("cat", pytest.approx(LN2))]


def test_top_terms_single_member(tiny_corpus):
    assert top_terms(tiny_corpus, {"b"}, 3) == [("fish", pytest.approx(LN2))]


def test_top_terms_matches_brute_sum(small_corpus):
    members = {"d0", "d1", "d3"}
    got = top_terms(small_corpus, members, 3)
    oracle_vecs = brute_tfidf([d.text for d in small_corpus.documents], STOPWORDS)
    agg = {}
    for i, d in enumerate(small_corpus.documents):
        if d.id in members:
            for t, w in oracle_vecs[i].items():
                agg[t] = agg.get(t, 0.0) + w
    expected = sorted(agg.items(), key=lambda kv: (-kv[1], kv[0]))[:3]
    assert [t for t, _ in got] == [t for t, _ in expected]
    for (_, wg), (_, we) in zip(got, expected):
        assert wg == pytest.approx(we, abs=1e-12)


def test_top_terms_unknown_member(tiny_corpus):
    with pytest.raises(CorpusError, match="ghost"):
        top_terms(tiny_corpus, {"ghost"}, 1)


def test_tfidf_deterministic(small_corpus):
    assert tfidf(small_corpus) == tfidf(small_corpus)


def test_jsonl_round_trip(tmp_path, small_corpus):
    path = tmp_path / "snap.jsonl"
    write_jsonl(small_corpus, path)
    again = load_corpus(path)
    assert again.ids == small_corpus.ids
    assert tfidf(again) == tfidf(small_corpus)
