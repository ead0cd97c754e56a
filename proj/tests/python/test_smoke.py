import json

import numpy as np
import pytest

import tuplex


def test_f1_and_decode():
    assert tuplex.f1_score(0.951, 0.975) == pytest.approx(0.963, abs=5e-4)
    assert tuplex.f1_score(0.0, 0.0) == 0.0
    assert tuplex.decode_spans([1, 0, 0], [0, 0, 1]) == [(0, 2)]
    assert tuplex.decode_spans([1, 1, 0, 0], [0, 1, 0, 1]) == [(0, 1), (1, 1)]
    assert tuplex.decode_spans([1, 0], [0, 0]) == []


def test_corpus_generation_and_stats():
    corpus = tuplex.generate_corpus(60, seed=4)
    assert len(corpus["sentences"]) == 60
    assert corpus == tuplex.generate_corpus(60, seed=4)
    stats = tuplex.corpus_stats(corpus)
    assert stats["total_sentences"] == 60
    assert sum(row["proportion"] for row in stats["by_count"].values()) == pytest.approx(1.0, abs=1e-9)
    two = tuplex.select(corpus, 2)
    assert all(len(s["tuples"]) == 2 for s in two["sentences"])
    canon = tuplex.canonicalize(corpus)
    assert tuplex.canonicalize(canon) == canon


def test_invalid_corpus_raises_with_code():
    corpus = tuplex.generate_corpus(2, seed=1)
    span = corpus["sentences"][0]["tuples"][0]["material"]
    span["end"] += 1
    with pytest.raises(tuplex.TuplexError) as info:
        tuplex.canonicalize(corpus)
    code, _message, sentence_id = info.value.args
    assert code in ("span_text_mismatch", "span_out_of_bounds")
    assert sentence_id == corpus["sentences"][0]["id"]
    with pytest.raises(tuplex.TuplexError):
        tuplex.canonicalize("{not json")


def test_embeddings_round_trip(tmp_path):
    corpus = tuplex.generate_corpus(5, seed=2)
    path = tmp_path / "e.tupx"
    assert tuplex.embed_synthetic(corpus, path, dim=8, seed=3) == 5
    records = tuplex.read_embeddings(str(path))
    assert [r[0] for r in records] == sorted(s["id"] for s in corpus["sentences"])
    for _id, tokens, vectors in records:
        assert isinstance(vectors, np.ndarray)
        assert vectors.shape == (len(tokens), 8)
        assert np.all(np.abs(vectors) <= 1.0)


def test_train_extract_evaluate(tmp_path):
    corpus = tuplex.generate_corpus(30, seed=5)
    emb = tmp_path / "e.tupx"
    tuplex.embed_synthetic(corpus, emb, dim=16, seed=5)
    ext = tuplex.train_extractor(corpus, emb, seed=5, epochs=5, hidden=8, learning_rate=0.2)
    alloc = tuplex.train_allocator(corpus, emb, seed=5, epochs=5)
    assert ext["format"] == "tuplex-extractor"
    assert alloc["lambda"] == pytest.approx(1.2)
    preds = tuplex.extract(corpus, emb, ext, alloc, threads=2)
    assert len(preds["sentences"]) == 30
    assert preds == tuplex.extract(corpus, emb, ext, alloc, threads=1)
    result = tuplex.evaluate(corpus, preds)
    assert 0.0 <= result["tuple"]["f1"] <= 1.0
    assert tuplex.evaluate(corpus, corpus)["tuple"]["f1"] == 1.0


def test_run_cli_commands(tmp_path):
    base = {"seed": 9, "synth": {"n_sentences": 20}}
    log = tuplex.run("synth", {**base, "paths": {"output": tmp_path / "c.json"}})
    assert json.loads(log.splitlines()[0])["sentences"] == 20
    tuplex.run("stats", {**base, "paths": {"dataset": tmp_path / "c.json", "output": tmp_path / "s.json"}})
    stats = json.loads((tmp_path / "s.json").read_text())
    assert stats["total_sentences"] == 20
    with pytest.raises(tuplex.TuplexError):
        tuplex.run("stats", {**base, "paths": {"dataset": tmp_path / "missing.json"}})
    with pytest.raises(tuplex.TuplexError):
        tuplex.run("no-such-command", base)
