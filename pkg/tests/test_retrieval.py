"""Chunking, TF-IDF retrieval against a brute-force oracle, persistence."""
import math
import random
from collections import Counter

import numpy as np
import pytest

from kid.errors import DegenerateQueryError, InputError
from kid.retrieval import (
    Chunk,
    DenseScorer,
    Document,
    ingest_corpus,
    load_chunks,
    retrieve,
    save_chunks,
    split_document,
)
from kid.textnorm import content_stems

_WORDS = [
    "marijuana", "driving", "drug", "iceland", "country", "gas", "helium",
    "reaction", "times", "impair", "ability", "legal", "law", "cold", "rain",
    "population", "europe", "island", "slow", "brain",
]


def _random_doc(rng: random.Random, doc_id: str, n_words: int) -> Document:
    text = " ".join(rng.choice(_WORDS) for _ in range(n_words))
    return Document(doc_id, doc_id, text)


def _brute_force_cosine(store, query: str) -> list[float]:
    """Textbook tf-idf cosine, written independently of the scorer."""
    n = len(store.chunks)

    def idf(term: str) -> float:
        df = sum(
            1 for c in store.chunks if term in content_stems(c.text())
        )
        return math.log((1.0 + n) / (1.0 + df)) + 1.0

    q_counts = Counter(t for t in content_stems(query) if t in store.vocabulary)
    q_vec = {t: tf * idf(t) for t, tf in q_counts.items()}
    q_norm = math.sqrt(sum(w * w for w in q_vec.values()))
    scores = []
    for chunk in store.chunks:
        c_counts = Counter(content_stems(chunk.text()))
        c_vec = {t: tf * idf(t) for t, tf in c_counts.items()}
        c_norm = math.sqrt(sum(w * w for w in c_vec.values()))
        dot = sum(w * c_vec.get(t, 0.0) for t, w in q_vec.items())
        denom = q_norm * c_norm
        scores.append(dot / denom if denom > 0 else 0.0)
    return scores


class TestChunking:
    def test_exact_multiple(self):
        doc = Document("d", "", " ".join(["w"] * 100))
        assert len(split_document(doc, 100)) == 1

    def test_remainder_chunk(self):
        doc = Document("d", "", " ".join(["w"] * 250))
        lengths = [len(c.tokens) for c in split_document(doc, 100)]
        assert lengths == [100, 100, 50]

    def test_chunk_count_over_corpus(self):
        docs = [
            Document("a", "", " ".join(["w"] * 40)),
            Document("b", "", " ".join(["w"] * 150)),
            Document("c", "", " ".join(["w"] * 100)),
        ]
        store = ingest_corpus(docs, chunk_size=100)
        assert len(store) == 4

    def test_reconstruction(self):
        rng = random.Random(0)
        doc = _random_doc(rng, "d", 333)
        chunks = split_document(doc, 100)
        rebuilt = [w for c in sorted(chunks, key=lambda c: c.chunk_index) for w in c.tokens]
        assert rebuilt == doc.text.split()

    def test_empty_corpus_rejected(self):
        with pytest.raises(InputError):
            ingest_corpus([])

    def test_empty_text_rejected(self):
        with pytest.raises(InputError):
            ingest_corpus([Document("d", "", "   ")])

    def test_duplicate_id_rejected(self):
        docs = [Document("d", "", "a b"), Document("d", "", "c d")]
        with pytest.raises(InputError):
            ingest_corpus(docs)


class TestRetrieve:
    @pytest.fixture()
    def toy_store(self):
        rng = random.Random(13)
        docs = [_random_doc(rng, f"d{i:02d}", rng.randint(20, 60)) for i in range(20)]
        return ingest_corpus(docs, chunk_size=30)

    def test_matches_brute_force_ranking(self, toy_store):
        query = "marijuana driving"
        oracle = _brute_force_cosine(toy_store, query)
        order = sorted(
            range(len(toy_store.chunks)),
            key=lambda i: (
                -oracle[i],
                toy_store.chunks[i].doc_id,
                toy_store.chunks[i].chunk_index,
            ),
        )
        results = retrieve(toy_store, query, k=len(toy_store))
        got = [(r.chunk.doc_id, r.chunk.chunk_index) for r in results]
        want = [
            (toy_store.chunks[i].doc_id, toy_store.chunks[i].chunk_index)
            for i in order
        ]
        assert got == want
        for r, i in zip(results, order):
            assert r.score == pytest.approx(oracle[i], abs=1e-12)

    def test_single_chunk_store(self):
        store = ingest_corpus([Document("only", "", "helium is a gas")], chunk_size=10)
        results = retrieve(store, "noble gas facts", k=3)
        assert len(results) == 1
        assert results[0].chunk.doc_id == "only"
        assert results[0].score > 0

    def test_k_capped_at_store_size(self, toy_store):
        assert len(retrieve(toy_store, "drug law", k=10_000)) == len(toy_store)

    def test_scores_non_increasing(self, toy_store):
        results = retrieve(toy_store, "iceland population europe", k=len(toy_store))
        scores = [r.score for r in results]
        assert scores == sorted(scores, reverse=True)

    def test_empty_context_rejected(self, toy_store):
        with pytest.raises(DegenerateQueryError):
            retrieve(toy_store, "   ", k=5)

    def test_bad_k_rejected(self, toy_store):
        with pytest.raises(ValueError):
            retrieve(toy_store, "drug", k=0)

    def test_deterministic(self, toy_store):
        a = retrieve(toy_store, "reaction times", k=7)
        b = retrieve(toy_store, "reaction times", k=7)
        assert [(r.chunk, r.score) for r in a] == [(r.chunk, r.score) for r in b]


class TestDenseScorer:
    def test_inner_product_ranking(self):
        docs = [
            Document("a", "", "gas gas gas"),
            Document("b", "", "drug drug drug"),
            Document("c", "", "gas drug"),
        ]
        store = ingest_corpus(docs, chunk_size=10)
        vocab = sorted(store.vocabulary)

        def embed(terms):
            vec = np.zeros(len(vocab))
            for t in terms:
                if t in store.vocabulary:
                    vec[vocab.index(t)] += 1.0
            return vec

        scorer = DenseScorer(embed)
        results = retrieve(store, "gas", k=3, scorer=scorer)
        assert results[0].chunk.doc_id == "a"
        assert results[0].score == pytest.approx(3.0)


class TestPersistence:
    def test_round_trip(self, tmp_path):
        rng = random.Random(5)
        docs = [_random_doc(rng, f"d{i}", 80) for i in range(6)]
        store = ingest_corpus(docs, chunk_size=25)
        path = tmp_path / "chunks.jsonl"
        save_chunks(store, path)
        loaded = load_chunks(path)
        assert loaded == store
        q = "brain reaction"
        assert [
            (r.chunk.doc_id, r.chunk.chunk_index, r.score)
            for r in retrieve(loaded, q, k=4)
        ] == [
            (r.chunk.doc_id, r.chunk.chunk_index, r.score)
            for r in retrieve(store, q, k=4)
        ]

    def test_truncated_file_rejected(self, tmp_path):
        store = ingest_corpus([Document("d", "", "a b c d e f")], chunk_size=2)
        path = tmp_path / "chunks.jsonl"
        save_chunks(store, path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(InputError):
            load_chunks(path)

    def test_garbage_rejected(self, tmp_path):
        path = tmp_path / "chunks.jsonl"
        path.write_text("not json\n")
        with pytest.raises(InputError):
            load_chunks(path)
