"""Corpus ingestion, fixed-size chunking, and sparse retrieval.

Documents are split into chunks of at most ``chunk_size`` word tokens.
Chunks keep the raw tokens (so a document can be reassembled exactly);
scoring runs over the shared stem pipeline.  The default scorer is
TF-IDF cosine; anything exposing ``scores(store, query_terms)`` can be
plugged in, including dense inner-product scorers.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DegenerateQueryError, InputError
from .textnorm import content_stems

DEFAULT_CHUNK_SIZE = 100

_STORE_VERSION = 1


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    text: str


@dataclass(frozen=True)
class Chunk:
    doc_id: str
    chunk_index: int
    tokens: tuple[str, ...]

    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class RetrievalResult:
    chunk: Chunk
    score: float


def split_document(doc: Document, chunk_size: int = DEFAULT_CHUNK_SIZE) -> list[Chunk]:
    """Cut a document into consecutive chunks of <= chunk_size word tokens."""
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    words = doc.text.split()
    return [
        Chunk(doc.id, i, tuple(words[start : start + chunk_size]))
        for i, start in enumerate(range(0, len(words), chunk_size))
    ]


class ChunkStore:
    """Chunks plus the term statistics needed for TF-IDF scoring."""

    def __init__(self, chunks: Sequence[Chunk], chunk_size: int):
        self.chunks = list(chunks)
        self.chunk_size = chunk_size
        self._term_counts = [Counter(content_stems(c.text())) for c in self.chunks]
        df: Counter[str] = Counter()
        for counts in self._term_counts:
            df.update(counts.keys())
        self.vocabulary = {term: i for i, term in enumerate(sorted(df))}
        self.df = np.array([df[t] for t in sorted(df)], dtype=np.int64)
        self._weights: list[dict[str, float]] | None = None

    def __len__(self) -> int:
        return len(self.chunks)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ChunkStore)
            and self.chunks == other.chunks
            and self.chunk_size == other.chunk_size
            and self.vocabulary == other.vocabulary
            and np.array_equal(self.df, other.df)
        )

    def idf(self, term: str) -> float:
        """Smoothed idf; unseen terms get the maximal value."""
        n = len(self.chunks)
        df = self.df[self.vocabulary[term]] if term in self.vocabulary else 0
        return math.log((1.0 + n) / (1.0 + df)) + 1.0

    def chunk_weights(self) -> list[dict[str, float]]:
        """Per-chunk L2-normalized tf-idf weights, computed once."""
        if self._weights is None:
            weights = []
            for counts in self._term_counts:
                vec = {t: tf * self.idf(t) for t, tf in counts.items()}
                norm = math.sqrt(sum(w * w for w in vec.values()))
                if norm > 0:
                    vec = {t: w / norm for t, w in vec.items()}
                weights.append(vec)
            self._weights = weights
        return self._weights


def ingest_corpus(
    docs: Iterable[Document], chunk_size: int = DEFAULT_CHUNK_SIZE
) -> ChunkStore:
    chunks: list[Chunk] = []
    seen: set[str] = set()
    for doc in docs:
        if not doc.text.strip():
            raise InputError(f"document {doc.id!r} has empty text")
        if doc.id in seen:
            raise InputError(f"duplicate document id {doc.id!r}")
        seen.add(doc.id)
        chunks.extend(split_document(doc, chunk_size))
    if not seen:
        raise InputError("corpus has no documents")
    return ChunkStore(chunks, chunk_size)


class TfidfScorer:
    """Cosine similarity between tf-idf vectors of query and chunk.

    Query terms outside the store vocabulary cannot match any chunk and
    are ignored (they would only rescale every score equally).
    """

    def scores(self, store: ChunkStore, query_terms: Sequence[str]) -> np.ndarray:
        out = np.zeros(len(store), dtype=np.float64)
        counts = Counter(t for t in query_terms if t in store.vocabulary)
        if not counts:
            return out
        qvec = {t: tf * store.idf(t) for t, tf in counts.items()}
        qnorm = math.sqrt(sum(w * w for w in qvec.values()))
        for j, cvec in enumerate(store.chunk_weights()):
            dot = sum(w * cvec[t] for t, w in qvec.items() if t in cvec)
            out[j] = dot / qnorm
        return out


class DenseScorer:
    """Inner-product scorer over a pluggable embedding function.

    ``embed`` maps a token sequence to a 1-D vector; the score of a chunk
    is ``embed(query) . embed(chunk)``.  Chunk embeddings are cached per
    store instance.
    """

    def __init__(self, embed: Callable[[Sequence[str]], np.ndarray]):
        self.embed = embed
        self._cache: dict[int, np.ndarray] = {}

    def scores(self, store: ChunkStore, query_terms: Sequence[str]) -> np.ndarray:
        key = id(store)
        if key not in self._cache:
            self._cache[key] = np.stack(
                [self.embed(content_stems(c.text())) for c in store.chunks]
            )
        return self._cache[key] @ self.embed(list(query_terms))


def retrieve(
    store: ChunkStore,
    context: str,
    k: int = 5,
    scorer=None,
) -> list[RetrievalResult]:
    """Top-k chunks for a context, ties broken by (doc_id, chunk_index)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not context.split():
        raise DegenerateQueryError("empty context")
    if scorer is None:
        scorer = TfidfScorer()
    scores = scorer.scores(store, content_stems(context))
    order = sorted(
        range(len(store)),
        key=lambda j: (-scores[j], store.chunks[j].doc_id, store.chunks[j].chunk_index),
    )
    return [RetrievalResult(store.chunks[j], float(scores[j])) for j in order[:k]]


def save_chunks(store: ChunkStore, path: str) -> None:
    """Write the store: one JSON header line, then one chunk per line."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "version": _STORE_VERSION,
            "chunk_size": store.chunk_size,
            "chunk_count": len(store),
            "vocabulary": sorted(store.vocabulary),
            "df": store.df.tolist(),
        }
        fh.write(json.dumps(header) + "\n")
        for chunk in store.chunks:
            row = {
                "doc_id": chunk.doc_id,
                "chunk_index": chunk.chunk_index,
                "tokens": list(chunk.tokens),
            }
            fh.write(json.dumps(row) + "\n")


def load_chunks(path: str) -> ChunkStore:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            header = json.loads(fh.readline())
            if header.get("version") != _STORE_VERSION:
                raise InputError(f"unsupported chunk store version: {header.get('version')}")
            chunks = []
            for line_no, line in enumerate(fh, start=2):
                if not line.strip():
                    continue
                row = json.loads(line)
                chunks.append(
                    Chunk(row["doc_id"], int(row["chunk_index"]), tuple(row["tokens"]))
                )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InputError(f"bad chunk store {path!r}: {exc}") from exc
    store = ChunkStore(chunks, int(header["chunk_size"]))
    if header.get("chunk_count") not in (None, len(store)):
        raise InputError(
            f"chunk store {path!r}: header says {header['chunk_count']} chunks, "
            f"found {len(store)}"
        )
    return store
