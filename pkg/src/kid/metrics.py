"""Text-overlap metrics and batch evaluation.

All metrics normalize the same way (lowercase, punctuation stripped) and
take the best score over multiple references where that applies.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .knowledge import Triplet
from .retrieval import RetrievalResult
from .textnorm import STOPWORDS, stem, word_tokens

#: Recall weighting in the ROUGE-L F-measure (the common convention).
ROUGE_L_BETA = 1.2


def _check_refs(refs: Sequence[str]) -> list[list[str]]:
    if not refs:
        raise ValueError("at least one reference is required")
    return [word_tokens(r) for r in refs]


def bleu1(hyp: str, refs: Sequence[str]) -> float:
    """Clipped unigram precision times a symmetric length penalty.

    Precision clips each word's count at its maximum count over the
    references.  The penalty is exp(-|r - c| / c) against the reference
    whose length is closest to the hypothesis (ties toward the shorter),
    so both under- and over-length hypotheses pay.
    """
    ref_tokens = _check_refs(refs)
    h = word_tokens(hyp)
    if not h:
        return 0.0
    clip: Counter[str] = Counter()
    for r in ref_tokens:
        for w, n in Counter(r).items():
            clip[w] = max(clip[w], n)
    counts = Counter(h)
    matched = sum(min(n, clip[w]) for w, n in counts.items())
    c = len(h)
    r = min((len(t) for t in ref_tokens), key=lambda L: (abs(L - c), L))
    return (matched / c) * math.exp(-abs(r - c) / c)


def _lcs_len(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(hyp: str, refs: Sequence[str]) -> float:
    """LCS-based F-measure (beta = 1.2), best over references."""
    ref_tokens = _check_refs(refs)
    h = word_tokens(hyp)
    best = 0.0
    b2 = ROUGE_L_BETA**2
    for r in ref_tokens:
        lcs = _lcs_len(h, r)
        if lcs == 0:
            continue
        p = lcs / len(h)
        rec = lcs / len(r)
        best = max(best, (1 + b2) * p * rec / (rec + b2 * p))
    return best


def unigram_f1(hyp: str, refs: Sequence[str]) -> float:
    """Bag-of-words F1, best over references."""
    ref_tokens = _check_refs(refs)
    h = Counter(word_tokens(hyp))
    n_hyp = sum(h.values())
    if n_hyp == 0:
        return 0.0
    best = 0.0
    for r in ref_tokens:
        rc = Counter(r)
        overlap = sum(min(n, rc[w]) for w, n in h.items())
        if overlap == 0 or not r:
            continue
        p = overlap / n_hyp
        rec = overlap / len(r)
        best = max(best, 2 * p * rec / (p + rec))
    return best


def coverage(hyp: str, triplets: Sequence[Triplet]) -> float:
    """Percentage of distinct provenance stems the hypothesis mentions.

    Triplet tokens (subject, relation, object) are stopword-filtered and
    stemmed; the score is 100 * |covered| / |distinct stems|.
    """
    if not triplets:
        raise ValueError("coverage needs at least one provenance triplet")
    wanted: set[str] = set()
    for t in triplets:
        for tok in (*t.subj, *t.rel, *t.obj):
            low = tok.lower()
            if low not in STOPWORDS:
                wanted.add(stem(low))
    if not wanted:
        raise ValueError("provenance triplets contain only stopwords")
    have = {stem(w) for w in word_tokens(hyp) if w not in STOPWORDS}
    return 100.0 * len(wanted & have) / len(wanted)


def precision_at_1(results: Sequence[RetrievalResult], gold_doc_id: str) -> float:
    """1.0 iff the rank-1 chunk comes from the gold document."""
    if not results:
        return 0.0
    return 1.0 if results[0].chunk.doc_id == gold_doc_id else 0.0


@dataclass
class EvalRecord:
    context: str
    hypothesis: str
    references: list[str]
    triplets: list[Triplet] = field(default_factory=list)
    gold_doc_id: str | None = None
    id: str | None = None

    @classmethod
    def from_json(cls, obj: dict) -> "EvalRecord":
        triplets = [
            Triplet(tuple(t[0]), tuple(t[1]), tuple(t[2]))
            for t in obj.get("triplets", [])
        ]
        return cls(
            context=obj.get("context", ""),
            hypothesis=obj["hypothesis"],
            references=list(obj.get("references", [])),
            triplets=triplets,
            gold_doc_id=obj.get("gold_doc_id"),
            id=obj.get("id"),
        )


def evaluate_records(records: Sequence[EvalRecord]) -> dict:
    """Mean of every computable metric plus the record count."""
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}

    def add(name: str, value: float) -> None:
        sums[name] = sums.get(name, 0.0) + value
        counts[name] = counts.get(name, 0) + 1

    for rec in records:
        if rec.references:
            add("bleu1", bleu1(rec.hypothesis, rec.references))
            add("rouge_l", rouge_l(rec.hypothesis, rec.references))
            add("unigram_f1", unigram_f1(rec.hypothesis, rec.references))
        if rec.triplets:
            add("coverage", coverage(rec.hypothesis, rec.triplets))
    summary = {name: sums[name] / counts[name] for name in sorted(sums)}
    summary["count"] = len(records)
    return summary


def read_eval_records(path: str) -> list[EvalRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(EvalRecord.from_json(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{line_no}: bad eval record: {exc}") from exc
    return records
