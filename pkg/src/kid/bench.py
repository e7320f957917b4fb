"""Run every decoder over a task on a shared seed set and score them.

One case = one context.  Retrieval and trie construction happen once
per case, every decoder then generates from the same session with the
same per-case seed, and the per-case metrics roll up into a per-decoder
summary.  Cases can run in parallel; outputs are merged in input order,
so the report does not depend on --jobs.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import median
from typing import Sequence

from .decoding import DECODE_FUNCS, DecodingConfig, DecodingSession
from .knowledge import build_trie, extract_triplets
from .lm import PolicyProvider, train_ngram
from .metrics import bleu1, coverage, precision_at_1, rouge_l, unigram_f1
from .retrieval import ingest_corpus, retrieve
from .synthetic import SyntheticTask, case_triplets

log = logging.getLogger(__name__)

METRIC_NAMES = ("coverage", "bleu1", "rouge_l", "unigram_f1")


@dataclass
class CaseOutcome:
    case_id: str
    decoder: str
    text: str
    metrics: dict[str, float]
    kls: list[float] = field(default_factory=list)
    betas: list[float] = field(default_factory=list)


@dataclass
class BenchmarkReport:
    decoders: tuple[str, ...]
    outcomes: list[CaseOutcome]
    precision_at_1: float

    def rows(self, decoder: str) -> list[CaseOutcome]:
        return [o for o in self.outcomes if o.decoder == decoder]

    def summary(self) -> dict[str, dict[str, float]]:
        out: dict[str, dict[str, float]] = {}
        for decoder in self.decoders:
            rows = self.rows(decoder)
            agg = {
                name: sum(o.metrics[name] for o in rows) / len(rows) if rows else 0.0
                for name in METRIC_NAMES
            }
            kls = [kl for o in rows for kl in o.kls]
            if kls:
                agg["median_kl"] = median(kls)
            out[decoder] = agg
        return out

    def all_kls(self, decoder: str = "kid") -> list[float]:
        return [kl for o in self.rows(decoder) for kl in o.kls]


def run_benchmark(
    task: SyntheticTask,
    config: DecodingConfig | None = None,
    decoders: Sequence[str] = tuple(DECODE_FUNCS),
    provider: PolicyProvider | None = None,
    base_seed: int = 0,
    jobs: int = 1,
    ngram_order: int = 3,
    ngram_k: float = 0.01,
) -> BenchmarkReport:
    if config is None:
        config = DecodingConfig(max_length=16)
    for d in decoders:
        if d not in DECODE_FUNCS:
            raise ValueError(f"unknown decoder: {d!r}")
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    if provider is None:
        provider = train_ngram(task.train_sentences, order=ngram_order, k=ngram_k)
    store = ingest_corpus(task.documents)

    def run_case(item: tuple[int, dict]) -> tuple[list[CaseOutcome], float | None]:
        index, case = item
        hits = retrieve(store, case["context"], k=config.k_docs)
        p_at_1 = (
            precision_at_1(hits, case["gold_doc_id"])
            if case.get("gold_doc_id")
            else None
        )
        triplets = []
        for hit in hits:
            triplets.extend(extract_triplets(hit.chunk.text()))
        session = DecodingSession(provider, build_trie(triplets))
        context_ids = provider.encode(case["context"])
        refs = case["references"]
        provenance = case_triplets(case)
        outcomes = []
        for decoder in decoders:
            result = DECODE_FUNCS[decoder](
                session, context_ids, config, seed=base_seed + index
            )
            scores = {
                "coverage": coverage(result.text, provenance) if provenance else 0.0,
                "bleu1": bleu1(result.text, refs) if refs else 0.0,
                "rouge_l": rouge_l(result.text, refs) if refs else 0.0,
                "unigram_f1": unigram_f1(result.text, refs) if refs else 0.0,
            }
            outcomes.append(
                CaseOutcome(
                    case_id=str(case.get("id", index)),
                    decoder=decoder,
                    text=result.text,
                    metrics=scores,
                    kls=[s.kl for s in result.steps],
                    betas=[s.beta for s in result.steps],
                )
            )
        return outcomes, p_at_1

    items = list(enumerate(task.cases))
    if jobs == 1:
        results = [run_case(item) for item in items]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_case, items))

    outcomes = [o for case_outcomes, _ in results for o in case_outcomes]
    p1_values = [p for _, p in results if p is not None]
    p1 = sum(p1_values) / len(p1_values) if p1_values else 0.0
    log.info(
        "benchmark: %d cases x %d decoders, precision@1=%.3f",
        len(task.cases),
        len(list(decoders)),
        p1,
    )
    return BenchmarkReport(tuple(decoders), outcomes, p1)
