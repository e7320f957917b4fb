"""Synthetic benchmark: templated entity facts with a deliberately
confusable training corpus.

Each fictional entity has one true attribute/category fact, and each
category one upkeep fact, e.g.::

    zivora is belodi makani. makani requires tofira vessa.

The n-gram training text reuses the same template with *shuffled*
pairings, so a model trained on it knows the sentence shape and the
whole vocabulary but not which attribute belongs to which entity — the
gap guided decoding is supposed to close.  Documents, contexts,
references, and provenance triplets all come from the true facts.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .knowledge import Triplet
from .retrieval import Document

_CONSONANTS = "bdfglmnprstvz"
_VOWELS = "aeiou"


@dataclass
class SyntheticTask:
    documents: list[Document]
    train_sentences: list[list[str]]
    cases: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "documents": [
                {"id": d.id, "title": d.title, "text": d.text} for d in self.documents
            ],
            "train_sentences": self.train_sentences,
            "cases": self.cases,
        }


def _pseudowords(rng: np.random.Generator, count: int, syllables: int, taken: set[str]) -> list[str]:
    """Distinct CV-syllable words; they end in vowels, so stems are stable."""
    words = []
    while len(words) < count:
        w = "".join(
            _CONSONANTS[rng.integers(len(_CONSONANTS))]
            + _VOWELS[rng.integers(len(_VOWELS))]
            for _ in range(syllables)
        )
        if w not in taken:
            taken.add(w)
            words.append(w)
    return words


def build_task(
    n_entities: int = 200,
    n_attrs: int = 40,
    n_cats: int = 20,
    n_traits: int = 30,
    seed: int = 7,
) -> SyntheticTask:
    rng = np.random.default_rng(seed)
    taken: set[str] = set()
    entities = _pseudowords(rng, n_entities, 3, taken)
    attrs = _pseudowords(rng, n_attrs, 3, taken)
    cats = _pseudowords(rng, n_cats, 3, taken)
    traits = _pseudowords(rng, n_traits, 3, taken)
    modes = _pseudowords(rng, n_traits, 2, taken)

    true_attr = {e: attrs[rng.integers(n_attrs)] for e in entities}
    true_cat = {e: cats[rng.integers(n_cats)] for e in entities}
    cat_trait = {c: traits[rng.integers(n_traits)] for c in cats}
    cat_mode = {c: modes[rng.integers(n_traits)] for c in cats}

    documents = []
    cases = []
    for e in entities:
        a, c = true_attr[e], true_cat[e]
        fact = f"{e} is {a} {c}"
        upkeep = f"{c} requires {cat_trait[c]} {cat_mode[c]}"
        documents.append(Document(id=e, title=e, text=f"{fact}. {upkeep}."))
        cases.append(
            {
                "id": e,
                "context": f"{e} is",
                "references": [fact],
                "gold_doc_id": e,
                "triplets": [
                    [[e], ["is"], [a, c]],
                    [[c], ["requires"], [cat_trait[c], cat_mode[c]]],
                ],
            }
        )

    # Training text: same shapes, pairings scrambled.  Every entity is
    # seen with every attribute once, each time with a random category,
    # so no (entity, attribute) or (attribute, category) pair stands out.
    train: list[list[str]] = []
    for e in entities:
        for a in attrs:
            train.append([e, "is", a, cats[rng.integers(n_cats)]])
    for c in cats:
        for _ in range(n_attrs):
            train.append(
                [c, "requires", traits[rng.integers(n_traits)], modes[rng.integers(n_traits)]]
            )
    return SyntheticTask(documents, train, cases)


def case_triplets(case: dict) -> list[Triplet]:
    return [Triplet(tuple(s), tuple(r), tuple(o)) for s, r, o in case["triplets"]]


def save_task(task: SyntheticTask, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(task.as_dict(), fh)
        fh.write("\n")


def load_task(path: str) -> SyntheticTask:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    return SyntheticTask(
        documents=[
            Document(d["id"], d.get("title", d["id"]), d["text"])
            for d in obj["documents"]
        ],
        train_sentences=[list(s) for s in obj["train_sentences"]],
        cases=list(obj["cases"]),
    )
