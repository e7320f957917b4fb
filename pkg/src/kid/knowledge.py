"""Triplet extraction and the stem-keyed knowledge trie.

Text becomes (subject, relation, object) triplets via a rule-based SVO
split on a fixed verb list.  Triplets are indexed by the stems of their
subject tokens; each entry remembers which stems inside its object are
themselves keys, so a lookup can follow facts hop by hop ("marijuana ->
depressant drug" then "drug -> slows reaction times") without ever
scanning the whole table.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import TrieFormatError
from .textnorm import (
    STOPWORDS,
    normalize_text,
    split_sentences,
    stem,
    word_tokens,
)

_TRIE_VERSION = 1

#: Surface verb forms the SVO splitter recognizes.
VERB_PATTERNS = frozenset(
    """
    is are was were be been being has have had
    causes cause caused slows slow slowed makes make made
    means mean meant contains contain contained includes include included
    requires require required needs need needed uses use used
    creates create created produces produce produced leads lead led
    becomes become became affects affect affected impairs impair impaired
    increases increase increased reduces reduce reduced treats treat treated
    helps help helped provides provide provided shows show showed shown
    remains remain remained
    """.split()
)

_CONJUNCTIONS = frozenset({"and", "or", "but"})


@dataclass(frozen=True)
class Triplet:
    subj: tuple[str, ...]
    rel: tuple[str, ...]
    obj: tuple[str, ...]

    def __post_init__(self):
        if not self.subj or not self.obj:
            raise ValueError("triplet subject and object must be non-empty")


@dataclass(frozen=True)
class TrieEntry:
    value: tuple[str, ...]
    relation: tuple[str, ...]
    next_hop_keys: tuple[str, ...]


def _clauses(tokens: list[str]) -> list[list[str]]:
    """Split at conjunctions whose right side carries its own verb."""
    clauses: list[list[str]] = []
    current: list[str] = []
    for i, tok in enumerate(tokens):
        if (
            tok in _CONJUNCTIONS
            and current
            and any(t in VERB_PATTERNS for t in tokens[i + 1 :])
        ):
            clauses.append(current)
            current = []
        else:
            current.append(tok)
    if current:
        clauses.append(current)
    return clauses


def _clause_triplets(tokens: list[str]) -> list[Triplet]:
    verb_at = None
    subj: list[str] = []
    for i, tok in enumerate(tokens):
        if tok in VERB_PATTERNS:
            subj = [t for t in tokens[:i] if t not in STOPWORDS]
            if subj:
                verb_at = i
                break
    if verb_at is None:
        return []
    rel_end = verb_at
    while rel_end < len(tokens) and tokens[rel_end] in VERB_PATTERNS:
        rel_end += 1
    rel = tuple(tokens[verb_at:rel_end])

    # "and" inside the object span fans out into one triplet per segment
    triplets = []
    segment: list[str] = []
    for tok in tokens[rel_end:] + ["and"]:
        if tok in _CONJUNCTIONS:
            obj = [t for t in segment if t not in STOPWORDS]
            if obj:
                triplets.append(Triplet(tuple(subj), rel, tuple(obj)))
            segment = []
        else:
            segment.append(tok)
    return triplets


def extract_triplets(text: str, resolve_pronouns: bool = False) -> list[Triplet]:
    """Rule-based SVO extraction over normalized text.

    One pass per sentence: clauses split on conjunctions, the first verb
    with a non-empty subject anchors the triplet, stopwords are dropped
    from subject and object spans.  Sentences without a verb or with an
    empty span yield nothing.
    """
    triplets: list[Triplet] = []
    normalized = normalize_text(text, resolve_pronouns=resolve_pronouns)
    for sentence in split_sentences(normalized):
        for clause in _clauses(word_tokens(sentence)):
            triplets.extend(_clause_triplets(clause))
    return triplets


class KnowledgeTrie:
    """Stem-keyed map from subject stems to fact entries.

    ``entries`` maps each key to its fact list; every stem of a multi-word
    subject is a key for the same entries, with the head (last) token as
    the primary.  ``max_child_depth`` records how deep the next-hop chain
    under each key goes, computed once at build time.
    """

    def __init__(
        self,
        entries: dict[str, list[TrieEntry]],
        max_child_depth: dict[str, int],
        triplet_count: int,
    ):
        self.entries = entries
        self.max_child_depth = max_child_depth
        self.triplet_count = triplet_count

    def __len__(self) -> int:
        return len(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, KnowledgeTrie)
            and self.entries == other.entries
            and self.max_child_depth == other.max_child_depth
            and self.triplet_count == other.triplet_count
        )

    def has_word(self, word: str) -> bool:
        return stem(word) in self.entries


def _successors(entries: dict[str, list[TrieEntry]], key: str):
    for entry in entries[key]:
        yield from entry.next_hop_keys


def _chain_depths(entries: dict[str, list[TrieEntry]]) -> dict[str, int]:
    """Deepest next-hop chain reachable from each key, all keys at once.

    Cycles make the true longest simple path intractable, so keys are
    first grouped into strongly connected clusters (iterative Tarjan);
    the cluster graph is acyclic, and a topological-order pass scores
    each cluster as its own size plus the best reachable cluster score.
    On chains this is exactly the hop count; on cycles it stays finite.
    Runs in O(keys + links).
    """
    succ = {
        key: [n for n in dict.fromkeys(_successors(entries, key)) if n in entries]
        for key in entries
    }
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    scc_stack: list[str] = []
    comp: dict[str, int] = {}
    comp_sizes: list[int] = []
    counter = 0

    for root in entries:
        if root in index:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter
        counter += 1
        scc_stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            child = next(it, None)
            if child is not None:
                if child not in index:
                    index[child] = low[child] = counter
                    counter += 1
                    scc_stack.append(child)
                    on_stack.add(child)
                    work.append((child, iter(succ[child])))
                elif child in on_stack:
                    low[node] = min(low[node], index[child])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                size = 0
                while True:
                    member = scc_stack.pop()
                    on_stack.discard(member)
                    comp[member] = len(comp_sizes)
                    size += 1
                    if member == node:
                        break
                comp_sizes.append(size)

    # Tarjan emits clusters in reverse topological order, so a single
    # sweep over them sees every successor cluster before its callers.
    comp_depth = [0] * len(comp_sizes)
    comp_succ: list[set[int]] = [set() for _ in comp_sizes]
    for key, nexts in succ.items():
        for n in nexts:
            if comp[n] != comp[key]:
                comp_succ[comp[key]].add(comp[n])
    for c in range(len(comp_sizes)):
        best_child = max((comp_depth[n] for n in comp_succ[c]), default=0)
        comp_depth[c] = comp_sizes[c] + best_child
    return {key: comp_depth[comp[key]] for key in entries}


def build_trie(triplets: Iterable[Triplet]) -> KnowledgeTrie:
    """Index triplets by subject-token stems.

    Two passes: the first fixes the key set (stems of every subject
    token), the second creates one entry per distinct triplet, scans its
    object for stems that are keys (the next-hop links, self-links
    included), and files the entry under the head-token stem plus an
    alias key per remaining subject token.  Duplicate (key, value,
    relation) rows collapse.
    """
    unique: list[Triplet] = []
    seen_triplets = set()
    keys: set[str] = set()
    for t in triplets:
        if t in seen_triplets:
            continue
        seen_triplets.add(t)
        unique.append(t)
        keys.update(stem(tok) for tok in t.subj)

    entries: dict[str, list[TrieEntry]] = {}
    filed: set[tuple[str, tuple[str, ...], tuple[str, ...]]] = set()
    for t in unique:
        links = list(
            dict.fromkeys(s for tok in t.obj if (s := stem(tok)) in keys)
        )
        entry = TrieEntry(t.obj, t.rel, tuple(links))
        head_first = [stem(t.subj[-1])] + [stem(tok) for tok in t.subj[:-1]]
        for key in dict.fromkeys(head_first):
            if (key, entry.value, entry.relation) in filed:
                continue
            filed.add((key, entry.value, entry.relation))
            entries.setdefault(key, []).append(entry)

    return KnowledgeTrie(entries, _chain_depths(entries), len(unique))


def query(
    trie: KnowledgeTrie,
    query_word: str,
    h_max: int,
    key_budget: int | None = None,
) -> list[list[str]]:
    """Value tokens reachable from a word's stem, one list per hop.

    Hop 1 holds the values filed directly under the key; hop i+1 holds
    the values under the next-hop keys discovered at hop i.  Keys are
    visited at most once, tokens are deduplicated within a hop, and the
    walk touches only the entries it returns — cost does not depend on
    trie size.  ``key_budget`` optionally caps the total number of key
    lookups (the decoder passes h_max to keep per-step work bounded).
    """
    if h_max < 0:
        raise ValueError(f"h_max must be >= 0, got {h_max}")
    start = stem(query_word)
    if h_max == 0 or start not in trie.entries:
        return []
    visited = {start}
    lookups = 1
    frontier = [start]
    hops: list[list[str]] = []
    for _ in range(h_max):
        tokens: dict[str, None] = {}
        next_frontier: list[str] = []
        for key in frontier:
            for entry in trie.entries[key]:
                tokens.update(dict.fromkeys(entry.value))
                for link in entry.next_hop_keys:
                    if link in visited or link not in trie.entries:
                        continue
                    if key_budget is not None and lookups >= key_budget:
                        continue
                    visited.add(link)
                    lookups += 1
                    next_frontier.append(link)
        hops.append(list(tokens))
        frontier = next_frontier
        if not frontier:
            break
    return hops


def serialize(trie: KnowledgeTrie) -> bytes:
    """One JSON header line, then one line per key, keys sorted."""
    lines = [
        json.dumps(
            {
                "version": _TRIE_VERSION,
                "key_count": len(trie.entries),
                "triplet_count": trie.triplet_count,
            },
            separators=(",", ":"),
        )
    ]
    for key in sorted(trie.entries):
        lines.append(
            json.dumps(
                {
                    "key": key,
                    "max_depth": trie.max_child_depth[key],
                    "entries": [
                        {
                            "value": list(e.value),
                            "rel": list(e.relation),
                            "next": list(e.next_hop_keys),
                        }
                        for e in trie.entries[key]
                    ],
                },
                separators=(",", ":"),
            )
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


def deserialize(data: bytes | str) -> KnowledgeTrie:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    lines = text.splitlines()
    if not lines:
        raise TrieFormatError(1, "empty input")
    try:
        header = json.loads(lines[0])
        version = header["version"]
        key_count = header["key_count"]
        triplet_count = header["triplet_count"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise TrieFormatError(1, f"bad header: {exc}") from exc
    if version != _TRIE_VERSION:
        raise TrieFormatError(1, f"unsupported version: {version!r}")

    entries: dict[str, list[TrieEntry]] = {}
    depth: dict[str, int] = {}
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            key = row["key"]
            depth[key] = int(row["max_depth"])
            entries[key] = [
                TrieEntry(tuple(e["value"]), tuple(e["rel"]), tuple(e["next"]))
                for e in row["entries"]
            ]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise TrieFormatError(line_no, str(exc)) from exc
    if len(entries) != key_count:
        raise TrieFormatError(
            len(lines), f"header says {key_count} keys, found {len(entries)}"
        )
    return KnowledgeTrie(entries, depth, triplet_count)
