"""FIFO entity memory and the entity predicate."""
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kid.knowledge import Triplet, build_trie
from kid.memory import LocalMemory, entity_predicate


class TestFromContext:
    def test_question_context(self):
        mem = LocalMemory.from_context(
            "does marijuana impair driving ability".split(),
            is_entity=entity_predicate(),
            w_max=4,
        )
        assert mem.snapshot() == ("marijuana", "impair", "drive", "ability")

    def test_stopword_only_context(self):
        mem = LocalMemory.from_context(
            "it is the of and".split(), is_entity=entity_predicate(), w_max=4
        )
        assert len(mem) == 0

    def test_overflow_keeps_most_recent(self):
        tokens = ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot"]
        mem = LocalMemory.from_context(tokens, is_entity=entity_predicate(), w_max=4)
        assert mem.snapshot() == ("charlie", "delta", "echo", "foxtrot")


class TestPush:
    def test_singleton(self):
        mem = LocalMemory(w_max=4)
        mem.push("gas")
        assert mem.snapshot() == ("gas",)

    def test_eviction(self):
        mem = LocalMemory(w_max=4, entries=["a1", "b2", "c3", "d4"])
        mem.push("e5")
        assert mem.snapshot() == ("b2", "c3", "d4", "e5")

    def test_replay_100_pushes(self):
        rng = random.Random(17)
        mem = LocalMemory(w_max=4)
        pushed = []
        for _ in range(100):
            s = f"s{rng.randrange(1000)}"
            pushed.append(s)
            mem.push(s)
        assert list(mem) == pushed[-4:]

    def test_empty_stem_rejected(self):
        with pytest.raises(ValueError):
            LocalMemory(w_max=2).push("")

    def test_duplicates_allowed(self):
        mem = LocalMemory(w_max=3)
        for _ in range(3):
            mem.push("gas")
        assert mem.snapshot() == ("gas", "gas", "gas")

    def test_bad_capacity(self):
        with pytest.raises(ValueError):
            LocalMemory(w_max=0)


@given(st.lists(st.sampled_from(["ga", "sol", "heli", "dru"]), max_size=30), st.integers(1, 6))
def test_contents_equal_tail_of_pushes(stems, w_max):
    mem = LocalMemory(w_max=w_max)
    for s in stems:
        mem.push(s)
    assert list(mem) == stems[-min(len(stems), w_max):]
    assert len(mem) <= w_max


class TestEntityPredicate:
    def test_trie_keys_count(self):
        trie = build_trie([Triplet(("it",), ("is",), ("odd",))])
        pred = entity_predicate(trie=trie)
        assert pred("it")  # trie membership beats the stopword list

    def test_lexicon_membership(self):
        pred = entity_predicate(lexicon=["Xe"], fallback=False)
        assert pred("xe")
        assert not pred("helium")

    def test_heuristic_fallback(self):
        pred = entity_predicate()
        assert pred("helium")
        assert not pred("the")
        assert not pred("ab")
        assert not pred("a1b2")

    def test_fallback_disabled(self):
        pred = entity_predicate(fallback=False)
        assert not pred("helium")
