"""Bounded FIFO of entity stems seen during a generation."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

from .textnorm import STOPWORDS, stem


@dataclass
class LocalMemory:
    """The last ``w_max`` entity stems, oldest first."""

    w_max: int = 4
    entries: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.w_max < 1:
            raise ValueError(f"w_max must be >= 1, got {self.w_max}")
        if len(self.entries) > self.w_max:
            raise ValueError("initial entries exceed w_max")

    @classmethod
    def from_context(
        cls,
        context_tokens: Iterable[str],
        is_entity: Callable[[str], bool],
        w_max: int = 4,
    ) -> "LocalMemory":
        """Seed the memory by pushing every entity token of the context."""
        mem = cls(w_max=w_max)
        for token in context_tokens:
            if is_entity(token):
                mem.push(stem(token))
        return mem

    def push(self, entity_stem: str) -> None:
        """Append a stem, evicting the oldest once past capacity."""
        if not entity_stem:
            raise ValueError("entity stem must be non-empty")
        self.entries.append(entity_stem)
        if len(self.entries) > self.w_max:
            del self.entries[0]

    def snapshot(self) -> tuple[str, ...]:
        return tuple(self.entries)

    def __iter__(self) -> Iterator[str]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def entity_predicate(trie=None, lexicon: Iterable[str] | None = None, fallback: bool = True):
    """Build the token -> is-entity test used to feed the memory.

    A token counts as an entity when its stem is a trie key, or the token
    is in the user lexicon, or (fallback heuristic) it is alphabetic,
    not a stopword, and at least 3 characters long.
    """
    lex = {w.lower() for w in lexicon} if lexicon is not None else None

    def is_entity(token: str) -> bool:
        t = token.lower()
        if trie is not None and trie.has_word(t):
            return True
        if lex is not None and t in lex:
            return True
        if fallback:
            return t.isalpha() and t not in STOPWORDS and len(t) >= 3
        return False

    return is_entity
