"""Shared text pipeline: tokenization, stopwords, light stemming, cleanup.

Every module that compares words (retrieval scoring, trie keys, entity
memory, coverage) goes through the same three steps so that surface
variants of the same word collide: lowercase, drop stopwords, stem.
"""
from __future__ import annotations

import re

WORD_RE = re.compile(r"[a-z0-9]+")

_MARKUP_RES = (
    re.compile(r"<[^>]*>"),                     # inline tags
    re.compile(r"\[[^\]]*\](\([^)]*\))?"),      # [bracketed] and [text](url)
    re.compile(r"(https?://|www\.)\S+"),        # bare links
)

_SENTENCE_SPLIT_RE = re.compile(r"[.!?;]+")

STOPWORDS = frozenset(
    """
    a an the and or but if then else when while of in on at by for with
    about against between into through during before after above below to
    from up down out off over under again further once here there where why
    how all any both each few more most other some such no nor not only own
    same so than too very just now i me my myself we us our ours ourselves
    you your yours yourself he him his himself she her hers herself it its
    itself they them their theirs themselves what which who whom this that
    these those am is are was were be been being have has had having do
    does did doing would could should ought may might must shall will can
    as because until
    """.split()
)

#: Third-person pronouns the optional resolution pass rewrites.
PRONOUNS = frozenset(
    "it its itself he him his himself she her hers herself "
    "they them their theirs themselves".split()
)

_VOWELS = "aeiou"


def word_tokens(text: str) -> list[str]:
    """Lowercase and split on whitespace/punctuation into word tokens."""
    return WORD_RE.findall(text.lower())


def content_stems(text: str) -> list[str]:
    """Tokenize, drop stopwords, stem.  The indexing/matching pipeline."""
    return [stem(t) for t in word_tokens(text) if t not in STOPWORDS]


def _is_vowel(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return True
    # "y" acts as a vowel after a consonant ("dry", "crying")
    return ch == "y" and i > 0 and not _is_vowel(word, i - 1)


def _has_vowel(word: str) -> bool:
    return any(_is_vowel(word, i) for i in range(len(word)))


def _measure(word: str) -> int:
    """Number of vowel->consonant transitions (Porter's m)."""
    m = 0
    prev_vowel = False
    for i in range(len(word)):
        vowel = _is_vowel(word, i)
        if prev_vowel and not vowel:
            m += 1
        prev_vowel = vowel
    return m


def _ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    if _is_vowel(word, len(word) - 1) or not _is_vowel(word, len(word) - 2):
        return False
    if _is_vowel(word, len(word) - 3):
        return False
    return word[-1] not in "wxy"


def _repair_stub(stub: str) -> str:
    """Porter's cleanup after removing -ed/-ing."""
    if stub.endswith(("at", "bl", "iz")):
        return stub + "e"
    if (
        len(stub) >= 2
        and stub[-1] == stub[-2]
        and stub[-1] not in _VOWELS
        and stub[-1] not in "lsz"
    ):
        return stub[:-1]
    if _measure(stub) == 1 and _ends_cvc(stub):
        return stub + "e"
    return stub


def stem(word: str) -> str:
    """Strip inflectional suffixes (plurals, -ed, -ing), Porter style.

    Deliberately stops after the inflectional step: "driving" -> "drive",
    "drugs" -> "drug", but "ability" stays "ability".  Idempotent on its
    own output.
    """
    w = word.lower()
    if len(w) <= 2:
        return w
    if w.endswith("sses") or w.endswith("ies"):
        w = w[:-2]
    elif not w.endswith("ss") and w.endswith("s"):
        w = w[:-1]
    if w.endswith("eed"):
        if _measure(w[:-3]) > 0:
            w = w[:-1]
    elif w.endswith("ed") and _has_vowel(w[:-2]):
        w = _repair_stub(w[:-2])
    elif w.endswith("ing") and _has_vowel(w[:-3]):
        w = _repair_stub(w[:-3])
    return w


def split_sentences(text: str) -> list[str]:
    """Split on sentence punctuation; empty pieces dropped."""
    return [s.strip() for s in _SENTENCE_SPLIT_RE.split(text) if s.strip()]


def _resolve_pronouns(text: str) -> str:
    """Replace third-person pronouns with the running topic word.

    The topic is the first content word (alphabetic, non-stopword, length
    >= 3) of the current sentence, falling back to the previous sentence's
    topic when the pronoun comes first.  A cheap stand-in for real
    coreference that handles the "X is ... and it is ..." pattern.
    """
    pieces: list[str] = []
    topic: str | None = None
    for raw_sentence in re.split(r"([.!?;]+)", text):
        if _SENTENCE_SPLIT_RE.fullmatch(raw_sentence):
            if pieces:
                pieces[-1] += raw_sentence
            continue
        sentence_topic: str | None = None
        words = []
        for word in raw_sentence.split():
            core = word.strip(",:()\"'")
            if core in PRONOUNS and (sentence_topic or topic):
                word = word.replace(core, sentence_topic or topic)
                core = sentence_topic or topic
            if (
                sentence_topic is None
                and core.isalpha()
                and core not in STOPWORDS
                and len(core) >= 3
            ):
                sentence_topic = core
                topic = core
            words.append(word)
        if words:
            pieces.append(" ".join(words))
    return " ".join(pieces)


def normalize_text(text: str, resolve_pronouns: bool = False) -> str:
    """Lowercase and strip markup/links; optionally resolve pronouns."""
    t = text
    for pattern in _MARKUP_RES:
        t = pattern.sub(" ", t)
    t = " ".join(t.lower().split())
    if resolve_pronouns:
        t = _resolve_pronouns(t)
    return t
