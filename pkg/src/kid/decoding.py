"""Decoding loops: the knowledge-guided decoder and its baselines.

``decode_kid`` runs the full per-step pipeline — gather demonstrations
from the trie for every entity in local memory, guide the base
distribution, sample from the result — while ``decode_sampling``,
``decode_greedy`` and ``decode_beam`` provide the unguided baselines.
All loops share the same truncated-sampling helper and stop at EOS or
``max_length``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import knowledge
from .lm import PolicyDistribution, PolicyProvider
from .memory import LocalMemory, entity_predicate
from .policy import DemonstrationSet, GuidanceConfig, guide_step
from .textnorm import stem

log = logging.getLogger(__name__)

DECODER_CHOICES = ("kid", "sampling", "greedy", "beam")


@dataclass(frozen=True)
class DecodingConfig:
    """Shared decoding knobs.  ``w_max`` defaults to ``h_max``."""

    h_max: int = 4
    w_max: int | None = None
    k_docs: int = 5
    max_length: int = 128
    top_p: float = 0.9
    top_k: int = 20
    beam_size: int = 5
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)

    def __post_init__(self):
        if self.h_max < 1:
            raise ValueError(f"h_max must be >= 1, got {self.h_max}")
        if self.w_max is not None and self.w_max < 1:
            raise ValueError(f"w_max must be >= 1, got {self.w_max}")
        if self.k_docs < 1:
            raise ValueError(f"k_docs must be >= 1, got {self.k_docs}")
        if self.max_length < 1:
            raise ValueError(f"max_length must be >= 1, got {self.max_length}")
        if not 0.0 <= self.top_p <= 1.0:
            raise ValueError(f"top_p must be in [0, 1], got {self.top_p}")
        if self.top_k < 0:
            raise ValueError(f"top_k must be >= 0, got {self.top_k}")
        if self.beam_size < 1:
            raise ValueError(f"beam_size must be >= 1, got {self.beam_size}")

    @property
    def effective_w_max(self) -> int:
        return self.h_max if self.w_max is None else self.w_max


@dataclass
class StepTrace:
    """Diagnostics for one guided step."""

    token_id: int
    demonstrations: tuple[tuple[str, ...], ...]
    dropped_demos: int
    kl: float
    beta: float
    knowledge_gain: float
    demo_mass_before: float
    demo_mass_after: float
    memory: tuple[str, ...]
    aborted: bool = False
    fallback: bool = False

    def as_dict(self) -> dict:
        return {
            "token_id": self.token_id,
            "demonstrations": [list(h) for h in self.demonstrations],
            "dropped_demos": self.dropped_demos,
            "kl": self.kl,
            "beta": self.beta,
            "knowledge_gain": self.knowledge_gain,
            "demo_mass_before": self.demo_mass_before,
            "demo_mass_after": self.demo_mass_after,
            "memory": list(self.memory),
            "aborted": self.aborted,
            "fallback": self.fallback,
        }


@dataclass
class GenerationResult:
    tokens: list[int]
    text: str
    steps: list[StepTrace] = field(default_factory=list)
    error: str | None = None

    def as_dict(self, diagnostics: bool = False) -> dict:
        out = {"tokens": self.tokens, "text": self.text}
        if self.error is not None:
            out["error"] = self.error
        if diagnostics:
            out["steps"] = [s.as_dict() for s in self.steps]
        return out


@dataclass
class DecodingSession:
    """A provider plus the knowledge handles a generation works against."""

    provider: PolicyProvider
    trie: knowledge.KnowledgeTrie | None = None
    lexicon: frozenset[str] | None = None
    heuristic_entities: bool = True

    def __post_init__(self):
        self.is_entity = entity_predicate(
            trie=self.trie,
            lexicon=self.lexicon,
            fallback=self.heuristic_entities,
        )

    def gather(self, mem: LocalMemory, h_max: int) -> list[list[str]]:
        """Merge per-hop trie results for every memory entry.

        Each entry's walk gets a key-lookup budget of ``h_max``, so a
        step costs at most |memory| * h_max lookups.
        """
        merged: list[dict[str, None]] = []
        if self.trie is None:
            return []
        for entry in mem:
            hops = knowledge.query(self.trie, entry, h_max, key_budget=h_max)
            while len(merged) < len(hops):
                merged.append({})
            for i, tokens in enumerate(hops):
                merged[i].update(dict.fromkeys(tokens))
        return [list(h) for h in merged]


def _truncate(
    probs: np.ndarray, top_p: float, top_k: int
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Nucleus cut then top-k cut; returns (kept ids, weights, degenerate)."""
    n = probs.size
    order = np.lexsort((np.arange(n), -probs))
    keep = n
    if top_p < 1.0:
        cum = np.cumsum(probs[order])
        keep = int(np.searchsorted(cum, top_p, side="left")) + 1
    if top_k > 0:
        keep = min(keep, top_k)
    keep = max(1, min(keep, n))
    kept = order[:keep]
    weights = probs[kept]
    total = weights.sum()
    if not np.isfinite(total) or total <= 0.0:
        return np.array([int(np.argmax(probs))]), np.array([1.0]), True
    return kept, weights, False


def sample_from(
    policy: PolicyDistribution,
    top_p: float,
    top_k: int,
    rng: np.random.Generator,
) -> int:
    """Draw one token after nucleus (top-p) then top-k truncation.

    The nucleus is the smallest probability-sorted prefix reaching
    ``top_p``; ties in probability break toward smaller ids.  Degenerate
    truncation falls back to argmax.  Consumes exactly one uniform draw.
    """
    if not 0.0 <= top_p <= 1.0:
        raise ValueError(f"top_p must be in [0, 1], got {top_p}")
    if top_k < 0:
        raise ValueError(f"top_k must be >= 0, got {top_k}")
    kept, weights, degenerate = _truncate(policy.probs(), top_p, top_k)
    if degenerate:
        return int(kept[0])
    r = rng.random() * weights.sum()
    idx = int(np.searchsorted(np.cumsum(weights), r, side="right"))
    return int(kept[min(idx, kept.size - 1)])


def decode_kid(
    session: DecodingSession,
    context: Sequence[int],
    config: DecodingConfig,
    seed: int = 0,
) -> GenerationResult:
    """Guided decoding: retrieve-once, then guide every sampling step.

    Per step: query the trie with each memory entry at h_max hops, map
    the demonstration words into the vocabulary, run the guided update
    (beta carries across steps), sample from the updated distribution,
    and push the emitted token into memory iff it is an entity.
    """
    provider = session.provider
    rng = np.random.default_rng(seed)
    beta = config.guidance.beta_init
    mem = LocalMemory.from_context(
        provider.decode(context).split(),
        session.is_entity,
        w_max=config.effective_w_max,
    )
    prefix = list(context)
    generated: list[int] = []
    steps: list[StepTrace] = []
    error = None
    for _ in range(config.max_length):
        try:
            demo_words = session.gather(mem, config.h_max)
            hops, dropped = [], 0
            for words in demo_words:
                ids: dict[int, None] = {}
                for w in words:
                    mapped = provider.demo_token_ids(w)
                    if mapped:
                        ids.update(dict.fromkeys(mapped))
                    else:
                        dropped += 1
                hops.append(list(ids))
            demos = DemonstrationSet(hops)
            base = provider.next_distribution(prefix)
            outcome = guide_step(base, demos, config.guidance, beta, rng=rng)
            updated = PolicyDistribution(outcome.updated_logits)
            kept, weights, fallback = _truncate(
                updated.probs(), config.top_p, config.top_k
            )
            if fallback:
                token = int(kept[0])
            else:
                r = rng.random() * weights.sum()
                idx = int(np.searchsorted(np.cumsum(weights), r, side="right"))
                token = int(kept[min(idx, kept.size - 1)])
        except Exception as exc:  # provider/transport failure mid-generation
            log.warning("generation aborted: %s", exc)
            error = str(exc)
            break
        steps.append(
            StepTrace(
                token_id=token,
                demonstrations=tuple(tuple(h) for h in demo_words),
                dropped_demos=dropped,
                kl=outcome.kl,
                beta=beta,
                knowledge_gain=outcome.knowledge_gain,
                demo_mass_before=outcome.demo_mass_before,
                demo_mass_after=outcome.demo_mass_after,
                memory=mem.snapshot(),
                aborted=outcome.aborted,
                fallback=fallback,
            )
        )
        beta = outcome.beta_next
        if token == provider.vocab.eos_id:
            break
        generated.append(token)
        prefix.append(token)
        word = provider.decode([token]).strip()
        if word and session.is_entity(word):
            mem.push(stem(word))
    return GenerationResult(generated, provider.decode(generated), steps, error)


def decode_sampling(
    session: DecodingSession,
    context: Sequence[int],
    config: DecodingConfig,
    seed: int = 0,
) -> GenerationResult:
    """Plain ancestral sampling with top-p/top-k truncation."""
    provider = session.provider
    rng = np.random.default_rng(seed)
    prefix = list(context)
    generated: list[int] = []
    error = None
    for _ in range(config.max_length):
        try:
            base = provider.next_distribution(prefix)
            token = sample_from(base, config.top_p, config.top_k, rng)
        except Exception as exc:
            log.warning("generation aborted: %s", exc)
            error = str(exc)
            break
        if token == provider.vocab.eos_id:
            break
        generated.append(token)
        prefix.append(token)
    return GenerationResult(generated, provider.decode(generated), [], error)


def decode_greedy(
    session: DecodingSession,
    context: Sequence[int],
    config: DecodingConfig,
    seed: int = 0,
) -> GenerationResult:
    """Argmax at every step; equivalent to beam_size=1."""
    provider = session.provider
    prefix = list(context)
    generated: list[int] = []
    error = None
    for _ in range(config.max_length):
        try:
            base = provider.next_distribution(prefix)
            token = int(np.argmax(base.probs()))
        except Exception as exc:
            log.warning("generation aborted: %s", exc)
            error = str(exc)
            break
        if token == provider.vocab.eos_id:
            break
        generated.append(token)
        prefix.append(token)
    return GenerationResult(generated, provider.decode(generated), [], error)


def decode_beam(
    session: DecodingSession,
    context: Sequence[int],
    config: DecodingConfig,
    seed: int = 0,
) -> GenerationResult:
    """Length-normalized beam search.

    Hypotheses are scored by mean token log-probability (EOS included
    when a hypothesis finishes).  Ties break toward lower token ids.
    """
    provider = session.provider
    width = config.beam_size
    # (tokens, total logprob, finished)
    beams: list[tuple[tuple[int, ...], float, bool]] = [((), 0.0, False)]
    error = None
    try:
        for _ in range(config.max_length):
            if all(done for _, _, done in beams):
                break
            candidates: list[tuple[tuple[int, ...], float, bool]] = []
            for tokens, score, done in beams:
                if done:
                    candidates.append((tokens, score, True))
                    continue
                dist = provider.next_distribution(list(context) + list(tokens))
                logp = dist.log_probs()
                top = np.lexsort((np.arange(logp.size), -logp))[:width]
                for tok in sorted(int(t) for t in top):
                    candidates.append(
                        (
                            tokens + (int(tok),),
                            score + float(logp[tok]),
                            int(tok) == provider.vocab.eos_id,
                        )
                    )
            candidates.sort(key=lambda c: (-_mean_logprob(c), c[0]))
            beams = candidates[:width]
        finished = [b for b in beams if b[2]] or beams
        best_tokens, _, done = max(
            finished, key=lambda c: (_mean_logprob(c), [-t for t in c[0]])
        )
    except Exception as exc:
        log.warning("generation aborted: %s", exc)
        return GenerationResult([], "", [], str(exc))
    out = [t for t in best_tokens if t != provider.vocab.eos_id]
    return GenerationResult(out, provider.decode(out), [], error)


def _mean_logprob(candidate: tuple[tuple[int, ...], float, bool]) -> float:
    tokens, total, _ = candidate
    return total / max(1, len(tokens))


DECODE_FUNCS = {
    "kid": decode_kid,
    "sampling": decode_sampling,
    "greedy": decode_greedy,
    "beam": decode_beam,
}
