"""Knowledge-infused decoding: steer a language model toward retrieved facts.

The pipeline: chunk a corpus (`retrieval`), pull fact triplets out of the
top-ranked chunks (`knowledge`), file them in a stem-keyed trie, and at
every generation step nudge the model's next-token distribution toward
the facts reachable from recently generated entities (`policy`,
`decoding`), keeping the perturbation inside a KL trust region.
"""
from .bench import BenchmarkReport, CaseOutcome, run_benchmark
from .decoding import (
    DECODE_FUNCS,
    DECODER_CHOICES,
    DecodingConfig,
    DecodingSession,
    GenerationResult,
    StepTrace,
    decode_beam,
    decode_greedy,
    decode_kid,
    decode_sampling,
    sample_from,
)
from .errors import (
    ConfigError,
    DegenerateQueryError,
    InputError,
    KidError,
    ProtocolError,
    TrieFormatError,
)
from .knowledge import (
    KnowledgeTrie,
    TrieEntry,
    Triplet,
    build_trie,
    deserialize,
    extract_triplets,
    query,
    serialize,
)
from .lm import (
    NgramProvider,
    PolicyDistribution,
    PolicyProvider,
    RemoteProvider,
    UniformProvider,
    Vocabulary,
    serve_lines,
    train_ngram,
)
from .memory import LocalMemory, entity_predicate
from .metrics import (
    EvalRecord,
    bleu1,
    coverage,
    evaluate_records,
    precision_at_1,
    rouge_l,
    unigram_f1,
)
from .policy import (
    DemonstrationSet,
    GuidanceConfig,
    StepOutcome,
    adapt_beta,
    guide_step,
    kl_divergence,
    knowledge_gain,
    surrogate_gradient,
    surrogate_value,
)
from .retrieval import (
    Chunk,
    ChunkStore,
    DenseScorer,
    Document,
    RetrievalResult,
    TfidfScorer,
    ingest_corpus,
    load_chunks,
    retrieve,
    save_chunks,
)
from .synthetic import SyntheticTask, build_task, load_task, save_task
from .textnorm import content_stems, normalize_text, split_sentences, stem, word_tokens

__version__ = "0.1.0"

__all__ = [
    "BenchmarkReport",
    "CaseOutcome",
    "Chunk",
    "ChunkStore",
    "ConfigError",
    "DECODER_CHOICES",
    "DECODE_FUNCS",
    "DegenerateQueryError",
    "DemonstrationSet",
    "DenseScorer",
    "Document",
    "DecodingConfig",
    "DecodingSession",
    "EvalRecord",
    "GenerationResult",
    "GuidanceConfig",
    "InputError",
    "KidError",
    "KnowledgeTrie",
    "LocalMemory",
    "NgramProvider",
    "PolicyDistribution",
    "PolicyProvider",
    "ProtocolError",
    "RemoteProvider",
    "RetrievalResult",
    "StepOutcome",
    "StepTrace",
    "SyntheticTask",
    "TfidfScorer",
    "TrieEntry",
    "TrieFormatError",
    "Triplet",
    "UniformProvider",
    "Vocabulary",
    "adapt_beta",
    "bleu1",
    "build_task",
    "build_trie",
    "content_stems",
    "coverage",
    "decode_beam",
    "decode_greedy",
    "decode_kid",
    "decode_sampling",
    "deserialize",
    "entity_predicate",
    "evaluate_records",
    "extract_triplets",
    "guide_step",
    "ingest_corpus",
    "kl_divergence",
    "knowledge_gain",
    "load_chunks",
    "load_task",
    "normalize_text",
    "precision_at_1",
    "query",
    "retrieve",
    "rouge_l",
    "run_benchmark",
    "sample_from",
    "save_chunks",
    "save_task",
    "serialize",
    "serve_lines",
    "split_sentences",
    "stem",
    "surrogate_gradient",
    "surrogate_value",
    "train_ngram",
    "unigram_f1",
    "word_tokens",
]
