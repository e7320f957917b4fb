"""Language-model access: local word-level providers and a wire client.

A policy provider turns a token-id prefix into a full-vocabulary logits
vector.  Two providers run in-process (uniform, add-k-smoothed n-gram);
``RemoteProvider`` speaks a newline-delimited JSON protocol to an
external process serving any tokenizer + logits pair, so the decoding
side never needs to know what model is behind it.

Wire protocol, one JSON object per line, one response per request:

    {"id": 1, "method": "hello"}
        -> {"id": 1, "vocab": [...], "bos": int, "eos": int, "unk": int}
    {"id": 2, "method": "logits", "tokens": [int, ...]}
        -> {"id": 2, "logits": [float, ...]}        # length == |vocab|
    {"id": 3, "method": "encode", "text": "..."}
        -> {"id": 3, "tokens": [int, ...]}
    {"id": 4, "method": "decode", "tokens": [int, ...]}
        -> {"id": 4, "text": "..."}

Failures come back as {"id": n, "error": {"code": int, "message": str}}.
"""
from __future__ import annotations

import json
import shlex
import socket
import subprocess
from typing import Iterable, Sequence

import numpy as np

from .errors import ProtocolError

BOS, EOS, UNK = "<s>", "</s>", "<unk>"

#: Finite stand-in for "probability zero" so logits vectors never hold -inf.
NEG_LOGIT = -1e9


class Vocabulary:
    """Token table with reserved sentinel ids."""

    def __init__(self, tokens: Sequence[str], bos_id: int, eos_id: int, unk_id: int):
        self.tokens = tuple(tokens)
        self.bos_id = bos_id
        self.eos_id = eos_id
        self.unk_id = unk_id
        self.index = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")
        for name, i in (("bos", bos_id), ("eos", eos_id), ("unk", unk_id)):
            if not 0 <= i < len(self.tokens):
                raise ValueError(f"{name} id {i} out of range")

    @classmethod
    def build(cls, words: Iterable[str]) -> "Vocabulary":
        """Reserved sentinels first, then the corpus words, sorted."""
        rest = sorted(set(words) - {BOS, EOS, UNK})
        return cls((BOS, EOS, UNK, *rest), 0, 1, 2)

    def __len__(self) -> int:
        return len(self.tokens)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def encode_token(self, word: str) -> int:
        return self.index.get(word, self.unk_id)


class PolicyDistribution:
    """A next-token distribution, kept in logit form."""

    def __init__(self, logits: np.ndarray):
        arr = np.asarray(logits, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("logits must be a non-empty 1-D vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("logits must be finite")
        self.logits = arr

    def log_probs(self) -> np.ndarray:
        m = self.logits.max()
        shifted = self.logits - m
        return shifted - np.log(np.exp(shifted).sum())

    def probs(self) -> np.ndarray:
        e = np.exp(self.logits - self.logits.max())
        return e / e.sum()


class PolicyProvider:
    """Base class: a vocabulary plus prefix -> next-token logits."""

    vocab: Vocabulary

    def next_distribution(self, prefix: Sequence[int]) -> PolicyDistribution:
        raise NotImplementedError

    def encode(self, text: str) -> list[int]:
        return [self.vocab.encode_token(w) for w in text.split()]

    def decode(self, token_ids: Sequence[int]) -> str:
        return " ".join(self.vocab.tokens[i] for i in token_ids)

    def demo_token_ids(self, word: str) -> list[int]:
        """Vocabulary ids for a demonstration word; unknown words drop."""
        ids = [i for i in self.encode(word) if i != self.vocab.unk_id]
        return ids[:1]

    def close(self) -> None:
        pass


class UniformProvider(PolicyProvider):
    """Every token equally likely; handy as a null model."""

    def __init__(self, vocab: Vocabulary):
        self.vocab = vocab

    def next_distribution(self, prefix: Sequence[int]) -> PolicyDistribution:
        return PolicyDistribution(np.zeros(len(self.vocab)))


class NgramProvider(PolicyProvider):
    """Add-k-smoothed n-gram over a word vocabulary.

    BOS is context-only: it can never be predicted, so its logit is
    pinned to NEG_LOGIT and the smoothing denominator counts |V| - 1
    continuation tokens.
    """

    def __init__(
        self,
        vocab: Vocabulary,
        order: int,
        k: float,
        counts: dict[tuple[int, ...], dict[int, int]],
    ):
        self.vocab = vocab
        self.order = order
        self.k = k
        self._counts = counts
        self._totals = {ctx: sum(c.values()) for ctx, c in counts.items()}
        self._cache: dict[tuple[int, ...], np.ndarray] = {}

    def _context(self, prefix: Sequence[int]) -> tuple[int, ...]:
        need = self.order - 1
        padded = [self.vocab.bos_id] * max(0, need - len(prefix)) + list(prefix)[-need:]
        return tuple(padded)

    def next_distribution(self, prefix: Sequence[int]) -> PolicyDistribution:
        ctx = self._context(prefix)
        logits = self._cache.get(ctx)
        if logits is None:
            n_continuations = len(self.vocab) - 1
            counts = self._counts.get(ctx, {})
            total = self._totals.get(ctx, 0)
            vec = np.full(len(self.vocab), self.k, dtype=np.float64)
            for tok, c in counts.items():
                vec[tok] += c
            vec[self.vocab.bos_id] = 0.0
            probs = vec / (total + self.k * n_continuations)
            logits = np.where(probs > 0, np.log(np.maximum(probs, 1e-300)), NEG_LOGIT)
            self._cache[ctx] = logits
        return PolicyDistribution(logits.copy())


def train_ngram(
    corpus: Iterable[Sequence[str]], order: int, k: float = 0.01
) -> NgramProvider:
    """Count n-grams over token sequences; each sequence ends in EOS."""
    if not 2 <= order <= 5:
        raise ValueError(f"order must be in 2..5, got {order}")
    if k <= 0:
        raise ValueError(f"smoothing k must be > 0, got {k}")
    sentences = [list(s) for s in corpus]
    if not sentences:
        raise ValueError("training corpus is empty")
    vocab = Vocabulary.build(w for s in sentences for w in s)
    counts: dict[tuple[int, ...], dict[int, int]] = {}
    for sentence in sentences:
        ids = [vocab.encode_token(w) for w in sentence] + [vocab.eos_id]
        history = [vocab.bos_id] * (order - 1)
        for tok in ids:
            ctx = tuple(history)
            bucket = counts.setdefault(ctx, {})
            bucket[tok] = bucket.get(tok, 0) + 1
            history = history[1:] + [tok]
    return NgramProvider(vocab, order, k, counts)


class LineTransport:
    """Client side of the line protocol over a socket or child process."""

    def __init__(self, rfile, wfile, on_close=None):
        self._rfile = rfile
        self._wfile = wfile
        self._on_close = on_close
        self._next_id = 0

    @classmethod
    def tcp(cls, host: str, port: int, timeout: float = 10.0) -> "LineTransport":
        try:
            sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise ProtocolError(f"cannot connect to {host}:{port}: {exc}") from exc
        rfile = sock.makefile("r", encoding="utf-8")
        wfile = sock.makefile("w", encoding="utf-8")
        return cls(rfile, wfile, on_close=sock.close)

    @classmethod
    def stdio(cls, command: str | Sequence[str]) -> "LineTransport":
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        try:
            proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ProtocolError(f"cannot spawn {argv!r}: {exc}") from exc

        def close():
            proc.stdin.close()
            proc.wait(timeout=10)

        return cls(proc.stdout, proc.stdin, on_close=close)

    def request(self, method: str, **params) -> dict:
        self._next_id += 1
        req_id = self._next_id
        frame = {"id": req_id, "method": method, **params}
        try:
            self._wfile.write(json.dumps(frame) + "\n")
            self._wfile.flush()
            line = self._rfile.readline()
        except OSError as exc:
            raise ProtocolError(f"transport failed during {method!r}: {exc}") from exc
        if not line:
            raise ProtocolError(f"connection closed during {method!r}")
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"unparseable reply to {method!r}: {exc}") from exc
        if reply.get("id") != req_id:
            raise ProtocolError(
                f"reply id {reply.get('id')!r} does not match request id {req_id}"
            )
        if "error" in reply:
            err = reply["error"] or {}
            raise ProtocolError(
                f"remote error {err.get('code')}: {err.get('message')}"
            )
        return reply

    def close(self) -> None:
        for fh in (self._wfile, self._rfile):
            try:
                fh.close()
            except OSError:
                pass
        if self._on_close:
            self._on_close()


class RemoteProvider(PolicyProvider):
    """Policy provider backed by an external process over the wire."""

    def __init__(self, transport: LineTransport):
        self._transport = transport
        hello = transport.request("hello")
        try:
            self.vocab = Vocabulary(
                hello["vocab"], int(hello["bos"]), int(hello["eos"]), int(hello["unk"])
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"bad hello reply: {exc}") from exc

    @classmethod
    def connect_tcp(cls, host: str, port: int, timeout: float = 10.0) -> "RemoteProvider":
        return cls(LineTransport.tcp(host, port, timeout))

    @classmethod
    def spawn(cls, command: str | Sequence[str]) -> "RemoteProvider":
        return cls(LineTransport.stdio(command))

    def next_distribution(self, prefix: Sequence[int]) -> PolicyDistribution:
        reply = self._transport.request("logits", tokens=list(map(int, prefix)))
        logits = reply.get("logits")
        if not isinstance(logits, list) or len(logits) != len(self.vocab):
            raise ProtocolError(
                f"logits reply has length {len(logits) if isinstance(logits, list) else 'N/A'}, "
                f"expected {len(self.vocab)}"
            )
        return PolicyDistribution(np.asarray(logits, dtype=np.float64))

    def encode(self, text: str) -> list[int]:
        reply = self._transport.request("encode", text=text)
        tokens = reply.get("tokens")
        if not isinstance(tokens, list):
            raise ProtocolError("encode reply missing token list")
        return [int(t) for t in tokens]

    def decode(self, token_ids: Sequence[int]) -> str:
        reply = self._transport.request("decode", tokens=list(map(int, token_ids)))
        text = reply.get("text")
        if not isinstance(text, str):
            raise ProtocolError("decode reply missing text")
        return text

    def demo_token_ids(self, word: str) -> list[int]:
        # subword tokenizers may split a word; anchor on the first piece
        ids = self.encode(word)
        return ids[:1] if ids and ids[0] != self.vocab.unk_id else []

    def close(self) -> None:
        self._transport.close()


def serve_lines(provider: PolicyProvider, rfile, wfile) -> None:
    """Serve a provider over the line protocol (reference server loop).

    Used to exercise the client against in-process providers; external
    adapters implement the same contract.
    """
    for line in rfile:
        if not line.strip():
            continue
        req_id = -1
        try:
            frame = json.loads(line)
            req_id = frame.get("id", -1)
            method = frame.get("method")
            if method == "hello":
                v = provider.vocab
                reply = {
                    "id": req_id,
                    "vocab": list(v.tokens),
                    "bos": v.bos_id,
                    "eos": v.eos_id,
                    "unk": v.unk_id,
                }
            elif method == "logits":
                tokens = _id_list(frame, len(provider.vocab))
                dist = provider.next_distribution(tokens)
                reply = {"id": req_id, "logits": dist.logits.tolist()}
            elif method == "encode":
                if not isinstance(frame.get("text"), str):
                    raise ValueError("encode needs a 'text' string")
                reply = {"id": req_id, "tokens": provider.encode(frame["text"])}
            elif method == "decode":
                tokens = _id_list(frame, len(provider.vocab))
                reply = {"id": req_id, "text": provider.decode(tokens)}
            else:
                raise ValueError(f"unknown method: {method!r}")
        except (json.JSONDecodeError, ValueError, TypeError, KeyError) as exc:
            reply = {"id": req_id, "error": {"code": 400, "message": str(exc)}}
        except Exception as exc:  # noqa: BLE001 - keep the loop alive
            reply = {"id": req_id, "error": {"code": 500, "message": str(exc)}}
        wfile.write(json.dumps(reply) + "\n")
        wfile.flush()


def _id_list(frame: dict, vocab_size: int) -> list[int]:
    tokens = frame.get("tokens")
    if not isinstance(tokens, list):
        raise ValueError("request needs a 'tokens' list")
    ids = [int(t) for t in tokens]
    for i in ids:
        if not 0 <= i < vocab_size:
            raise ValueError(f"token id {i} out of range")
    return ids
