"""Command-line interface.

Commands: ingest, build-trie, decode, benchmark, eval, synth.  Flags can
come from a JSON config file (flat keys named like the flags); explicit
flags win over the file, the file wins over built-in defaults.  The
``KID_LOG`` environment variable (error|info|debug) sets stderr log
verbosity.

Exit codes: 0 ok, 2 bad configuration, 3 missing/unreadable input,
4 remote-protocol failure, 5 internal error.  Failures print a one-line
JSON object to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import knowledge
from .bench import run_benchmark
from .decoding import (
    DECODE_FUNCS,
    DECODER_CHOICES,
    DecodingConfig,
    DecodingSession,
)
from .errors import ConfigError, InputError, ProtocolError
from .lm import PolicyProvider, RemoteProvider, UniformProvider, Vocabulary, train_ngram
from .metrics import EvalRecord, evaluate_records, read_eval_records
from .policy import GuidanceConfig
from .report import write_report
from .retrieval import Document, ingest_corpus, load_chunks, retrieve, save_chunks
from .synthetic import build_task, load_task, save_task

log = logging.getLogger(__name__)

_D = DecodingConfig()
_G = GuidanceConfig()

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging() -> None:
    level = os.environ.get("KID_LOG", "error").lower()
    if level not in _LOG_LEVELS:
        level = "error"
    logging.basicConfig(
        stream=sys.stderr,
        level=_LOG_LEVELS[level],
        format="%(levelname)s %(name)s: %(message)s",
    )


def _add_decoding_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; explicit flags override it")
    p.add_argument("--h-max", type=int, help=f"trie query hop depth (default: {_D.h_max})")
    p.add_argument("--w-max", type=int, help="local memory capacity (default: h_max)")
    p.add_argument("--k-docs", type=int, help=f"retrieved chunks per context (default: {_D.k_docs})")
    p.add_argument("--max-length", type=int, help=f"generation length cap (default: {_D.max_length})")
    p.add_argument("--top-p", type=float, help=f"nucleus cutoff (default: {_D.top_p})")
    p.add_argument("--top-k", type=int, help=f"top-k cutoff, 0 disables (default: {_D.top_k})")
    p.add_argument("--beam-size", type=int, help=f"beam width (default: {_D.beam_size})")
    p.add_argument("--sigma", type=float, help=f"KL band center for beta adaptation (default: {_G.sigma})")
    p.add_argument("--beta-init", type=float, help=f"initial KL penalty (default: {_G.beta_init})")
    p.add_argument("--inner-steps", type=int, help=f"optimizer steps per token (default: {_G.inner_steps})")
    p.add_argument("--learning-rate", type=float, help=f"per-token optimizer step size (default: {_G.learning_rate})")
    p.add_argument("--estimator", choices=("exact", "monte_carlo"), help=f"guidance estimator (default: {_G.estimator})")
    p.add_argument("--mc-samples", type=int, help=f"samples for monte_carlo (default: {_G.mc_samples})")
    p.add_argument("--seed", type=int, help="base seed for all sampling (default: 0)")


def _add_provider_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--provider", choices=("ngram", "uniform", "remote"), help="policy provider (default: ngram)")
    p.add_argument("--train-corpus", help="text file, one sentence per line (ngram/uniform)")
    p.add_argument("--order", type=int, help="n-gram order, 2..5 (default: 3)")
    p.add_argument("--smoothing", type=float, help="add-k smoothing constant (default: 0.01)")
    p.add_argument("--connect", help="host:port of a running provider (remote)")
    p.add_argument("--spawn", help="command line to launch a provider on stdio (remote)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kid",
        description="Knowledge-guided decoding over a retrieved fact trie.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="chunk a JSON-lines corpus into a chunk store")
    p.add_argument("--corpus", required=True, help="JSON-lines of {id, title, text}")
    p.add_argument("--out", required=True, help="chunk store output path")
    p.add_argument("--chunk-size", type=int, default=100, help="words per chunk (default: 100)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build-trie", help="extract triplets and build a knowledge trie")
    p.add_argument("--chunks", required=True, help="chunk store from `kid ingest`")
    p.add_argument("--context", help="retrieve top chunks for this context first")
    p.add_argument("--context-file", help="file whose contents serve as the context")
    p.add_argument("--k-docs", type=int, default=_D.k_docs, help=f"chunks to retrieve (default: {_D.k_docs})")
    p.add_argument("--resolve-pronouns", action="store_true", help="rewrite third-person pronouns before extraction")
    p.add_argument("--out", required=True, help="trie output path")
    p.set_defaults(func=cmd_build_trie)

    p = sub.add_parser("decode", help="generate continuations for contexts")
    p.add_argument("--contexts", required=True, help="JSON-lines of {id?, context}")
    p.add_argument("--decoder", choices=DECODER_CHOICES, help="decoding strategy (default: kid)")
    p.add_argument("--trie", help="serialized trie shared by all contexts")
    p.add_argument("--chunks", help="chunk store; retrieve + build a trie per context")
    p.add_argument("--diagnostics", action="store_true", help="include per-step diagnostics in output")
    p.add_argument("--out", help="output path (default: stdout)")
    _add_provider_flags(p)
    _add_decoding_flags(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("benchmark", help="compare decoders on a task file")
    p.add_argument("--task", required=True, help="task file from `kid synth` (or same shape)")
    p.add_argument("--out-dir", required=True, help="directory for report.csv and figures")
    p.add_argument("--decoders", help=f"comma-separated subset of {','.join(DECODER_CHOICES)}")
    p.add_argument("--jobs", type=int, help="parallel sessions (default: 1)")
    _add_decoding_flags(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("eval", help="score predictions against references")
    p.add_argument("--records", help="JSON-lines of full eval records")
    p.add_argument("--pred", help="JSON-lines of {id?, text} predictions")
    p.add_argument("--refs", help="JSON-lines of {id?, references, triplets?}")
    p.add_argument("--out", help="write the JSON summary here as well as stdout")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate the synthetic benchmark task file")
    p.add_argument("--out", required=True, help="task file output path")
    p.add_argument("--entities", type=int, default=200, help="number of entities (default: 200)")
    p.add_argument("--seed", type=int, default=7, help="generator seed (default: 7)")
    p.set_defaults(func=cmd_synth)
    return parser


def _apply_config_file(args: argparse.Namespace) -> None:
    path = getattr(args, "config", None)
    if not path:
        return
    with open(path, "r", encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config file {path!r} must hold a JSON object")
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest == "config" or not hasattr(args, dest):
            raise ConfigError(f"config file {path!r}: unknown key {key!r}")
        if getattr(args, dest) is None:
            setattr(args, dest, value)


def _pick(value, default):
    return default if value is None else value


def _decoding_config(args: argparse.Namespace) -> DecodingConfig:
    try:
        guidance = GuidanceConfig(
            sigma=_pick(args.sigma, _G.sigma),
            beta_init=_pick(args.beta_init, _G.beta_init),
            inner_steps=_pick(args.inner_steps, _G.inner_steps),
            learning_rate=_pick(args.learning_rate, _G.learning_rate),
            estimator=_pick(args.estimator, _G.estimator),
            mc_samples=_pick(args.mc_samples, _G.mc_samples),
        )
        return DecodingConfig(
            h_max=_pick(args.h_max, _D.h_max),
            w_max=args.w_max,
            k_docs=_pick(args.k_docs, _D.k_docs),
            max_length=_pick(args.max_length, _D.max_length),
            top_p=_pick(args.top_p, _D.top_p),
            top_k=_pick(args.top_k, _D.top_k),
            beam_size=_pick(args.beam_size, _D.beam_size),
            guidance=guidance,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _make_provider(args: argparse.Namespace) -> PolicyProvider:
    kind = _pick(args.provider, "ngram")
    if kind == "remote":
        if args.connect:
            host, _, port = args.connect.rpartition(":")
            if not host or not port.isdigit():
                raise ConfigError(f"--connect must be host:port, got {args.connect!r}")
            return RemoteProvider.connect_tcp(host, int(port))
        if args.spawn:
            return RemoteProvider.spawn(args.spawn)
        raise ConfigError("remote provider needs --connect or --spawn")
    if not args.train_corpus:
        raise ConfigError(f"{kind} provider needs --train-corpus")
    sentences = _read_sentences(args.train_corpus)
    if kind == "uniform":
        return UniformProvider(Vocabulary.build(w for s in sentences for w in s))
    try:
        return train_ngram(
            sentences, order=_pick(args.order, 3), k=_pick(args.smoothing, 0.01)
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _read_sentences(path: str) -> list[list[str]]:
    with open(path, "r", encoding="utf-8") as fh:
        return [line.split() for line in fh if line.strip()]


def _read_jsonl(path: str) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{line_no}: bad JSON: {exc}") from exc
            if not isinstance(row, dict):
                raise InputError(f"{path}:{line_no}: expected an object")
            rows.append(row)
    return rows


def _emit(obj: dict, out_path: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)


def cmd_ingest(args: argparse.Namespace) -> int:
    docs = []
    for row in _read_jsonl(args.corpus):
        try:
            docs.append(Document(str(row["id"]), str(row.get("title", "")), str(row["text"])))
        except KeyError as exc:
            raise InputError(f"corpus record missing field {exc}") from exc
    store = ingest_corpus(docs, chunk_size=args.chunk_size)
    save_chunks(store, args.out)
    log.info("ingested %d documents into %d chunks", len(docs), len(store))
    print(json.dumps({"documents": len(docs), "chunks": len(store), "out": args.out}))
    return 0


def cmd_build_trie(args: argparse.Namespace) -> int:
    store = load_chunks(args.chunks)
    context = args.context
    if context is None and args.context_file:
        with open(args.context_file, "r", encoding="utf-8") as fh:
            context = fh.read()
    if context is not None:
        hits = retrieve(store, context, k=args.k_docs)
        texts = [hit.chunk.text() for hit in hits]
    else:
        texts = [chunk.text() for chunk in store.chunks]
    triplets = []
    for text in texts:
        triplets.extend(
            knowledge.extract_triplets(text, resolve_pronouns=args.resolve_pronouns)
        )
    trie = knowledge.build_trie(triplets)
    with open(args.out, "wb") as fh:
        fh.write(knowledge.serialize(trie))
    print(
        json.dumps(
            {"keys": len(trie), "triplets": trie.triplet_count, "out": args.out}
        )
    )
    return 0


def cmd_decode(args: argparse.Namespace) -> int:
    config = _decoding_config(args)
    decoder = _pick(args.decoder, "kid")
    contexts = _read_jsonl(args.contexts)
    for row in contexts:
        if "context" not in row:
            raise InputError("every context record needs a 'context' field")
    shared_trie = None
    if args.trie:
        with open(args.trie, "rb") as fh:
            shared_trie = knowledge.deserialize(fh.read())
    store = load_chunks(args.chunks) if args.chunks else None
    provider = _make_provider(args)
    base_seed = _pick(args.seed, 0)
    out_fh = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for i, row in enumerate(contexts):
            context = str(row["context"])
            trie = shared_trie
            if store is not None:
                hits = retrieve(store, context, k=config.k_docs)
                triplets = []
                for hit in hits:
                    triplets.extend(knowledge.extract_triplets(hit.chunk.text()))
                trie = knowledge.build_trie(triplets)
            session = DecodingSession(provider, trie)
            result = DECODE_FUNCS[decoder](
                session, provider.encode(context), config, seed=base_seed + i
            )
            record = {"id": row.get("id", i), "decoder": decoder}
            record.update(result.as_dict(diagnostics=args.diagnostics))
            out_fh.write(json.dumps(record) + "\n")
        return 0
    finally:
        if args.out:
            out_fh.close()
        provider.close()


def cmd_benchmark(args: argparse.Namespace) -> int:
    config = _decoding_config(args)
    task = load_task(args.task)
    decoders = (
        tuple(d.strip() for d in args.decoders.split(",") if d.strip())
        if args.decoders
        else tuple(DECODE_FUNCS)
    )
    for d in decoders:
        if d not in DECODE_FUNCS:
            raise ConfigError(f"unknown decoder {d!r}")
    report = run_benchmark(
        task,
        config=config,
        decoders=decoders,
        base_seed=_pick(args.seed, 0),
        jobs=_pick(args.jobs, 1),
    )
    paths = write_report(report, args.out_dir, sigma=config.guidance.sigma)
    _emit(
        {
            "summary": report.summary(),
            "precision_at_1": report.precision_at_1,
            "artifacts": paths,
        },
        None,
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    if args.records:
        records = read_eval_records(args.records)
    elif args.pred and args.refs:
        preds = _read_jsonl(args.pred)
        refs = _read_jsonl(args.refs)
        by_id = {row["id"]: row for row in refs if "id" in row}
        records = []
        for i, pred in enumerate(preds):
            ref = by_id.get(pred.get("id"), refs[i] if i < len(refs) else None)
            if ref is None:
                raise InputError(f"no reference record for prediction {i}")
            merged = dict(ref)
            merged["hypothesis"] = pred.get("text", pred.get("hypothesis", ""))
            merged.setdefault("context", "")
            records.append(EvalRecord.from_json(merged))
    else:
        raise ConfigError("eval needs --records, or --pred together with --refs")
    try:
        summary = evaluate_records(records)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _emit(summary, args.out)
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    task = build_task(n_entities=args.entities, seed=args.seed)
    save_task(task, args.out)
    print(
        json.dumps(
            {
                "cases": len(task.cases),
                "documents": len(task.documents),
                "train_sentences": len(task.train_sentences),
                "out": args.out,
            }
        )
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args)
        return args.func(args)
    except ConfigError as exc:
        return _fail(2, exc)
    except ValueError as exc:
        return _fail(2, exc)
    except (InputError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        return _fail(3, exc)
    except ProtocolError as exc:
        return _fail(4, exc)
    except OSError as exc:
        return _fail(3, exc)
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        return _fail(5, exc)


def _fail(code: int, exc: Exception) -> int:
    payload = {"error": {"code": code, "type": type(exc).__name__, "message": str(exc)}}
    print(json.dumps(payload), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
