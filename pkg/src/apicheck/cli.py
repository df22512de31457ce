"""Command-line surface over the library modules.

Exit codes: 0 success, 1 domain error (parse failure, malformed file, ...),
2 usage error. Machine-readable results go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import constraints, decode, metrics, retrieval, spec as apispec, topconvert
from .expr import Grounded, ParseError, flatten, parse, serialize

DEFAULT_SEED = 17
DEFAULT_DESCRIPTION = (
    "Follow the examples below and generate API Calls from the users' utterances"
)


class DomainError(Exception):
    pass


def _load_spec(path: str) -> apispec.ApiSpec:
    try:
        return apispec.load_spec(path)
    except (OSError, apispec.SpecFormatError) as e:
        raise DomainError(str(e)) from e


def _load_vocab(path: str) -> decode.Vocab:
    try:
        return decode.load_vocab(path)
    except (OSError, decode.VocabFormatError) as e:
        raise DomainError(str(e)) from e


def _load_examples(path: str, require_api_call: bool = False) -> list[topconvert.Example]:
    try:
        return topconvert.load_examples(path, require_api_call=require_api_call)
    except (OSError, topconvert.ExampleFormatError) as e:
        raise DomainError(str(e)) from e


def _cmd_parse(args) -> int:
    try:
        call = parse(args.expression)
    except ParseError as e:
        raise DomainError(str(e)) from e
    print(serialize(call))
    return 0


def _cmd_flatten(args) -> int:
    try:
        call = parse(args.expression)
    except ParseError as e:
        raise DomainError(str(e)) from e
    for flat in flatten(call):
        rec = {"index": flat.index, "function": flat.function, "args": []}
        for name, value in flat.args:
            if isinstance(value, Grounded):
                rec["args"].append({"name": name, "text": value.text})
            else:
                rec["args"].append({"name": name, "child": value.child_index})
        print(json.dumps(rec, sort_keys=True))
    return 0


def _cmd_derive_spec(args) -> int:
    examples = _load_examples(args.examples, require_api_call=True)
    derived = apispec.derive_from_corpus([parse(e.api_call) for e in examples])
    if args.out:
        apispec.save_spec(derived, args.out)
    else:
        doc = {
            "functions": sorted(derived.functions),
            "arguments": sorted(derived.arguments),
            "associations": {f: sorted(a) for f, a in sorted(derived.associations.items())},
        }
        print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def _cmd_check(args) -> int:
    loaded = _load_spec(args.spec)
    try:
        lines = Path(args.predictions).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DomainError(str(e)) from e
    reports = [constraints.check(line, loaded) for line in lines if line.strip()]
    if not reports:
        raise DomainError(f"{args.predictions}: no predictions")
    for report in reports:
        print(constraints.format_report_line(report))
    print(constraints.format_summary(constraints.violation_rates(reports)))
    return 0


def _cmd_eval(args) -> int:
    loaded = _load_spec(args.spec)
    pairs: list[metrics.EvalPair] = []
    texts: list[str] = []
    try:
        with open(args.pairs, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as e:
                    raise DomainError(f"{args.pairs}:{lineno}: invalid JSON: {e.msg}") from e
                for key in ("gold", "predicted"):
                    if not isinstance(rec.get(key), str):
                        raise DomainError(f"{args.pairs}:{lineno}: missing field {key!r}")
                try:
                    parse(rec["gold"])
                except ParseError as e:
                    raise DomainError(f"{args.pairs}:{lineno}: gold does not parse ({e})") from e
                pairs.append(
                    metrics.EvalPair(rec["gold"], rec["predicted"], rec.get("utterance", ""))
                )
                texts.append(rec["predicted"])
    except OSError as e:
        raise DomainError(str(e)) from e
    if not pairs:
        raise DomainError(f"{args.pairs}: no evaluation pairs")
    report = metrics.evaluate(pairs)
    rates = constraints.violation_rates([constraints.check(t, loaded) for t in texts])
    print(f"examples: {report.n}")
    print(f"exact match: {report.exact_match:.4f}")
    print(f"intent F1: {report.intent_f1:.4f}")
    print(f"slot F1: {report.slot_f1:.4f}")
    print(constraints.format_summary(rates))
    return 0


def _cmd_convert_top(args) -> int:
    examples = _load_examples(args.infile)
    converted = []
    for example in examples:
        try:
            converted.append(topconvert.convert_example(example))
        except (topconvert.TopFormatError, topconvert.TopConvertError) as e:
            raise DomainError(f"example {example.id!r}: {e}") from e
    if args.out:
        topconvert.write_examples(converted, args.out)
    else:
        for e in converted:
            rec = {"id": e.id, "domain": e.domain, "utterance": e.utterance,
                   "api_call": e.api_call, "top_parse": e.top_parse}
            print(json.dumps(rec, sort_keys=True))
    return 0


def _cmd_sample_spis(args) -> int:
    examples = _load_examples(args.infile, require_api_call=True)
    try:
        sampled = topconvert.spis_sample(examples, args.n, args.seed)
    except ValueError as e:
        raise DomainError(str(e)) from e
    if args.out:
        topconvert.write_examples(sampled, args.out)
    else:
        for e in sampled:
            print(json.dumps({"id": e.id, "domain": e.domain, "utterance": e.utterance,
                              "api_call": e.api_call}, sort_keys=True))
    return 0


def _build_index(args) -> retrieval.DemoIndex:
    pool = _load_examples(args.pool, require_api_call=True)
    if args.embeddings:
        try:
            embedder: retrieval.Embedder = retrieval.PrecomputedEmbedder.from_file(args.embeddings)
        except (OSError, ValueError) as e:
            raise DomainError(str(e)) from e
    else:
        embedder = retrieval.HashedBowEmbedder()
    try:
        return retrieval.build_index(pool, embedder)
    except (ValueError, retrieval.EmbeddingLookupError) as e:
        raise DomainError(str(e)) from e


def _cmd_retrieve(args) -> int:
    index = _build_index(args)
    try:
        ranked = retrieval.retrieve_scored(index, args.query, args.k)
    except (ValueError, retrieval.EmbeddingLookupError) as e:
        raise DomainError(str(e)) from e
    for example, sim in ranked:
        print(f"{example.id}\t{sim:.6f}\t{example.utterance}")
    return 0


def _cmd_prompt(args) -> int:
    index = _build_index(args)
    description = DEFAULT_DESCRIPTION
    if args.desc_file:
        try:
            description = Path(args.desc_file).read_text(encoding="utf-8").rstrip("\n")
        except OSError as e:
            raise DomainError(str(e)) from e
    try:
        demos = retrieval.retrieve(index, args.query, args.k)
        query_text = args.query_text if args.query_text is not None else args.query
        print(retrieval.build_prompt(description, demos, query_text))
    except (ValueError, retrieval.EmbeddingLookupError) as e:
        raise DomainError(str(e)) from e
    return 0


def _cmd_decode_sim(args) -> int:
    loaded = _load_spec(args.spec)
    vocab = _load_vocab(args.vocab)
    reports = []
    incomplete = 0
    for run in range(args.runs):
        try:
            text = decode.mock_decode(
                loaded, vocab, args.seed + run, args.max_steps,
                args.max_string_len, args.max_depth,
            )
        except decode.DecodeError as e:
            if isinstance(e, decode.IncompleteDecodeError):
                incomplete += 1
                print(f"run {run}: INCOMPLETE {e.emitted!r}", file=sys.stderr)
                continue
            raise DomainError(str(e)) from e
        reports.append(constraints.check(text, loaded))
        print(text)
    if reports:
        print(constraints.format_summary(constraints.violation_rates(reports)))
    print(f"runs: {args.runs} completed: {len(reports)} incomplete: {incomplete}")
    return 0 if incomplete == 0 else 1


def _cmd_mask(args) -> int:
    loaded = _load_spec(args.spec)
    vocab = _load_vocab(args.vocab)
    import random as _random

    try:
        state = decode.new_session(loaded, vocab, args.max_string_len, args.max_depth)
    except decode.DecodeError as e:
        raise DomainError(str(e)) from e
    if not args.state_trace:
        ids = sorted(decode.allowed_tokens(state))
        print("0\t" + ",".join(str(i) for i in ids))
        return 0
    rng = _random.Random(args.seed)
    for step in range(args.max_steps):
        ids = sorted(decode.allowed_tokens(state))
        print(f"{step}\t" + ",".join(str(i) for i in ids))
        if state.is_complete or not ids:
            break
        state = decode.advance(state, rng.choice(ids))
    return 0


def _cmd_overhead(args) -> int:
    loaded = _load_spec(args.spec)
    vocab = _load_vocab(args.vocab)
    try:
        report = decode.overhead_report(loaded, vocab, args.steps, args.seed)
    except decode.DecodeError as e:
        raise DomainError(str(e)) from e
    print(f"steps: {report.n_steps}")
    print(f"build time: {report.build_time_s:.6f} s")
    print(f"constrained per-step: {report.constrained_per_step_s * 1e6:.3f} us")
    print(f"baseline per-step: {report.baseline_per_step_s * 1e6:.3f} us")
    print(f"ratio: {report.ratio:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apicheck",
        description="Measure, analyze, and eliminate constraint violations in generated API calls.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse an expression and print its canonical form")
    p.add_argument("expression")
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("flatten", help="print the flattened call list as JSON lines")
    p.add_argument("expression")
    p.set_defaults(func=_cmd_flatten)

    p = sub.add_parser("derive-spec", help="derive an API spec from an example corpus")
    p.add_argument("--examples", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_derive_spec)

    p = sub.add_parser("check", help="check predictions (one per line) against a spec")
    p.add_argument("--spec", required=True)
    p.add_argument("predictions")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("eval", help="semantic-parsing metrics plus violation rates")
    p.add_argument("--spec", required=True)
    p.add_argument("--pairs", required=True, help="JSONL with gold/predicted/utterance")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("convert-top", help="convert top_parse records to api_call records")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_convert_top)

    p = sub.add_parser("sample-spis", help="samples-per-intent-and-slot subset")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_sample_spis)

    p = sub.add_parser("retrieve", help="rank pool examples by similarity to a query")
    p.add_argument("--pool", required=True)
    p.add_argument("--query", required=True,
                   help="query text (or example id when --embeddings is given)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--embeddings")
    p.set_defaults(func=_cmd_retrieve)

    p = sub.add_parser("prompt", help="build an in-context prompt with retrieved demos")
    p.add_argument("--pool", required=True)
    p.add_argument("--query", required=True,
                   help="query text (or example id when --embeddings is given)")
    p.add_argument("--query-text", help="test utterance to print when --query is an id")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--desc-file")
    p.add_argument("--embeddings")
    p.set_defaults(func=_cmd_prompt)

    p = sub.add_parser("decode-sim", help="seeded mock decoding runs plus violation summary")
    p.add_argument("--spec", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--max-steps", type=int, default=4096)
    p.add_argument("--max-string-len", type=int, default=64)
    p.add_argument("--max-depth", type=int, default=3)
    p.set_defaults(func=_cmd_decode_sim)

    p = sub.add_parser("mask", help="dump allowed-token sets per step")
    p.add_argument("--spec", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--state-trace", action="store_true")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--max-steps", type=int, default=4096)
    p.add_argument("--max-string-len", type=int, default=64)
    p.add_argument("--max-depth", type=int, default=3)
    p.set_defaults(func=_cmd_mask)

    p = sub.add_parser("overhead", help="constrained vs. unconstrained per-step timing")
    p.add_argument("--spec", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--steps", type=int, default=10000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=_cmd_overhead)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DomainError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
