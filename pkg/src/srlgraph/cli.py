"""Command-line entry points: train, parse, eval, bench, check."""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
import time
from typing import Optional, Sequence

from .core import DEP_MODE, MODES, SPAN_MODE, SrlError
from .inference import O1, O2, ORDERS
from .io import FORMATS, read_corpus, read_json, read_sentences, write_predictions
from .model import DECODE_TOKENS, Model
from .numeric.serialize import FormatError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PROPERTY = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _load_structures(path: str, mode: str):
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    if path.endswith((".json", ".jsonl")):
        return read_json(path)
    return read_corpus(path, mode)


OVERRIDES = ("epochs", "seed", "order", "mode", "lr", "batch_tokens")


def cmd_train(args) -> int:
    from .training import TrainConfig, read_config, train

    values = read_config(args.config) if args.config else {}
    for key in OVERRIDES:
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        values[k.strip()] = v.strip()
    try:
        cfg = TrainConfig.from_mapping(values)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    corpus = _load_structures(args.train, cfg.mode)
    dev = _load_structures(args.dev, cfg.mode) if args.dev else None
    if not corpus:
        raise SrlError(f"{args.train}: no sentences")
    log_fh = open(args.log, "w", encoding="utf-8") if args.log else None

    def on_epoch(record):
        line = json.dumps(record)
        if log_fh:
            log_fh.write(line + "\n")
            log_fh.flush()
        if not args.quiet:
            print(line, flush=True)

    try:
        result = train(corpus, cfg, dev, on_epoch=on_epoch, checkpoint=args.out)
    finally:
        if log_fh:
            log_fh.close()
    result.model.save(args.out)
    return EXIT_OK


def _workers(n: Optional[int]) -> int:
    return n if n else (os.cpu_count() or 1)


def cmd_parse(args) -> int:
    model = Model.load(args.model)
    sentences = read_sentences(args.input)
    out = model.decode(sentences, order=args.order, batch_tokens=args.batch_tokens, workers=_workers(args.workers))
    write_predictions(out, args.output, args.format, model.mode)
    return EXIT_OK


def cmd_eval(args) -> int:
    from .training import evaluate_f1

    gold = _load_structures(args.gold, args.mode)
    pred = _load_structures(args.pred, args.mode)
    print(evaluate_f1(pred, gold, with_sense=args.mode == DEP_MODE).percent())
    return EXIT_OK


def bench(model: Model, sentences, orders: Sequence[str], repeat: int, batch_tokens: int, workers: int):
    """Median sentences/second per order plus the decoded outputs of the last run."""
    results = {}
    for order in orders:
        model.decode(sentences[: max(1, min(len(sentences), 32))], order=order, batch_tokens=batch_tokens)  # warmup
        times, out = [], None
        for _ in range(repeat):
            start = time.perf_counter()
            out = model.decode(sentences, order=order, batch_tokens=batch_tokens, workers=workers)
            times.append(time.perf_counter() - start)
        results[order] = (len(sentences) / statistics.median(times), out)
    return results


def cmd_bench(args) -> int:
    model = Model.load(args.model)
    if args.input:
        sentences = read_sentences(args.input)
    else:
        from .synth import toy_corpus

        sentences = [s.sentence for s in toy_corpus(args.synthetic, args.seed)]
    orders = [args.order] if args.order else ([O1, O2] if model.order == O2 else [O1])
    res = bench(model, sentences, orders, args.repeat, args.batch_tokens, _workers(args.workers))
    for order in orders:
        print(f"{order} {res[order][0]:.1f} sents/sec (median of {args.repeat}, {len(sentences)} sentences)")
    if len(orders) == 2:
        print(f"ratio O2/O1 {res[O2][0] / res[O1][0]:.3f}")
    return EXIT_OK


def cmd_check(args) -> int:
    from .checks import run_checks

    results = run_checks(args.fuzz, args.seed)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.ok for r in results) else EXIT_PROPERTY


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="srlgraph", description="Span-based SRL as second-order semantic graph parsing.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    t = sub.add_parser("train", help="train a model")
    t.add_argument("--train", required=True, help="training corpus (column format or .jsonl)")
    t.add_argument("--dev", help="dev corpus used for checkpoint selection")
    t.add_argument("--config", help="flat key = value config file")
    t.add_argument("--out", required=True, help="model file to write")
    t.add_argument("--log", help="per-epoch JSON log (one object per line)")
    t.add_argument("--epochs", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--order", choices=ORDERS)
    t.add_argument("--mode", choices=MODES)
    t.add_argument("--lr", type=float)
    t.add_argument("--batch-tokens", dest="batch_tokens", type=_positive)
    t.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")
    t.add_argument("--quiet", action="store_true")
    t.set_defaults(func=cmd_train)

    r = sub.add_parser("parse", help="parse raw or column-format input")
    r.add_argument("--model", required=True)
    r.add_argument("--input", required=True)
    r.add_argument("--output", required=True)
    r.add_argument("--order", choices=ORDERS)
    r.add_argument("--format", choices=FORMATS, default="columns")
    r.add_argument("--workers", type=_positive, help="worker processes (default: logical cores)")
    r.add_argument("--batch-tokens", dest="batch_tokens", type=_positive, default=DECODE_TOKENS)
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_parse)

    e = sub.add_parser("eval", help="score predictions against gold")
    e.add_argument("--gold", required=True)
    e.add_argument("--pred", required=True)
    e.add_argument("--mode", choices=MODES, default=SPAN_MODE)
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", help="decoding throughput")
    b.add_argument("--model", required=True)
    src = b.add_mutually_exclusive_group(required=True)
    src.add_argument("--input")
    src.add_argument("--synthetic", type=_positive, metavar="N", help="bench on N generated sentences")
    b.add_argument("--order", choices=ORDERS, help="default: both orders the model supports")
    b.add_argument("--repeat", type=_positive, default=3)
    b.add_argument("--workers", type=_positive, help="worker processes (default: logical cores)")
    b.add_argument("--batch-tokens", dest="batch_tokens", type=_positive, default=DECODE_TOKENS)
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("check", help="run the transform/inference property suite")
    c.add_argument("--fuzz", type=_positive, default=1000)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_check)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"srlgraph: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, SrlError, FormatError, ValueError) as exc:
        print(f"srlgraph: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
