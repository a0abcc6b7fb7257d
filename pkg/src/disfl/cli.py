"""Command-line entry point: ``disfl <command> ...``.

Exit codes: 0 success, 1 data or validation error, 2 configuration error,
3 transport error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus as C
from .evaluate import EmptyInput, corpus_stats, score, type_row
from .filtering import FilterConfig, filter_corpus, lambda_sweep, sweep_csv, write_decisions
from .llm import AllRoundsFailed, MissingCredentials, TransportError
from .pipeline import (SETUPS, ConfigError, config_snapshot, fit, generate, load_config,
                       load_seed, locked, run_pipeline, split)
from .tagger import EmptyInput as EmptyTaggerInput
from .tagger import load as load_model
from .tagger import predict_labels

EXIT_OK, EXIT_DATA, EXIT_CONFIG, EXIT_TRANSPORT = 0, 1, 2, 3


class Output:
    def __init__(self, quiet=False, as_json=False):
        self.quiet = quiet
        self.as_json = as_json

    def emit(self, text: str, payload=None):
        if self.as_json and payload is not None:
            print(json.dumps(payload, indent=2, default=str))
        elif not self.quiet:
            print(text)


def _labeled_gold(items):
    return [C.to_labeled(s) if isinstance(s, C.AnnotatedSentence) else s for s in items]


def cmd_validate(args, out: Output) -> int:
    path = Path(args.path)
    problems = []
    n = 0
    if str(path).endswith(".jsonl"):
        try:
            n = len(C.read_jsonl(path))
        except C.MalformedRecord as exc:
            problems.append({"line": exc.line, "column": None, "kind": "MalformedRecord",
                             "message": str(exc)})
    else:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    C.parse_annotated(line)
                    n += 1
                except C.AnnotationError as exc:
                    problems.append({"line": lineno, "column": exc.column, "kind": exc.kind,
                                     "message": str(exc)})
    if not n and not problems:
        problems.append({"line": None, "column": None, "kind": "EmptyCorpus",
                         "message": "EmptyCorpus: no sentences found"})
    if problems:
        for p in problems:
            loc = f"{path}:{p['line']}:{p['column']}" if p["line"] else str(path)
            print(f"{loc}: {p['message']}", file=sys.stderr)
        out.emit(f"{len(problems)} problem(s), {n} sentences OK",
                 {"ok": False, "sentences": n, "problems": problems})
        return EXIT_DATA
    out.emit(f"{n} sentences OK", {"ok": True, "sentences": n})
    return EXIT_OK


def cmd_generate(args, out: Output) -> int:
    overrides = {"transport": args.transport} if args.transport else {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.input:
        overrides["seed_corpus"] = args.input
    cfg = load_config(args.config, overrides)
    if args.mode:
        cfg.generate.mode = args.mode
    with locked(args.out) as out_dir:
        config_snapshot(cfg, out_dir, "generate")
        sents, report = generate(cfg, load_seed(cfg), out_dir)
    out.emit(f"generated {len(sents)} sentences into {out_dir}", report)
    return EXIT_OK


def cmd_train(args, out: Output) -> int:
    overrides = {"seed": args.seed} if args.seed is not None else {}
    cfg = load_config(args.config, overrides)
    if args.epochs is not None:
        cfg.train.epochs = args.epochs
    train_items = _labeled_gold(C.load_corpus(args.train))
    dev = _labeled_gold(C.load_corpus(args.dev)) if args.dev else None
    with locked(args.out) as out_dir:
        config_snapshot(cfg, out_dir, "train")
        _, hist = fit(cfg, train_items, dev=dev, out_dir=out_dir)
    last = hist.rows[-1]
    out.emit(f"trained {len(hist.rows) - 1} epochs, final loss {last['loss']:.4f}"
             f" -> {Path(args.out, 'model.json')}", {"history": hist.rows})
    return EXIT_OK


def cmd_filter(args, out: Output) -> int:
    model = load_model(args.model)
    items = C.load_corpus(args.input)
    cfg = FilterConfig(args.threshold, scorer_name=str(args.model))
    kept, decisions = filter_corpus(model, items, cfg)
    with locked(args.out) as out_dir:
        write_decisions(out_dir / "decisions.jsonl", decisions)
        C.write_jsonl(out_dir / "kept.jsonl", kept)
        (out_dir / "config.resolved.json").write_text(json.dumps(
            {"command": "filter", "model": str(args.model), "input": str(args.input),
             "threshold": args.threshold}, indent=2), encoding="utf-8")
    out.emit(f"kept {len(kept)} of {len(items)} at lambda={args.threshold}",
             {"kept": len(kept), "total": len(items), "threshold": args.threshold})
    return EXIT_OK


def cmd_eval(args, out: Output) -> int:
    model = load_model(args.model)
    gold = _labeled_gold(C.load_corpus(args.gold))
    report = score(gold, [predict_labels(model, s.tokens, args.tau) for s in gold],
                   ignore_punct=args.ignore_punct)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        Path(args.out, "eval.json").write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
    out.emit(report.table(Path(args.model).stem, Path(args.gold).name), report.to_dict())
    return EXIT_OK


def cmd_stats(args, out: Output) -> int:
    stats = corpus_stats(C.load_corpus(args.path))
    lines = [f"sentences: {stats['sentences']}", f"tokens: {stats['tokens']}",
             f"edits: {stats['edits']} (all depths: {stats['edits_all_depths']})",
             f"mean edits per sentence: {stats['mean_edits_per_sentence']:.2f}"]
    if stats["type_percentages"]:
        lines.append(type_row(args.name or Path(args.path).stem, stats["type_percentages"]))
    out.emit("\n".join(lines), stats)
    return EXIT_OK


def cmd_sweep(args, out: Output) -> int:
    model = load_model(args.model)
    items = C.load_corpus(args.input)
    lambdas = [float(x) for x in args.lambdas.split(",") if x.strip()]
    callback = None
    if args.with_training:
        overrides = {"seed": args.seed} if args.seed is not None else {}
        cfg = load_config(args.config, overrides)
        seed_train, seed_dev = split(load_seed(cfg), cfg.dev_fraction, cfg.seed)
        dev = [C.to_labeled(s) for s in seed_dev]

        def callback(kept):
            from .pipeline import evaluate_model
            model_k, _ = fit(cfg, seed_train + list(kept), vocab_from=[C.to_labeled(s) for s in seed_train + items])
            return evaluate_model(model_k, dev).f1

    rows = lambda_sweep(model, items, lambdas, callback)
    text = sweep_csv(rows)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        Path(args.out, "sweep.csv").write_text(text, encoding="utf-8")
    out.emit(text.rstrip("\n"), rows)
    return EXIT_OK


def cmd_pipeline(args, out: Output) -> int:
    overrides = {}
    for key in ("seed", "transport", "setup"):
        if getattr(args, key, None) is not None:
            overrides[key] = getattr(args, key)
    cfg = load_config(args.config, overrides)
    if args.mode:
        cfg.generate.mode = args.mode
    with locked(args.out) as out_dir:
        config_snapshot(cfg, out_dir, "pipeline")
        summary = run_pipeline(cfg, out_dir)
    lines = [f"generated {summary['generated']}, kept {summary['kept']} at lambda={summary['threshold']}"]
    for r in summary["results"]:
        lines.append(f"{r['setup']:<18} P={r['precision']:.3f} R={r['recall']:.3f} F1={r['f1']:.3f}")
    out.emit("\n".join(lines), summary)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="YAML/JSON pipeline config")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--transport", choices=("http", "mock"), default=argparse.SUPPRESS)
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="disfl", parents=[common],
                                description="Disfluency corpus generation, filtering and detection.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check an annotation or JSONL file")
    s.add_argument("path")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("generate", parents=[common], help="generate disfluent sentences")
    s.add_argument("--mode", choices=("heuristic", "llm"))
    s.add_argument("--input", help="seed corpus (annotation text or JSONL)")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("train", parents=[common], help="train a tagger")
    s.add_argument("--train", required=True)
    s.add_argument("--dev")
    s.add_argument("--epochs", type=int)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("filter", parents=[common], help="confidence-filter generated data")
    s.add_argument("--model", required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--lambda", dest="threshold", type=float, default=0.5)
    s.set_defaults(func=cmd_filter)

    s = sub.add_parser("eval", parents=[common], help="edit-word P/R/F1 of a tagger")
    s.add_argument("--model", required=True)
    s.add_argument("--gold", required=True)
    s.add_argument("--tau", type=float, default=0.5)
    s.add_argument("--ignore-punct", action="store_true")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("stats", parents=[common], help="corpus statistics and type percentages")
    s.add_argument("path")
    s.add_argument("--name")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("sweep", parents=[common], help="kept count (and F1) per threshold")
    s.add_argument("--model", required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--lambdas", default="0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")
    s.add_argument("--with-training", action="store_true",
                   help="train seed+kept for each threshold and fill the f1 column")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("pipeline", parents=[common], help="generate, filter, train and evaluate")
    s.add_argument("--setup", choices=SETUPS + ("all",))
    s.add_argument("--mode", choices=("heuristic", "llm"))
    s.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for key, default in (("config", None), ("seed", None), ("out", None), ("transport", None),
                         ("quiet", False), ("json", False)):
        if not hasattr(args, key):
            setattr(args, key, default)
    if args.out is None and args.command in ("generate", "train", "filter", "pipeline"):
        args.out = "runs/latest"
    out = Output(args.quiet, args.json)
    try:
        return args.func(args, out)
    except MissingCredentials as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TransportError, AllRoundsFailed) as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (C.AnnotationError, C.MalformedRecord, C.EmptyCorpus, EmptyInput,
            EmptyTaggerInput, ValueError) as exc:
        line = getattr(exc, "line", None)
        where = f" (line {line})" if line else ""
        print(f"data error{where}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
