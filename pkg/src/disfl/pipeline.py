"""Pipeline configuration and the end-to-end generate -> filter -> train -> evaluate run."""
from __future__ import annotations

import dataclasses
import json
import os
import random
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from . import __version__
from .corpus import (AnnotatedSentence, EmptyCorpus, load_corpus, render_annotated,
                     to_labeled, write_jsonl)
from .evaluate import score
from .filtering import FilterConfig, filter_corpus, write_decisions
from .heuristic import HeuristicConfig, generate_batch
from .llm import (GenerationReport, GenSessionConfig, HttpTransport, MockTransport,
                  Transcript, load_templates, run_session)
from .tagger import TaggerModel, TrainConfig, Vocab, predict_labels, train

SETUPS = ("aug-only", "pretrain-finetune", "seed+unfiltered", "seed+filtered")


class ConfigError(ValueError):
    pass


class OutputLocked(ConfigError):
    pass


@dataclass
class ModelShape:
    dim: int = 32
    hidden: int = 64
    window: int = 2
    match_window: int = 4


@dataclass
class LlmSettings:
    session: GenSessionConfig = field(default_factory=GenSessionConfig)
    transport: str = "http"  # http | mock
    url: str = "https://api.openai.com/v1/completions"
    api_key_env: str = "DISFL_API_KEY"
    retries: int = 3
    timeout: float = 60.0
    description_prompt: str | None = None
    generation_prompt: str | None = None
    mock_malformed_rate: float = 0.05


@dataclass
class GenerateSettings:
    mode: str = "llm"  # heuristic | llm
    heuristic: HeuristicConfig = field(default_factory=HeuristicConfig)
    llm: LlmSettings = field(default_factory=LlmSettings)


@dataclass
class PipelineConfig:
    seed: int = 0
    seed_corpus: str | None = None  # None: bundled fixture corpus
    dev_fraction: float = 0.2
    setup: str = "seed+filtered"
    generate: GenerateSettings = field(default_factory=GenerateSettings)
    filter: FilterConfig = field(default_factory=FilterConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    model: ModelShape = field(default_factory=ModelShape)

    def validate(self):
        if self.setup not in SETUPS + ("all",):
            raise ConfigError(f"unknown setup {self.setup!r}; choose from {', '.join(SETUPS)} or all")
        if self.generate.mode not in ("heuristic", "llm"):
            raise ConfigError(f"unknown generate mode {self.generate.mode!r}")
        if self.generate.llm.transport not in ("http", "mock"):
            raise ConfigError(f"unknown transport {self.generate.llm.transport!r}")
        if not 0.0 < self.dev_fraction < 1.0:
            raise ConfigError("dev_fraction must lie in (0, 1)")
        if self.seed_corpus is not None and not Path(self.seed_corpus).is_file():
            raise ConfigError(f"seed corpus {self.seed_corpus} not found")
        for p in (self.generate.llm.description_prompt, self.generate.llm.generation_prompt):
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"prompt file {p} not found")

    def with_seed(self, seed: int) -> "PipelineConfig":
        """Propagate one seed to every seeded stage."""
        g = self.generate
        return dataclasses.replace(
            self, seed=seed,
            generate=dataclasses.replace(
                g, heuristic=dataclasses.replace(g.heuristic, rng_seed=seed),
                llm=dataclasses.replace(g.llm, session=dataclasses.replace(g.llm.session, rng_seed=seed))),
            train=dataclasses.replace(self.train, seed=seed))


def _build(cls, data, where="config"):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a mapping")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {', '.join(sorted(unknown))}")
    kwargs = {}
    hints = {f.name: f.default_factory for f in fields.values()
             if f.default_factory is not dataclasses.MISSING}
    for key, value in data.items():
        factory = hints.get(key)
        if factory is not None and dataclasses.is_dataclass(factory) and isinstance(value, dict):
            # nested section: merge over that section's defaults
            kwargs[key] = _build(factory, value, f"{where}.{key}")
        else:
            kwargs[key] = tuple(value) if isinstance(value, list) else value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def load_config(path=None, overrides: dict | None = None) -> PipelineConfig:
    data = {}
    if path:
        try:
            data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    cfg = _build(PipelineConfig, data)
    for key, value in (overrides or {}).items():
        if key == "seed":
            cfg = cfg.with_seed(value)
        elif key == "transport":
            cfg.generate.llm = dataclasses.replace(cfg.generate.llm, transport=value)
        else:
            setattr(cfg, key, value)
    cfg.validate()
    return cfg


def config_snapshot(cfg: PipelineConfig, out_dir, command: str):
    snap = {"tool": "disfl", "version": __version__, "command": command,
            "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "config": asdict(cfg)}
    Path(out_dir, "config.resolved.json").write_text(json.dumps(snap, indent=2, default=str),
                                                     encoding="utf-8")


@contextmanager
def locked(out_dir):
    """Exclusive ownership of an output directory for one run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lock = out / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise OutputLocked(f"{out} is in use (remove {lock} if no run is active)") from None
    os.write(fd, str(os.getpid()).encode())
    os.close(fd)
    try:
        yield out
    finally:
        lock.unlink(missing_ok=True)


# -- stages -------------------------------------------------------------------------

def bundled_seed_path() -> Path:
    return Path(str(resources.files("disfl").joinpath("data", "seed_corpus.txt")))


def load_seed(cfg: PipelineConfig) -> list[AnnotatedSentence]:
    items = load_corpus(cfg.seed_corpus or bundled_seed_path())
    seed = [s for s in items if isinstance(s, AnnotatedSentence)]
    if not seed:
        raise EmptyCorpus("seed corpus has no annotated sentences")
    return seed


def split(corpus, dev_fraction: float, seed: int):
    order = list(range(len(corpus)))
    random.Random(seed).shuffle(order)
    n_dev = max(1, round(len(corpus) * dev_fraction))
    dev_idx = set(order[:n_dev])
    train_part = [s for i, s in enumerate(corpus) if i not in dev_idx]
    dev_part = [s for i, s in enumerate(corpus) if i in dev_idx]
    return train_part, dev_part


def make_transport(cfg: PipelineConfig, audit_path=None):
    llm = cfg.generate.llm
    if llm.transport == "mock":
        from .llm import perturbing_responder
        return MockTransport(perturbing_responder(seed=cfg.seed, malformed_rate=llm.mock_malformed_rate))
    return HttpTransport(llm.url, api_key_env=llm.api_key_env, retries=llm.retries,
                         timeout=llm.timeout, audit_path=audit_path)


def generate(cfg: PipelineConfig, seed_train, out: Path) -> tuple[list[AnnotatedSentence], dict]:
    """Run the configured generator and write generated.{txt,jsonl} plus a report."""
    if cfg.generate.mode == "heuristic":
        sents = generate_batch(seed_train, cfg.generate.heuristic)
        report = {"mode": "heuristic", "generated": len(sents),
                  "config": asdict(cfg.generate.heuristic)}
    else:
        llm = cfg.generate.llm
        transport = make_transport(cfg, out / "http_audit.jsonl")
        transcript_path = out / "transcript.jsonl"
        transcript_path.unlink(missing_ok=True)
        transcript = Transcript(transcript_path)
        templates = load_templates(llm.description_prompt, llm.generation_prompt)
        rep: GenerationReport = run_session(templates, llm.session, seed_train, transport, transcript)
        sents = rep.accepted
        report = {"mode": "llm", "generated": len(sents), **rep.to_dict(),
                  "description_rounds": transcript.description_rounds()}
    (out / "generated.txt").write_text("".join(render_annotated(s) + "\n" for s in sents),
                                       encoding="utf-8")
    write_jsonl(out / "generated.jsonl", sents)
    (out / "generation_report.json").write_text(json.dumps(report, indent=2), encoding="utf-8")
    return sents, report


def new_model(cfg: PipelineConfig, sentences) -> TaggerModel:
    m = cfg.model
    return TaggerModel.init(Vocab.build(sentences), m.dim, m.hidden, m.window,
                            m.match_window, seed=cfg.train.seed)


def fit(cfg: PipelineConfig, sentences, dev=None, vocab_from=None, out_dir=None, init=None):
    data = [to_labeled(s) if isinstance(s, AnnotatedSentence) else s for s in sentences]
    model = init or new_model(cfg, vocab_from if vocab_from is not None else data)
    ckpt = Path(out_dir, "model.json") if out_dir else None
    model, hist = train(model, data, cfg.train, dev=dev, checkpoint=ckpt)
    if out_dir:
        hist.to_csv(Path(out_dir, "history.csv"))
    return model, hist


def evaluate_model(model, gold):
    return score(gold, [predict_labels(model, s.tokens) for s in gold])


def run_setup(cfg: PipelineConfig, setup: str, seed_train, generated, kept, dev, out: Path):
    """Train under one of the four data setups and score on the seed dev split."""
    sub = out / setup.replace("+", "_plus_")
    sub.mkdir(parents=True, exist_ok=True)
    vocab_src = [to_labeled(s) for s in seed_train + generated]
    if setup == "aug-only":
        data = kept
    elif setup == "seed+unfiltered":
        data = seed_train + generated
    elif setup == "seed+filtered":
        data = seed_train + kept
    elif setup == "pretrain-finetune":
        data = None
    else:
        raise ConfigError(f"unknown setup {setup!r}")
    if setup == "pretrain-finetune":
        pre_dir = sub / "pretrain"
        pre_dir.mkdir(exist_ok=True)
        model, _ = fit(cfg, kept, vocab_from=vocab_src, out_dir=pre_dir)
        model, _ = fit(cfg, seed_train, init=model, out_dir=sub)
    else:
        if not data:
            raise EmptyCorpus(f"setup {setup} has no training data")
        model, _ = fit(cfg, data, vocab_from=vocab_src, out_dir=sub)
    report = evaluate_model(model, dev)
    result = {"setup": setup, **report.to_dict()}
    (sub / "eval.json").write_text(json.dumps(result, indent=2), encoding="utf-8")
    (sub / "eval.txt").write_text(report.table("tagger", setup) + "\n", encoding="utf-8")
    return result


def run_pipeline(cfg: PipelineConfig, out: Path, setups=None) -> dict:
    """generate -> filter -> merge -> train -> evaluate; returns the summary written to summary.json."""
    setups = setups or (SETUPS if cfg.setup == "all" else (cfg.setup,))
    seed = load_seed(cfg)
    seed_train, seed_dev = split(seed, cfg.dev_fraction, cfg.seed)
    dev = [to_labeled(s) for s in seed_dev]
    write_jsonl(out / "seed_train.jsonl", seed_train)
    write_jsonl(out / "seed_dev.jsonl", seed_dev)

    generated, gen_report = generate(cfg, seed_train, out)
    if not generated:
        raise EmptyCorpus("generation produced no usable sentences")

    (out / "scorer").mkdir(exist_ok=True)
    scorer, _ = fit(cfg, seed_train, out_dir=out / "scorer")
    kept, decisions = filter_corpus(scorer, generated, cfg.filter)
    write_decisions(out / "decisions.jsonl", decisions)
    write_jsonl(out / "kept.jsonl", kept)

    results = [run_setup(cfg, s, seed_train, generated, kept, dev, out) for s in setups]
    summary = {
        "seed_train": len(seed_train), "seed_dev": len(seed_dev),
        "generated": len(generated), "kept": len(kept), "threshold": cfg.filter.threshold,
        "generation": {k: gen_report[k] for k in ("mode", "generated")},
        "results": results,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2), encoding="utf-8")
    return summary
