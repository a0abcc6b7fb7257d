"""Description-then-generation sessions against a completion transport."""
from __future__ import annotations

import json
import random
import re
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..corpus import (AnnotatedSentence, AnnotationError, DisfluencyType, Edit, Tagged,
                      classify_edit, iter_edits, outer_edits, parse_annotated,
                      render_annotated)
from ..evaluate import type_percentages
from .prompts import PromptTemplates
from .transport import LlmTransport, SamplingParams, TransportError

MISSING_POS = "MissingPos"
NO_DISFLUENCY = "NoDisfluency"
DUPLICATE = "DuplicateOfExample"

_NUMBERING = re.compile(r"^\s*(?:\(?\d+[.):]|[-*•])\s+")


class AllRoundsFailed(RuntimeError):
    def __init__(self, report: "GenerationReport"):
        self.report = report
        super().__init__(f"all {report.rounds_failed} rounds failed at the transport")


@dataclass(frozen=True)
class GenSessionConfig:
    max_round: int = 10
    total_rounds: int = 50
    examples_per_prompt: int = 3
    temperature: float = 0.7
    max_tokens: int = 512
    model: str = "gpt-3.5-turbo-instruct"
    rng_seed: int = 0
    type_filter: tuple[str, ...] = ()  # restrict examples to sentences with these edit types

    def __post_init__(self):
        if self.max_round < 1 or self.total_rounds < 1:
            raise ValueError("max_round and total_rounds must be >= 1")
        if self.examples_per_prompt not in (2, 3):
            raise ValueError("examples_per_prompt must be 2 or 3")
        object.__setattr__(self, "type_filter",
                           tuple(DisfluencyType(t).value for t in self.type_filter))

    @property
    def sampling(self) -> SamplingParams:
        return SamplingParams(self.model, self.temperature, self.max_tokens)


@dataclass(frozen=True)
class Rejection:
    reason: str
    detail: str = ""


@dataclass
class GenerationReport:
    accepted: list[AnnotatedSentence] = field(default_factory=list)
    rejected: list[tuple[str, str]] = field(default_factory=list)
    near_duplicates: list[str] = field(default_factory=list)
    rounds_executed: int = 0
    rounds_failed: int = 0
    candidates: int = 0
    config: dict = field(default_factory=dict)

    @property
    def type_counts(self) -> dict[str, int]:
        counts = Counter(classify_edit(e).value for s in self.accepted for e in outer_edits(s))
        return {t.value: counts.get(t.value, 0) for t in DisfluencyType}

    def to_dict(self) -> dict:
        return {
            "rounds_executed": self.rounds_executed,
            "rounds_failed": self.rounds_failed,
            "candidates": self.candidates,
            "accepted": len(self.accepted),
            "rejected": [{"line": line, "reason": reason} for line, reason in self.rejected],
            "rejection_counts": dict(Counter(r for _, r in self.rejected)),
            "near_duplicates": self.near_duplicates,
            "type_counts": self.type_counts,
            "config": self.config,
        }


def _has_disfluency(s: AnnotatedSentence) -> bool:
    return any(isinstance(c, (Edit, Tagged)) for c in s.chunks)


def _multiset(s: AnnotatedSentence):
    return tuple(sorted(Counter(str(t) for t in s.tokens).items()))


def clean_candidate(line: str) -> str:
    """Strip list decoration ("1.", "-", "*") that models put on each answer."""
    return _NUMBERING.sub("", line).strip()


def validate_candidate(raw: str, examples=()) -> AnnotatedSentence | Rejection:
    """Accept a generated line or say why not; never raises.

    ``examples`` are canonical renderings that count as copies.
    """
    try:
        sent = parse_annotated(clean_candidate(raw))
    except AnnotationError as exc:
        return Rejection(exc.kind, str(exc))
    untagged = [t.surface for t in sent.tokens if t.pos is None]
    if untagged:
        return Rejection(MISSING_POS, " ".join(untagged[:5]))
    if not _has_disfluency(sent):
        return Rejection(NO_DISFLUENCY)
    if render_annotated(sent) in examples:
        return Rejection(DUPLICATE)
    return sent


class Transcript:
    """Append-only call log, mirrored to a JSONL file when a path is given."""

    def __init__(self, path=None, clock=time.time):
        self.records: list[dict] = []
        self.path = Path(path) if path else None
        self.clock = clock

    def add(self, record: dict):
        self.records.append(record)
        if self.path:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    def description_rounds(self) -> list[int]:
        return [r["round"] for r in self.records if r["kind"] == "description" and not r["error"]]


def _example_pool(seed_corpus, type_filter):
    pool = [s for s in seed_corpus if any(True for _ in iter_edits(s.chunks))]
    if type_filter:
        pool = [s for s in pool
                if any(classify_edit(e).value in type_filter for e in outer_edits(s))]
    return pool


def run_session(templates: PromptTemplates, config: GenSessionConfig, seed_corpus,
                transport: LlmTransport, transcript: Transcript | None = None) -> GenerationReport:
    """Send the description prompt, then generation rounds, re-sending the
    description every ``max_round`` rounds; validate every returned line."""
    seed_corpus = list(seed_corpus)
    if not seed_corpus:
        raise ValueError("seed corpus is empty")
    pool = _example_pool(seed_corpus, config.type_filter)
    if len(pool) < config.examples_per_prompt:
        raise ValueError(f"only {len(pool)} usable example sentences, "
                         f"need {config.examples_per_prompt}")
    transcript = transcript if transcript is not None else Transcript()
    rng = random.Random(config.rng_seed)
    params = config.sampling
    seed_lines = {render_annotated(s) for s in seed_corpus}
    seed_bags = {_multiset(s) for s in seed_corpus}
    report = GenerationReport(config={**asdict(config), "transport": transport.name})
    context: list[tuple[str, str]] = []
    need_description = True
    calls = 0

    def call(prompt, kind, round_no, ctx):
        nonlocal calls
        calls += 1
        rec = {"call": calls, "round": round_no, "kind": kind, "prompt": prompt,
               "context_len": len(ctx), "model": params.model, "params": asdict(params),
               "started": transcript.clock(), "completion": None, "error": None}
        try:
            rec["completion"] = transport.complete(prompt, ctx, params)
        except TransportError as exc:
            rec["error"] = str(exc)
            raise
        finally:
            rec["finished"] = transcript.clock()
            transcript.add(rec)
        return rec["completion"]

    for round_no in range(1, config.total_rounds + 1):
        if (round_no - 1) % config.max_round == 0:
            need_description = True
        # drawn before any transport call so failures do not shift later rounds
        examples = rng.sample(pool, config.examples_per_prompt)
        prompt = templates.generation_prompt([render_annotated(e) for e in examples])
        try:
            if need_description:
                reply = call(templates.description, "description", round_no, [])
                context = [(templates.description, reply)]
                need_description = False
            reply = call(prompt, "generation", round_no, list(context))
        except TransportError:
            report.rounds_failed += 1
            continue
        context.append((prompt, reply))
        report.rounds_executed += 1
        for line in reply.splitlines():
            if not clean_candidate(line):
                continue
            report.candidates += 1
            result = validate_candidate(line, seed_lines)
            if isinstance(result, Rejection):
                report.rejected.append((line, result.reason))
                continue
            if _multiset(result) in seed_bags:
                report.near_duplicates.append(render_annotated(result))
            report.accepted.append(result)
    if report.rounds_executed == 0:
        raise AllRoundsFailed(report)
    return report


def type_histogram(sentences) -> dict[str, float]:
    """Percentage of outer edits per disfluency type, two decimals."""
    return type_percentages(sentences)
