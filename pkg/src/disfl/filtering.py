"""Confidence filtering of generated sentences.

A sentence's score is the detector's mean p(I) over the tokens its own
annotation marks as I. Sentences scoring below the threshold are dropped.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

from .corpus import AnnotatedSentence, EmptyCorpus, LABEL_I, LabeledSentence, to_labeled
from .tagger import I_IDX, Detector

NO_DISFLUENT_REGION = "no_disfluent_region"
SWEEP_HEADER = ("lambda", "kept_count", "f1")


class EmptyLambdaList(ValueError):
    pass


@dataclass(frozen=True)
class FilterConfig:
    threshold: float = 0.5  # lambda
    scorer_name: str = "tagger"

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")


@dataclass
class FilterDecision:
    id: int
    score: float
    kept: bool
    k: int
    flags: list[str] = field(default_factory=list)
    scorer: str = "tagger"

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _labeled(item) -> LabeledSentence:
    return to_labeled(item) if isinstance(item, AnnotatedSentence) else item


def score_sentence(model: Detector, labeled) -> tuple[float, int]:
    """(score, K): mean p(I) over the K gold-I tokens, summed left to right.

    K = 0 gives a score of 1.0.
    """
    labeled = _labeled(labeled)
    probs = model.predict_proba(labeled.tokens)
    total = 0.0
    k = 0
    for label, row in zip(labeled.labels, probs):
        if label == LABEL_I:
            total += float(row[I_IDX])
            k += 1
    if k == 0:
        return 1.0, 0
    return total / k, k


def score_corpus(model: Detector, corpus, scorer: str = "tagger") -> list[FilterDecision]:
    """Decisions with ``kept`` unset; pair with :func:`apply_threshold`."""
    out = []
    for i, item in enumerate(corpus):
        s, k = score_sentence(model, item)
        out.append(FilterDecision(i, s, False, k, [NO_DISFLUENT_REGION] if k == 0 else [], scorer))
    return out


def apply_threshold(decisions: Sequence[FilterDecision], threshold: float) -> list[FilterDecision]:
    return [FilterDecision(d.id, d.score, d.score >= threshold, d.k, list(d.flags), d.scorer)
            for d in decisions]


def filter_corpus(model: Detector, corpus, config: FilterConfig = FilterConfig()):
    """Return (kept sentences, one decision per input sentence), input order preserved."""
    corpus = list(corpus)
    if not corpus:
        raise EmptyCorpus("nothing to filter")
    decisions = apply_threshold(score_corpus(model, corpus, config.scorer_name), config.threshold)
    kept = [item for item, d in zip(corpus, decisions) if d.kept]
    return kept, decisions


def lambda_sweep(model: Detector, corpus, lambdas: Sequence[float],
                 train_and_score: Callable[[list], float] | None = None) -> list[dict]:
    """Kept count (and optionally downstream F1) for each threshold.

    ``train_and_score`` receives the kept sentences and returns an F1 value.
    """
    lambdas = list(lambdas)
    if not lambdas:
        raise EmptyLambdaList("no thresholds given")
    for lam in lambdas:
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"threshold {lam} outside [0, 1]")
    corpus = list(corpus)
    if not corpus:
        raise EmptyCorpus("nothing to filter")
    scored = score_corpus(model, corpus)
    rows = []
    for lam in lambdas:
        kept = [item for item, d in zip(corpus, scored) if d.score >= lam]
        f1 = train_and_score(kept) if train_and_score else None
        rows.append({"lambda": lam, "kept_count": len(kept), "f1": f1})
    return rows


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow([r["lambda"], r["kept_count"], "" if r["f1"] is None else f"{r['f1']:.6f}"])
    return buf.getvalue()


def write_decisions(path, decisions):
    with open(path, "w", encoding="utf-8") as fh:
        for d in decisions:
            fh.write(d.to_json() + "\n")
