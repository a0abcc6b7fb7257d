"""Edit-word precision/recall/F1 and corpus statistics."""
from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass, field

from .corpus import (AnnotatedSentence, DisfluencyType, EmptyCorpus, LABEL_I,
                     classify_edit, flatten, is_punct, iter_edits, outer_edits)


class AlignmentMismatch(ValueError):
    def __init__(self, index: int, message: str):
        self.index = index
        super().__init__(f"sentence {index}: {message}")


class EmptyInput(ValueError):
    pass


@dataclass
class EvalReport:
    true_positives: int
    false_positives: int
    false_negatives: int
    precision: float
    recall: float
    f1: float
    per_sentence: list[tuple[int, int, int]] | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.per_sentence is None:
            d.pop("per_sentence")
        return d

    def table(self, model: str = "tagger", setting: str = "") -> str:
        rows = [("Model", "Setting", "Precision", "Recall", "F1-score"),
                (model, setting, f"{self.precision:.3f}", f"{self.recall:.3f}", f"{self.f1:.3f}")]
        widths = [max(len(r[i]) for r in rows) for i in range(5)]
        return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows)


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Precision, recall, F1 with empty denominators scored as 1.0.

    F1 is 2TP / (2TP + FP + FN), a single correctly-rounded division.
    """
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    if tp:
        f1 = 2 * tp / (2 * tp + fp + fn)
    else:
        f1 = 0.0 if fp + fn else 1.0
    return precision, recall, f1


def score(gold, pred, ignore_punct: bool = False, per_sentence: bool = False) -> EvalReport:
    """Token-level scores for the I label.

    ``gold`` holds LabeledSentence objects; ``pred`` holds label sequences.
    With ``ignore_punct`` punctuation-only tokens are skipped.
    """
    gold = list(gold)
    pred = list(pred)
    if len(gold) != len(pred):
        raise AlignmentMismatch(min(len(gold), len(pred)),
                                f"{len(gold)} gold sentences but {len(pred)} predictions")
    tp = fp = fn = 0
    rows = []
    for i, (g, p) in enumerate(zip(gold, pred)):
        p = list(p)
        if len(g.labels) != len(p):
            raise AlignmentMismatch(i, f"{len(g.labels)} gold labels but {len(p)} predicted")
        s_tp = s_fp = s_fn = 0
        for tok, gl, pl in zip(g.tokens, g.labels, p):
            if ignore_punct and is_punct(tok.surface):
                continue
            gi, pi = gl == LABEL_I, pl == LABEL_I
            s_tp += gi and pi
            s_fp += pi and not gi
            s_fn += gi and not pi
        tp, fp, fn = tp + s_tp, fp + s_fp, fn + s_fn
        rows.append((s_tp, s_fp, s_fn))
    return EvalReport(tp, fp, fn, *prf(tp, fp, fn), per_sentence=rows if per_sentence else None)


def type_percentages(sentences) -> dict[str, float]:
    """Share of outer edits per type, in percent rounded to two decimals."""
    counts = Counter(classify_edit(e) for s in sentences for e in outer_edits(s))
    total = sum(counts.values())
    if not total:
        raise EmptyInput("no edits to classify")
    return {t.value: round(100 * counts[t] / total, 2) for t in DisfluencyType}


def corpus_stats(corpus) -> dict:
    corpus = [s for s in corpus if isinstance(s, AnnotatedSentence)]
    if not corpus:
        raise EmptyCorpus("no annotated sentences")
    edits = sum(len(outer_edits(s)) for s in corpus)
    stats = {
        "sentences": len(corpus),
        "tokens": sum(len(flatten(s.chunks)) for s in corpus),
        "edits": edits,
        "edits_all_depths": sum(sum(1 for _ in iter_edits(s.chunks)) for s in corpus),
        "sentences_with_edits": sum(1 for s in corpus if outer_edits(s)),
        "mean_edits_per_sentence": edits / len(corpus),
        "type_counts": dict(Counter(classify_edit(e).value for s in corpus for e in outer_edits(s))),
    }
    stats["type_percentages"] = type_percentages(corpus) if edits else None
    return stats


def type_row(name: str, percentages: dict[str, float], header: bool = True) -> str:
    """Repetition / Substitution / Deletion percentages as an aligned text row."""
    cols = [t.value for t in DisfluencyType]
    cells = [f"{percentages[c]:.2f}%" for c in cols]
    width = max(len(name), len("Corpus"))
    lines = []
    if header:
        lines.append("Corpus".ljust(width) + "  " + "  ".join(c.rjust(12) for c in cols))
    lines.append(name.ljust(width) + "  " + "  ".join(c.rjust(12) for c in cells))
    return "\n".join(lines)
