"""Rule-based disfluency injection: repeat, insert and restart n-grams.

Every operation keeps the source sentence as the fluent reading of its output,
so gold I/O labels come for free.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .corpus import (AnnotatedSentence, EmptyCorpus, Edit, Fluent, Token,
                     is_punct, normalize_chunks, strip_to_fluent)

OPS = ("repeat", "insert", "delete")


class OutOfRange(ValueError):
    pass


class EmptyDonor(ValueError):
    pass


class WholeSentence(ValueError):
    pass


@dataclass(frozen=True)
class HeuristicConfig:
    rng_seed: int = 0
    max_ngram: int = 3
    op_mix: tuple[float, float, float] = (1.0, 1.0, 1.0)  # repeat, insert, delete
    edits_per_sentence: int = 1

    def __post_init__(self):
        object.__setattr__(self, "op_mix", tuple(float(w) for w in self.op_mix))
        if self.max_ngram < 1:
            raise ValueError("max_ngram must be >= 1")
        if self.edits_per_sentence < 1:
            raise ValueError("edits_per_sentence must be >= 1")
        if len(self.op_mix) != 3 or any(w < 0 for w in self.op_mix) or not any(self.op_mix):
            raise ValueError("op_mix needs three non-negative weights, not all zero")


def _build(tokens: Sequence[Token], ops, terminated: bool) -> AnnotatedSentence:
    """Assemble a sentence from position-sorted (kind, position, payload) ops."""
    chunks = []
    i = 0
    for kind, pos, payload in ops:
        if pos > i:
            chunks.append(Fluent(tokens[i:pos]))
        if kind == "repeat":
            gram = list(tokens[pos:pos + payload])
            chunks.append(Edit([Fluent(gram)], [], [Fluent(gram)]))
            i = pos + payload
        elif kind == "insert":
            chunks.append(Edit([Fluent(payload)]))
            i = pos
        else:
            # restart: abandoned copy, then the sentence resumes from pos
            chunks.append(Edit([Fluent(tokens[pos:pos + payload])]))
            i = pos
    if i < len(tokens):
        chunks.append(Fluent(tokens[i:]))
    return AnnotatedSentence(normalize_chunks(chunks), terminated)


def repeat_ngram(tokens, position, n, rng=None, terminated=False) -> AnnotatedSentence:
    """Turn the n-gram at ``position`` into ``[ gram + gram ]``."""
    tokens = list(tokens)
    if n < 1 or position < 0 or position + n > len(tokens):
        raise OutOfRange(f"n-gram [{position}, {position + n}) outside {len(tokens)} tokens")
    return _build(tokens, [("repeat", position, n)], terminated)


def insert_ngram(tokens, position, donor_ngram, rng=None, terminated=False) -> AnnotatedSentence:
    """Insert ``[ donor + ]`` before ``tokens[position]``."""
    tokens = list(tokens)
    donor = list(donor_ngram)
    if not donor:
        raise EmptyDonor("donor n-gram is empty")
    if not 0 <= position <= len(tokens):
        raise OutOfRange(f"position {position} outside 0..{len(tokens)}")
    return _build(tokens, [("insert", position, donor)], terminated)


def delete_ngram_variant(tokens, position, n, rng=None, terminated=False) -> AnnotatedSentence:
    """Restart: an abandoned copy of the n-gram at ``position``, then the full sentence.

    >>> str(delete_ngram_variant([Token("we"), Token("went"), Token("home")], 0, 1))
    '[ we + ] we went home'
    """
    tokens = list(tokens)
    if n < 1 or position < 0 or position + n > len(tokens):
        raise OutOfRange(f"n-gram [{position}, {position + n}) outside {len(tokens)} tokens")
    if n >= len(tokens):
        raise WholeSentence("restart fragment would cover the whole sentence")
    return _build(tokens, [("delete", position, n)], terminated)


def _donor(rng: random.Random, corpus, max_ngram):
    src = corpus[rng.randrange(len(corpus))]
    n = min(rng.randint(1, max_ngram), len(src))
    start = rng.randrange(len(src) - n + 1)
    return list(src[start:start + n])


def _plan(rng: random.Random, tokens, corpus, config: HeuristicConfig):
    """Pick non-overlapping ops for one sentence."""
    L = len(tokens)
    k = config.edits_per_sentence
    # edits anchor on words; a punctuation-only repeat would read as a deletion
    anchors = [p for p in range(L) if not is_punct(tokens[p].surface)]
    starts = sorted(rng.sample(anchors, min(k, len(anchors))))
    ops = []
    for j, pos in enumerate(starts):
        limit = (starts[j + 1] if j + 1 < len(starts) else L) - pos
        kind = rng.choices(OPS, config.op_mix)[0]
        n = min(rng.randint(1, config.max_ngram), limit)
        if kind == "delete":
            n = min(n, L - 1)
            if n < 1:
                kind = "insert"
        if kind == "insert":
            ops.append(("insert", pos, _donor(rng, corpus, config.max_ngram)))
        else:
            ops.append((kind, pos, n))
    # sentences with fewer than k words get the remainder as trailing insertions
    for _ in range(k - len(starts)):
        ops.append(("insert", L, _donor(rng, corpus, config.max_ngram)))
    return ops


def _as_tokens(item) -> list[Token]:
    if isinstance(item, AnnotatedSentence):
        return strip_to_fluent(item)
    return list(item)


def generate_batch(fluent_corpus, config: HeuristicConfig, terminated=True) -> list[AnnotatedSentence]:
    """One disfluent variant per source sentence.

    Sentence ``i`` draws from its own RNG seeded with ``rng_seed ^ i``, so output
    does not depend on processing order.
    """
    corpus = [t for t in (_as_tokens(x) for x in fluent_corpus) if t]
    if not corpus:
        raise EmptyCorpus("no non-empty source sentences")
    out = []
    for i, tokens in enumerate(corpus):
        rng = random.Random(config.rng_seed ^ i)
        out.append(_build(tokens, _plan(rng, tokens, corpus, config), terminated))
    return out
