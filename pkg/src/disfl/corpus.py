"""Switchboard-style disfluency annotation: types, parser, renderer and projections.

A sentence is a sequence of chunks. Plain words form ``Fluent`` runs, brace
groups such as ``{F uh/UH ,/, }`` form ``Tagged`` chunks, and bracketed regions
``[ reparandum + interregnum repair ]`` form ``Edit`` chunks, which may nest.
All structural symbols are whitespace-delimited in canonical output; the
parser is lenient about a few common glued forms (``,}``, ``{ F``).
"""
from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence, Union

__all__ = [
    "Token", "InterregnumCategory", "DisfluencyType", "Fluent", "Tagged", "Edit",
    "Chunk", "AnnotatedSentence", "LabeledSentence",
    "AnnotationError", "UnbalancedBracket", "UnknownInterregnumCategory",
    "MissingPlusInEdit", "EmptyReparandum", "StrayPlus", "MalformedRecord", "EmptyCorpus",
    "parse_annotated", "render_annotated", "to_labeled", "strip_to_fluent",
    "classify_edit", "flatten", "outer_edits", "iter_edits", "normalize_chunks",
    "is_punct", "read_annotated", "read_plain", "read_jsonl", "write_jsonl", "load_corpus",
    "to_record", "from_record", "LABEL_I", "LABEL_O", "TERMINATOR",
]

LABEL_I = "I"
LABEL_O = "O"
TERMINATOR = "E_S"
_STRUCTURAL = set("[]{}+")


class InterregnumCategory(str, enum.Enum):
    F = "F"  # filled pause
    E = "E"  # explicit editing term
    D = "D"  # discourse marker
    C = "C"  # coordinating conjunction
    A = "A"  # aside


class DisfluencyType(str, enum.Enum):
    REPETITION = "Repetition"
    SUBSTITUTION = "Substitution"
    DELETION = "Deletion"


@dataclass(frozen=True)
class Token:
    surface: str
    pos: str | None = None

    def __post_init__(self):
        if not self.surface or any(c.isspace() for c in self.surface):
            raise ValueError(f"invalid token surface {self.surface!r}")
        if _STRUCTURAL.intersection(self.surface):
            raise ValueError(f"structural character in token surface {self.surface!r}")
        if self.pos is not None and (not self.pos or any(c.isspace() for c in self.pos)):
            raise ValueError(f"invalid POS tag {self.pos!r}")

    @classmethod
    def from_text(cls, text: str) -> "Token":
        """Split ``surface/POS`` on the last slash; no slash means no tag."""
        surface, sep, pos = text.rpartition("/")
        if not sep or not surface or not pos:
            return cls(text)
        return cls(surface, pos)

    def __str__(self):
        return self.surface if self.pos is None else f"{self.surface}/{self.pos}"


def _tuple(obj, name, value):
    object.__setattr__(obj, name, tuple(value))


@dataclass(frozen=True)
class Fluent:
    tokens: tuple[Token, ...]

    def __post_init__(self):
        _tuple(self, "tokens", self.tokens)
        if not self.tokens:
            raise ValueError("Fluent chunk needs at least one token")


@dataclass(frozen=True)
class Tagged:
    category: InterregnumCategory
    tokens: tuple[Token, ...]

    def __post_init__(self):
        object.__setattr__(self, "category", InterregnumCategory(self.category))
        _tuple(self, "tokens", self.tokens)
        if not self.tokens:
            raise ValueError("Tagged chunk needs at least one token")


@dataclass(frozen=True)
class Edit:
    reparandum: tuple["Chunk", ...]
    interregnum: tuple[Tagged, ...] = ()
    repair: tuple["Chunk", ...] = ()

    def __post_init__(self):
        for name in ("reparandum", "interregnum", "repair"):
            _tuple(self, name, getattr(self, name))
        if not self.reparandum:
            raise ValueError("Edit needs a non-empty reparandum")
        if not all(isinstance(c, Tagged) for c in self.interregnum):
            raise ValueError("interregnum holds only Tagged chunks")
        # a leading Tagged repair chunk would be read back as interregnum
        if self.repair and isinstance(self.repair[0], Tagged):
            raise ValueError("repair cannot start with a Tagged chunk")


Chunk = Union[Fluent, Tagged, Edit]


@dataclass(frozen=True)
class AnnotatedSentence:
    chunks: tuple[Chunk, ...]
    terminated: bool = False

    def __post_init__(self):
        _tuple(self, "chunks", self.chunks)
        if not self.chunks:
            raise ValueError("sentence needs at least one chunk")

    @property
    def tokens(self) -> list[Token]:
        return flatten(self.chunks)

    def __str__(self):
        return render_annotated(self)


@dataclass(frozen=True)
class LabeledSentence:
    tokens: tuple[Token, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        _tuple(self, "tokens", self.tokens)
        _tuple(self, "labels", self.labels)
        if not self.tokens:
            raise ValueError("labeled sentence needs at least one token")
        if len(self.tokens) != len(self.labels):
            raise ValueError(
                f"{len(self.tokens)} tokens but {len(self.labels)} labels")
        bad = set(self.labels) - {LABEL_I, LABEL_O}
        if bad:
            raise ValueError(f"unknown labels {sorted(bad)}")

    def __len__(self):
        return len(self.tokens)


# -- errors -----------------------------------------------------------------

class AnnotationError(ValueError):
    """Parse failure. ``kind`` is a stable machine-readable name, ``column`` is 1-based."""

    kind = "AnnotationError"

    def __init__(self, message: str, column: int | None = None, kind: str | None = None):
        if kind is not None:
            self.kind = kind
        self.column = column
        where = f" at column {column}" if column is not None else ""
        super().__init__(f"{self.kind}: {message}{where}")


class UnbalancedBracket(AnnotationError):
    kind = "UnbalancedBracket"


class UnknownInterregnumCategory(AnnotationError):
    kind = "UnknownInterregnumCategory"


class MissingPlusInEdit(AnnotationError):
    kind = "MissingPlusInEdit"


class EmptyReparandum(AnnotationError):
    kind = "EmptyReparandum"


class StrayPlus(AnnotationError):
    kind = "StrayPlus"


class EmptyCorpus(ValueError):
    pass


class MalformedRecord(ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


# -- lexer ------------------------------------------------------------------

@dataclass
class _Lex:
    kind: str  # TOKEN LBRACK RBRACK PLUS LBRACE RBRACE TERM
    col: int
    value: object = None


_LBRACE_RE = re.compile(r"\{([A-Za-z]*)")
_CATEGORIES = {c.value for c in InterregnumCategory}


def _lex(text: str) -> list[_Lex]:
    out: list[_Lex] = []
    pieces = [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", text)]
    i = 0
    while i < len(pieces):
        piece, col = pieces[i]
        i += 1
        if piece == TERMINATOR:
            out.append(_Lex("TERM", col))
            continue
        m = _LBRACE_RE.fullmatch(piece)
        if m:
            cat = m.group(1)
            if not cat and i < len(pieces) and pieces[i][0] in _CATEGORIES:
                # "{ F um , }" spelling
                cat = pieces[i][0]
                i += 1
            if not cat:
                cat = InterregnumCategory.F.value
            if cat not in _CATEGORIES:
                raise UnknownInterregnumCategory(f"'{{{cat}'", col)
            out.append(_Lex("LBRACE", col, InterregnumCategory(cat)))
            continue
        # peel glued brackets: "[to" or "mean}" or ",]"
        head = 0
        while head < len(piece) and piece[head] == "[":
            out.append(_Lex("LBRACK", col + head))
            head += 1
        tail = len(piece)
        while tail > head and piece[tail - 1] in "]}":
            tail -= 1
        core = piece[head:tail]
        if core == "+":
            out.append(_Lex("PLUS", col + head))
        elif core:
            if _STRUCTURAL.intersection(core):
                raise AnnotationError(f"structural character inside token {core!r}",
                                      col + head, kind="InvalidToken")
            out.append(_Lex("TOKEN", col + head, Token.from_text(core)))
        for j in range(tail, len(piece)):
            out.append(_Lex("RBRACK" if piece[j] == "]" else "RBRACE", col + j))
    return out


# -- parser -----------------------------------------------------------------

class _Parser:
    def __init__(self, lexemes: list[_Lex]):
        self.lx = lexemes
        self.i = 0

    def peek(self) -> _Lex | None:
        return self.lx[self.i] if self.i < len(self.lx) else None

    def sequence(self, depth: int) -> list[Chunk]:
        """Read chunks until a lexeme that closes or splits the enclosing region."""
        chunks: list[Chunk] = []
        run: list[Token] = []
        while True:
            lx = self.peek()
            if lx is None or lx.kind in ("PLUS", "RBRACK", "TERM", "RBRACE"):
                break
            self.i += 1
            if lx.kind == "TOKEN":
                run.append(lx.value)
                continue
            if run:
                chunks.append(Fluent(run))
                run = []
            if lx.kind == "LBRACK":
                chunks.append(self.edit(lx, depth + 1))
            else:
                chunks.append(self.tagged(lx))
        if run:
            chunks.append(Fluent(run))
        return chunks

    def tagged(self, opener: _Lex) -> Tagged:
        toks: list[Token] = []
        while True:
            lx = self.peek()
            if lx is None:
                raise UnbalancedBracket("'{' is never closed", opener.col)
            self.i += 1
            if lx.kind == "RBRACE":
                break
            if lx.kind != "TOKEN":
                raise AnnotationError("only words may appear inside braces", lx.col,
                                      kind="StructureInsideBraces")
            toks.append(lx.value)
        if not toks:
            raise AnnotationError("empty brace group", opener.col, kind="EmptyBraces")
        return Tagged(opener.value, toks)

    def edit(self, opener: _Lex, depth: int) -> Edit:
        reparandum = self.sequence(depth)
        lx = self.peek()
        if lx is None:
            raise UnbalancedBracket("'[' is never closed", opener.col)
        if lx.kind == "RBRACK":
            raise MissingPlusInEdit("'[ ]' region has no '+'", opener.col)
        if lx.kind == "RBRACE":
            raise UnbalancedBracket("'}' without matching '{'", lx.col)
        if lx.kind == "TERM":
            raise AnnotationError("E_S inside an edit region", lx.col, kind="MisplacedTerminator")
        plus = lx
        self.i += 1
        if not reparandum:
            raise EmptyReparandum("nothing between '[' and '+'", plus.col)
        after = self.sequence(depth)
        lx = self.peek()
        if lx is None:
            raise UnbalancedBracket("'[' is never closed", opener.col)
        if lx.kind == "PLUS":
            raise StrayPlus("second '+' in one edit region", lx.col)
        if lx.kind == "RBRACE":
            raise UnbalancedBracket("'}' without matching '{'", lx.col)
        if lx.kind == "TERM":
            raise AnnotationError("E_S inside an edit region", lx.col, kind="MisplacedTerminator")
        self.i += 1
        k = 0
        while k < len(after) and isinstance(after[k], Tagged):
            k += 1
        return Edit(reparandum, after[:k], after[k:])

    def sentence(self) -> AnnotatedSentence:
        chunks = self.sequence(0)
        terminated = False
        lx = self.peek()
        if lx is not None:
            if lx.kind == "PLUS":
                raise StrayPlus("'+' outside any edit region", lx.col)
            if lx.kind in ("RBRACK", "RBRACE"):
                raise UnbalancedBracket(f"unmatched '{']' if lx.kind == 'RBRACK' else '}'}'",
                                        lx.col)
            self.i += 1
            terminated = True
            if self.peek() is not None:
                raise AnnotationError("E_S must end the sentence", lx.col,
                                      kind="MisplacedTerminator")
        if not chunks:
            raise AnnotationError("sentence has no words", 1, kind="EmptySentence")
        return AnnotatedSentence(chunks, terminated)


def parse_annotated(text: str) -> AnnotatedSentence:
    """Parse one annotation-format line into a chunk tree.

    >>> s = parse_annotated("i [ like + like ] it E_S")
    >>> [l for l in to_labeled(s).labels]
    ['O', 'I', 'O', 'O']
    """
    return _Parser(_lex(text)).sentence()


# -- rendering and projections --------------------------------------------------

def _render_chunks(chunks: Iterable[Chunk], out: list[str]):
    for c in chunks:
        if isinstance(c, Fluent):
            out.extend(str(t) for t in c.tokens)
        elif isinstance(c, Tagged):
            out.append("{" + c.category.value)
            out.extend(str(t) for t in c.tokens)
            out.append("}")
        else:
            out.append("[")
            _render_chunks(c.reparandum, out)
            out.append("+")
            _render_chunks(c.interregnum, out)
            _render_chunks(c.repair, out)
            out.append("]")


def render_annotated(s: AnnotatedSentence) -> str:
    out: list[str] = []
    _render_chunks(s.chunks, out)
    if s.terminated:
        out.append(TERMINATOR)
    return " ".join(out)


def flatten(chunks: Iterable[Chunk]) -> list[Token]:
    """All tokens in surface order."""
    out: list[Token] = []
    for c in chunks:
        if isinstance(c, Edit):
            out += flatten(c.reparandum)
            out += flatten(c.interregnum)
            out += flatten(c.repair)
        else:
            out.extend(c.tokens)
    return out


def _label_walk(chunks, inside: bool, labels: list[str]):
    for c in chunks:
        if isinstance(c, Edit):
            _label_walk(c.reparandum, True, labels)
            _label_walk(c.interregnum, inside, labels)
            _label_walk(c.repair, inside, labels)
        else:
            labels.extend([LABEL_I if inside else LABEL_O] * len(c.tokens))


def to_labeled(s: AnnotatedSentence) -> LabeledSentence:
    """Project to tokens plus I/O labels; I marks reparandum tokens at any depth."""
    labels: list[str] = []
    _label_walk(s.chunks, False, labels)
    return LabeledSentence(flatten(s.chunks), labels)


def _fluent_tokens(chunks: Iterable[Chunk]) -> list[Token]:
    out: list[Token] = []
    for c in chunks:
        if isinstance(c, Edit):
            out += _fluent_tokens(c.repair)
        else:
            out.extend(c.tokens)
    return out


def strip_to_fluent(s: AnnotatedSentence | Sequence[Chunk]) -> list[Token]:
    """Drop every reparandum and interregnum, keeping repairs in order."""
    chunks = s.chunks if isinstance(s, AnnotatedSentence) else s
    return _fluent_tokens(chunks)


def is_punct(surface: str) -> bool:
    return not any(ch.isalnum() for ch in surface)


def _comparable(chunks) -> list[str]:
    return [t.surface.casefold() for t in _fluent_tokens(chunks) if not is_punct(t.surface)]


def classify_edit(e: Edit) -> DisfluencyType:
    # nested edits compare by their fluent reading
    repair = _comparable(e.repair)
    if not repair:
        return DisfluencyType.DELETION
    if _comparable(e.reparandum) == repair:
        return DisfluencyType.REPETITION
    return DisfluencyType.SUBSTITUTION


def outer_edits(s: AnnotatedSentence) -> list[Edit]:
    return [c for c in s.chunks if isinstance(c, Edit)]


def iter_edits(chunks: Iterable[Chunk]) -> Iterator[Edit]:
    """Every Edit at any depth, pre-order."""
    for c in chunks:
        if isinstance(c, Edit):
            yield c
            yield from iter_edits(c.reparandum)
            yield from iter_edits(c.repair)


def normalize_chunks(chunks: Iterable[Chunk]) -> list[Chunk]:
    """Merge adjacent Fluent runs so the tree matches what the parser would build."""
    out: list[Chunk] = []
    for c in chunks:
        if isinstance(c, Fluent) and out and isinstance(out[-1], Fluent):
            out[-1] = Fluent(out[-1].tokens + c.tokens)
        else:
            out.append(c)
    return out


# -- file formats -------------------------------------------------------------

def read_annotated(path) -> list[AnnotatedSentence]:
    """Read one annotated sentence per non-blank line; errors carry the line number."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(parse_annotated(line))
            except AnnotationError as exc:
                exc.line = lineno
                raise
    return out


def read_plain(path) -> list[list[Token]]:
    """Whitespace-tokenized fluent text, one sentence per line."""
    with open(path, encoding="utf-8") as fh:
        return [[Token.from_text(w) for w in line.split() if w != TERMINATOR]
                for line in fh if line.strip()]


def to_record(item: AnnotatedSentence | LabeledSentence, id=None) -> dict:
    if isinstance(item, AnnotatedSentence):
        raw = render_annotated(item)
        labeled = to_labeled(item)
        types = [classify_edit(e).value for e in outer_edits(item)]
    else:
        raw, labeled, types = None, item, []
    rec = {}
    if id is not None:
        rec["id"] = id
    rec["raw"] = raw
    rec["tokens"] = [{"surface": t.surface, "pos": t.pos} for t in labeled.tokens]
    rec["labels"] = list(labeled.labels)
    rec["types"] = types
    return rec


def from_record(rec: dict, line: int = 0) -> AnnotatedSentence | LabeledSentence:
    if not isinstance(rec, dict):
        raise MalformedRecord(line, "record is not a JSON object")
    for key in ("tokens", "labels"):
        if key not in rec:
            raise MalformedRecord(line, f"missing field {key!r}")
    try:
        tokens = [Token(t["surface"], t.get("pos")) for t in rec["tokens"]]
        labeled = LabeledSentence(tokens, rec["labels"])
    except (KeyError, TypeError, AttributeError, ValueError) as exc:
        raise MalformedRecord(line, f"bad tokens/labels: {exc}") from None
    raw = rec.get("raw")
    if raw is None:
        return labeled
    try:
        sent = parse_annotated(raw)
    except AnnotationError as exc:
        raise MalformedRecord(line, str(exc)) from None
    if to_labeled(sent) != labeled:
        raise MalformedRecord(line, "tokens/labels disagree with raw annotation")
    return sent


def write_jsonl(path, items: Iterable[AnnotatedSentence | LabeledSentence], with_ids=False):
    with open(path, "w", encoding="utf-8") as fh:
        for i, item in enumerate(items):
            fh.write(json.dumps(to_record(item, i if with_ids else None), ensure_ascii=False))
            fh.write("\n")


def read_jsonl(path) -> list[AnnotatedSentence | LabeledSentence]:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(lineno, f"invalid JSON: {exc.msg}") from None
        out.append(from_record(rec, lineno))
    return out


def load_corpus(path) -> list[AnnotatedSentence | LabeledSentence]:
    """Load ``.jsonl`` records or annotation text, chosen by suffix."""
    if str(path).endswith(".jsonl"):
        return read_jsonl(path)
    return read_annotated(path)

