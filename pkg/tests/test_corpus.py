import doctest
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import disfl.corpus
from disfl.corpus import (AnnotatedSentence, DisfluencyType, Edit, Fluent, LabeledSentence,
                          MalformedRecord, Tagged, Token, classify_edit, flatten, iter_edits,
                          outer_edits, parse_annotated, read_annotated, read_jsonl,
                          render_annotated, strip_to_fluent, to_labeled, write_jsonl)
from oracles import scan_counts, scan_labels

EQ1 = "a flight [ to Boston , + { F um , } { E I mean } to Denver ]"
TABLE1 = ("{C and/CC } they/PRP are/VBP beginning/VBG to/TO be/VB a/DT budget/NN problem/NN "
          "but/CC ,/, {F uh/UH ,/, } have/VBP not/RB been/VBN really/RB [ up/IN until/IN this/DT ,/, "
          "+ up/IN to/IN this/DT ] point/NN ./. E_S")


def toks(text):
    return tuple(Token.from_text(w) for w in text.split())


def test_doctests():
    assert doctest.testmod(disfl.corpus).failed == 0


def test_eq1_structure():
    s = parse_annotated(EQ1)
    assert s.chunks == (
        Fluent(toks("a flight")),
        Edit([Fluent(toks("to Boston ,"))],
             [Tagged("F", toks("um ,")), Tagged("E", toks("I mean"))],
             [Fluent(toks("to Denver"))]),
    )
    assert not s.terminated


def test_glued_braces_match_spaced_form():
    glued = parse_annotated("a flight [ to Boston , + {F um ,} {E I mean} to Denver ]")
    assert glued == parse_annotated(EQ1)


def test_fluent_only():
    s = parse_annotated("hello/UH world/NN E_S")
    assert s == AnnotatedSentence([Fluent([Token("hello", "UH"), Token("world", "NN")])], True)
    assert not list(iter_edits(s.chunks))


def test_table1_row():
    s = parse_annotated(TABLE1)
    (edit,) = outer_edits(s)
    assert len(flatten(edit.reparandum)) == 4
    assert edit.interregnum == ()
    assert len(flatten(edit.repair)) == 3
    assert s.terminated


@pytest.mark.parametrize("text, kind, column", [
    ("a [ b + c", "UnbalancedBracket", 3),
    ("a ] b", "UnbalancedBracket", 3),
    ("a {F uh b", "UnbalancedBracket", 3),
    ("a {Q uh } b", "UnknownInterregnumCategory", 3),
    ("a [ b c ] d", "MissingPlusInEdit", 3),
    ("a [ + b ] d", "EmptyReparandum", 5),
    ("a + b", "StrayPlus", 3),
    ("[ a + b + c ]", "StrayPlus", 9),
    ("a E_S b", "MisplacedTerminator", 3),
    ("E_S", "EmptySentence", 1),
    ("{F }", "EmptyBraces", 1),
])
def test_parse_errors(text, kind, column):
    with pytest.raises(disfl.corpus.AnnotationError) as info:
        parse_annotated(text)
    assert info.value.kind == kind
    assert info.value.column == column


def test_token_split_on_last_slash():
    assert Token.from_text("and/or/CC") == Token("and/or", "CC")
    assert Token.from_text(",/,") == Token(",", ",")
    assert Token.from_text("my/PRP$") == Token("my", "PRP$")
    assert Token.from_text("bare") == Token("bare")


def test_render_deletion():
    s = AnnotatedSentence([Edit([Fluent(toks("w1 w2"))])])
    assert render_annotated(s) == "[ w1 w2 + ]"


def test_render_canonical_whitespace():
    assert render_annotated(parse_annotated("  x   [ y  + ]   z  E_S ")) == "x [ y + ] z E_S"


def test_fixture_round_trip(seed_corpus):
    for s in seed_corpus:
        line = render_annotated(s)
        assert parse_annotated(line) == s
        assert render_annotated(parse_annotated(line)) == line


# -- labeling -------------------------------------------------------------------

def test_eq1_labels_and_fluent_reading():
    s = parse_annotated(EQ1)
    lab = to_labeled(s)
    assert [t.surface for t in lab.tokens] == ["a", "flight", "to", "Boston", ",", "um", ",",
                                               "I", "mean", "to", "Denver"]
    assert list(lab.labels) == list("OOIIIOOOOOO")
    assert [t.surface for t in strip_to_fluent(s)] == ["a", "flight", "to", "Denver"]


def test_nested_edit_labels():
    s = parse_annotated("[ [ a + b ] c + d ]")
    assert list(to_labeled(s).labels) == ["I", "I", "I", "O"]
    assert list(to_labeled(s).labels) == scan_labels("[ [ a + b ] c + d ]")


def test_fluent_sentence_projections():
    s = parse_annotated("hello/UH world/NN E_S")
    assert set(to_labeled(s).labels) == {"O"}
    assert strip_to_fluent(s) == flatten(s.chunks)


def test_strip_deletion():
    assert [t.surface for t in strip_to_fluent(parse_annotated("x [ y + ] z"))] == ["x", "z"]


def test_labeled_sentence_invariants():
    with pytest.raises(ValueError):
        LabeledSentence([Token("a")], ["I", "O"])
    with pytest.raises(ValueError):
        LabeledSentence([], [])
    with pytest.raises(ValueError):
        LabeledSentence([Token("a")], ["B"])


def test_type_invariants():
    with pytest.raises(ValueError):
        Edit([])
    with pytest.raises(ValueError):
        Edit([Fluent(toks("a"))], [Fluent(toks("b"))])
    with pytest.raises(ValueError):
        Token("a b")
    with pytest.raises(ValueError):
        Token("a]")
    with pytest.raises(ValueError):
        Token("a", "")
    with pytest.raises(ValueError):
        Tagged("X", toks("a"))


# -- classification ---------------------------------------------------------------

@pytest.mark.parametrize("text, expected", [
    ("[ up/IN until/IN this/DT ,/, + up/IN to/IN this/DT ]", DisfluencyType.SUBSTITUTION),
    ("[ on/IN ,/, + on/IN ]", DisfluencyType.REPETITION),
    ("[ On , + on ]", DisfluencyType.REPETITION),
    ("[ we went + ]", DisfluencyType.DELETION),
    ("[ we went + , ]", DisfluencyType.DELETION),
    ("[ [ on , + on ] + on ]", DisfluencyType.REPETITION),
])
def test_classify_edit(text, expected):
    (edit,) = outer_edits(parse_annotated(text))
    assert classify_edit(edit) == expected


# -- property tests over random trees ------------------------------------------------

words = st.sampled_from(["i", "we", "go", "the", "Denver", ",", "./.", "um/UH", "like/VB", "PRP$/X"])
token_st = words.map(Token.from_text)
cat_st = st.sampled_from("FEDCA")
tagged_st = st.builds(lambda c, ts: Tagged(c, ts), cat_st, st.lists(token_st, min_size=1, max_size=3))


@st.composite
def chunk_lists(draw, depth, min_size=1):
    n = draw(st.integers(min_size, 4))
    items = []
    kinds = ["tok", "tok", "tagged"] + (["edit"] if depth > 0 else [])
    for _ in range(n):
        kind = draw(st.sampled_from(kinds))
        if kind == "tok":
            items.append(draw(token_st))
        elif kind == "tagged":
            items.append(draw(tagged_st))
        else:
            items.append(draw(edits(depth - 1)))
    chunks, run = [], []
    for it in items:
        if isinstance(it, Token):
            run.append(it)
            continue
        if run:
            chunks.append(Fluent(run))
            run = []
        chunks.append(it)
    if run:
        chunks.append(Fluent(run))
    return chunks


@st.composite
def edits(draw, depth):
    reparandum = draw(chunk_lists(depth, 1))
    interregnum = draw(st.lists(tagged_st, max_size=2))
    repair = draw(chunk_lists(depth, 0))
    while repair and isinstance(repair[0], Tagged):
        repair = repair[1:]
    return Edit(reparandum, interregnum, repair)


sentences = st.builds(AnnotatedSentence, chunk_lists(2, 1), st.booleans())


@settings(max_examples=300, deadline=None)
@given(sentences)
def test_round_trip_random_trees(s):
    text = render_annotated(s)
    assert parse_annotated(text) == s
    assert render_annotated(parse_annotated(text)) == text


@settings(max_examples=300, deadline=None)
@given(sentences)
def test_labels_match_bracket_scan(s):
    text = render_annotated(s)
    lab = to_labeled(s)
    assert list(lab.labels) == scan_labels(text)
    total, rep, inter = scan_counts(text)
    assert len(lab.tokens) == total
    assert lab.labels.count("I") == rep
    assert len(strip_to_fluent(s)) == total - rep - inter


@settings(max_examples=200, deadline=None)
@given(sentences)
def test_no_edit_sentences_are_all_outside(s):
    if any(isinstance(c, Edit) for c in s.chunks):
        return
    assert set(to_labeled(s).labels) == {"O"}
    assert strip_to_fluent(s) == flatten(s.chunks)


@settings(max_examples=200, deadline=None)
@given(edits(2))
def test_classify_total_and_deterministic(e):
    first = classify_edit(e)
    assert first in DisfluencyType
    assert classify_edit(e) == first


# -- JSONL ------------------------------------------------------------------------

def test_jsonl_three_records(tmp_path, three_path):
    sents = read_annotated(three_path)
    path = tmp_path / "c.jsonl"
    write_jsonl(path, sents)
    lines = path.read_text().splitlines()
    assert len(lines) == 3
    rec = json.loads(lines[0])
    assert set(rec) == {"raw", "tokens", "labels", "types"}
    assert rec["types"] == ["Substitution"]
    assert read_jsonl(path) == sents


def test_jsonl_byte_stable(tmp_path, seed_corpus):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_jsonl(a, seed_corpus)
    write_jsonl(b, read_jsonl(a))
    assert a.read_bytes() == b.read_bytes()


def test_jsonl_labeled_only_records(tmp_path):
    lab = LabeledSentence([Token("a", "DT"), Token("a", "DT")], ["I", "O"])
    path = tmp_path / "l.jsonl"
    write_jsonl(path, [lab])
    assert read_jsonl(path) == [lab]


@pytest.mark.parametrize("record, line", [
    ({"raw": "a", "labels": ["O"], "types": []}, 2),
    ({"raw": "a [ b + ]", "tokens": [{"surface": "a"}, {"surface": "b"}], "labels": ["O", "O"]}, 2),
    ({"raw": "a [ b", "tokens": [{"surface": "a"}, {"surface": "b"}], "labels": ["O", "I"]}, 2),
    ({"tokens": [{"surface": "a"}], "labels": ["O", "O"]}, 2),
])
def test_jsonl_malformed(tmp_path, record, line):
    path = tmp_path / "bad.jsonl"
    good = {"raw": "x", "tokens": [{"surface": "x", "pos": None}], "labels": ["O"], "types": []}
    path.write_text(json.dumps(good) + "\n" + json.dumps(record) + "\n")
    with pytest.raises(MalformedRecord) as info:
        read_jsonl(path)
    assert info.value.line == line


def test_jsonl_invalid_json(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text("{not json\n")
    with pytest.raises(MalformedRecord) as info:
        read_jsonl(path)
    assert info.value.line == 1


def test_read_annotated_reports_line(tmp_path):
    path = tmp_path / "x.txt"
    path.write_text("a b\n\nc [ d\n")
    with pytest.raises(disfl.corpus.UnbalancedBracket) as info:
        read_annotated(path)
    assert info.value.line == 3
