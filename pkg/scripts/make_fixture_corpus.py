"""Regenerate src/disfl/data/seed_corpus.txt.

Base sentences are hand-tagged; disfluencies are inserted with a fixed seed so
the fixture is stable. Run from the repository root:

    python scripts/make_fixture_corpus.py
"""
import random
from pathlib import Path

from disfl.corpus import (AnnotatedSentence, Edit, Fluent, Tagged, Token,
                          normalize_chunks, parse_annotated, render_annotated)

BASE = """\
i/PRP think/VBP it/PRP is/VBZ a/DT good/JJ idea/NN
we/PRP went/VBD to/TO the/DT lake/NN last/JJ summer/NN
my/PRP$ wife/NN works/VBZ at/IN the/DT hospital/NN downtown/NN
they/PRP are/VBP becoming/VBG a/DT budget/NN problem/NN
the/DT kids/NNS like/VBP to/TO play/VB outside/RB
i/PRP do/VBP n't/RB watch/VB much/JJ television/NN anymore/RB
we/PRP have/VBP two/CD dogs/NNS and/CC a/DT cat/NN
it/PRP was/VBD really/RB hot/JJ in/IN texas/NNP this/DT year/NN
he/PRP bought/VBD a/DT new/JJ car/NN last/JJ week/NN
she/PRP wants/VBZ to/TO go/VB back/RB to/TO school/NN
i/PRP usually/RB read/VBP the/DT paper/NN in/IN the/DT morning/NN
you/PRP can/MD get/VB a/DT lot/NN of/IN news/NN on/IN the/DT radio/NN
our/PRP$ neighbors/NNS grow/VBP tomatoes/NNS in/IN the/DT back/JJ yard/NN
that/DT is/VBZ the/DT kind/NN of/IN thing/NN i/PRP like/VBP
we/PRP moved/VBD here/RB about/IN five/CD years/NNS ago/RB
i/PRP work/VBP for/IN a/DT small/JJ company/NN in/IN dallas/NNP
the/DT schools/NNS here/RB are/VBP pretty/RB good/JJ
my/PRP$ boss/NN has/VBZ bought/VBN the/DT software/NN
it/PRP takes/VBZ about/IN an/DT hour/NN to/TO drive/VB there/RB
i/PRP have/VBP been/VBN there/RB a/DT couple/NN of/IN times/NNS
we/PRP try/VBP to/TO eat/VB dinner/NN together/RB
the/DT weather/NN has/VBZ been/VBN really/RB strange/JJ lately/RB
he/PRP plays/VBZ golf/NN every/DT weekend/NN
i/PRP would/MD like/VB to/TO see/VB more/JJR people/NNS vote/VB
they/PRP built/VBD a/DT new/JJ mall/NN near/IN our/PRP$ house/NN
you/PRP have/VBP to/TO pay/VB for/IN everything/NN these/DT days/NNS
my/PRP$ son/NN is/VBZ in/IN the/DT third/JJ grade/NN
we/PRP do/VBP n't/RB really/RB have/VB a/DT garden/NN
it/PRP depends/VBZ on/IN what/WP you/PRP want/VBP to/TO do/VB
i/PRP keep/VBP my/PRP$ checkbook/NN on/IN a/DT disk/NN
she/PRP teaches/VBZ math/NN at/IN the/DT high/JJ school/NN
the/DT price/NN of/IN gas/NN went/VBD up/RP again/RB
i/PRP think/VBP the/DT jury/NN system/NN works/VBZ pretty/RB well/RB
we/PRP saw/VBD a/DT movie/NN on/IN friday/NNP night/NN
they/PRP should/MD spend/VB more/JJR money/NN on/IN education/NN
my/PRP$ husband/NN does/VBZ most/JJS of/IN the/DT cooking/NN
i/PRP grew/VBD up/RP in/IN a/DT small/JJ town/NN
the/DT car/NN needs/VBZ new/JJ tires/NNS
we/PRP went/VBD camping/VBG in/IN the/DT mountains/NNS
you/PRP know/VBP it/PRP is/VBZ hard/JJ to/TO find/VB good/JJ help/NN
i/PRP really/RB enjoyed/VBD that/DT book/NN
our/PRP$ daughter/NN just/RB started/VBD college/NN
they/PRP raised/VBD the/DT taxes/NNS again/RB
i/PRP listen/VBP to/TO music/NN in/IN the/DT car/NN
we/PRP recycle/VBP paper/NN and/CC cans/NNS
the/DT company/NN pays/VBZ for/IN my/PRP$ insurance/NN
he/PRP used/VBD to/TO live/VB in/IN california/NNP
i/PRP do/VBP n't/RB know/VB much/JJ about/IN that/DT
it/PRP costs/VBZ a/DT lot/NN to/TO fix/VB a/DT house/NN
we/PRP take/VBP the/DT bus/NN to/TO work/NN
she/PRP has/VBZ lived/VBN here/RB all/DT her/PRP$ life/NN
i/PRP like/VBP to/TO go/VB fishing/NN with/IN my/PRP$ dad/NN
the/DT team/NN played/VBD really/RB well/RB this/DT season/NN
you/PRP should/MD try/VB that/DT restaurant/NN
they/PRP have/VBP a/DT big/JJ family/NN
i/PRP started/VBD running/VBG a/DT few/JJ years/NNS ago/RB
we/PRP need/VBP a/DT bigger/JJR house/NN
the/DT news/NN is/VBZ always/RB so/RB depressing/JJ
he/PRP is/VBZ a/DT very/RB good/JJ teacher/NN
i/PRP think/VBP people/NNS should/MD be/VB more/RBR careful/JJ
"""

SUBSTITUTES = {
    "NN": ["car", "house", "job", "school", "idea", "problem", "town", "week"],
    "NNS": ["people", "kids", "years", "things", "dogs"],
    "VBP": ["think", "like", "want", "have", "know"],
    "VBD": ["went", "had", "saw", "got", "said"],
    "VB": ["get", "go", "see", "make", "find"],
    "JJ": ["good", "big", "new", "small", "nice"],
    "IN": ["in", "on", "at", "with", "for"],
    "DT": ["the", "a", "this", "that"],
    "PRP": ["i", "we", "they", "you", "he"],
    "RB": ["really", "just", "pretty", "always"],
}

INTERREGNA = [
    ("F", "uh/UH ,/,"), ("F", "um/UH ,/,"), ("F", "uh/UH"),
    ("E", "I/PRP mean/VBP ,/,"), ("E", "or/CC rather/RB"),
    ("D", "you/PRP know/VBP ,/,"), ("D", "well/UH ,/,"), ("D", "like/UH"),
    ("C", "and/CC"), ("C", "but/CC"),
    ("A", "I/PRP guess/VBP"), ("A", "it/PRP seems/VBZ"),
]


def toks(text):
    return [Token.from_text(w) for w in text.split()]


def interregnum(rng, p=0.5):
    if rng.random() >= p:
        return []
    cat, text = rng.choice(INTERREGNA)
    return [Tagged(cat, toks(text))]


def substitute(rng, span):
    out = list(span)
    for _ in range(5):
        k = rng.randrange(len(out))
        alts = [w for w in SUBSTITUTES.get(out[k].pos, []) if w != out[k].surface]
        if alts:
            out[k] = Token(rng.choice(alts), out[k].pos)
            return out
    return None


def make_edit(rng, words, start, n, kind):
    """Return (edit, consumed) modelling a disfluency right before words[start:]."""
    span = words[start:start + n]
    if kind == "rep":
        return Edit([Fluent(span)], interregnum(rng, 0.3), [Fluent(span)]), n
    if kind == "sub":
        alt = substitute(rng, span)
        if alt is None:
            return None, 0
        # the speaker first says the alternative, then repairs to the real words
        return Edit([Fluent(alt + [Token(",", ",")])], interregnum(rng, 0.6), [Fluent(span)]), n
    if kind == "del":
        frag = span[:max(1, n - 1)]
        return Edit([Fluent(frag)], interregnum(rng, 0.4), []), 0
    if kind == "nest":
        inner = Edit([Fluent(span[:1])], [], [Fluent(span[:1])])
        rest = span[1:]
        rep = [inner] + ([Fluent(rest)] if rest else [])
        return Edit(rep, interregnum(rng, 0.5), [Fluent(span)]), n
    raise ValueError(kind)


def disfluent(rng, words, n_edits):
    chunks = []
    i = 0
    starts = sorted(rng.sample(range(len(words) - 1), n_edits))
    for s in starts:
        if s < i:
            continue
        if s > i:
            chunks.append(Fluent(words[i:s]))
        kind = rng.choices(["rep", "sub", "del", "nest"], [4, 4, 2, 1])[0]
        n = rng.randint(2 if kind == "nest" else 1, 3)
        n = min(n, len(words) - 1 - s)
        edit, used = make_edit(rng, words, s, n, kind)
        if edit is None:
            edit, used = make_edit(rng, words, s, n, "rep")
        chunks.append(edit)
        i = s + used
    if i < len(words):
        chunks.append(Fluent(words[i:]))
    if rng.random() < 0.35:
        cat, text = rng.choice([("C", "and/CC"), ("D", "well/UH ,/,"), ("F", "uh/UH ,/,"),
                                ("D", "you/PRP know/VBP ,/,"), ("A", "I/PRP think/VBP")])
        chunks.insert(0, Tagged(cat, toks(text)))
    return AnnotatedSentence(normalize_chunks(chunks), terminated=True)


def main():
    rng = random.Random(20240117)
    bases = [toks(line + " ./.") for line in BASE.strip().splitlines()]
    lines = [
        # reference shapes, kept verbatim
        "{C and/CC } they/PRP are/VBP beginning/VBG to/TO be/VB a/DT budget/NN problem/NN "
        "but/CC ,/, {F uh/UH ,/, } have/VBP not/RB been/VBN really/RB [ up/IN until/IN this/DT ,/, "
        "+ up/IN to/IN this/DT ] point/NN ./. E_S",
        "Now/UH I/PRP know/VBP my/PRP$ boss/NN has/VBZ bought/VBN the/DT software/NN ,/, "
        "{F um/UH ,/, } [ that/WDT he/PRP can/MD ,/, + that/WDT his/PRP$ ] checkbook/NN is/VBZ "
        "[ [ on/IN ,/, + on/IN ] + on/IN ] a/DT disk/NN ,/, E_S",
        "a/DT flight/NN [ to/TO Boston/NNP ,/, + {F um/UH ,/, } {E I/PRP mean/VBP } to/TO Denver/NNP ] E_S",
    ]
    while len(lines) < 240:
        words = rng.choice(bases)
        r = rng.random()
        if r < 0.08:
            sent = AnnotatedSentence([Fluent(words)], terminated=True)
        elif r < 0.14:
            cat, text = rng.choice(INTERREGNA)
            k = rng.randrange(1, len(words) - 1)
            sent = AnnotatedSentence(
                [Fluent(words[:k]), Tagged(cat, toks(text)), Fluent(words[k:])], terminated=True)
        else:
            sent = disfluent(rng, words, rng.choices([1, 2, 3], [6, 3, 1])[0])
        line = render_annotated(sent)
        assert render_annotated(parse_annotated(line)) == line
        lines.append(line)
    out = Path(__file__).resolve().parents[1] / "src/disfl/data/seed_corpus.txt"
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(lines)} lines to {out}")


if __name__ == "__main__":
    main()
