import json
import math

import numpy as np
import pytest

from disfl.corpus import LabeledSentence, Token
from disfl.evaluate import score
from disfl.tagger import (I_IDX, O_IDX, DivergedLoss, EmptyInput, LengthMismatch, TaggerModel,
                          TrainConfig, Vocab, forward, grad, load, loss, predict_labels, save, train)
from oracles import match_features, scalar_sentence_loss
from synth import labeled_corpus


def sent(text, labels):
    return LabeledSentence([Token(w) for w in text.split()], list(labels))


BATCH = [
    sent("i want want tea", "OIOO"),
    sent("we went uh left", "OIOO"),
    sent("the the cat sat", "IOOO"),
    sent("a b c", "OOO"),
    sent("go go go home now", "IIOOO"),
]


def small_model(seed=0, dim=8, hidden=16, scale=None):
    vocab = Vocab.build(BATCH)
    m = TaggerModel.init(vocab, dim=dim, hidden=hidden, window=2, match_window=3, seed=seed)
    if scale is not None:
        rng = np.random.default_rng(seed + 100)
        m.params = {k: rng.normal(0, scale, v.shape) for k, v in m.params.items()}
    return m


def test_zero_head_gives_half():
    m = small_model()
    probs = forward(m, BATCH[0].tokens)
    assert probs.shape == (4, 2)
    assert np.all(probs == 0.5)


def test_rows_normalized():
    m = small_model(scale=2.0)
    for s in BATCH:
        p = forward(m, s.tokens)
        assert np.allclose(p.sum(axis=1), 1.0, atol=1e-12)
        assert np.all((p >= 0) & (p <= 1))


def test_forward_deterministic():
    a, b = small_model(seed=3, scale=0.5), small_model(seed=3, scale=0.5)
    assert np.array_equal(forward(a, BATCH[1].tokens), forward(b, BATCH[1].tokens))


def test_initial_loss_is_T_ln2_over_N():
    m = small_model()
    T = sum(len(s.tokens) for s in BATCH)
    assert loss(m, BATCH) == pytest.approx(T * math.log(2) / len(BATCH), rel=1e-14)


def test_one_hot_limit():
    m = small_model()
    n_o = sum(s.labels.count("O") for s in BATCH)
    n_i = sum(s.labels.count("I") for s in BATCH)
    # predict O with overwhelming confidence everywhere: loss -> (#I tokens * margin) / N
    m.params["out_b"] = np.array([50.0, 0.0])
    assert loss(m, BATCH) == pytest.approx(n_i * 50.0 / len(BATCH), rel=1e-9)
    only_o = [s for s in BATCH if "I" not in s.labels]
    assert loss(m, only_o) < 1e-20
    assert n_o > 0


def test_matches_scalar_oracle():
    m = small_model(scale=0.5)
    want = 0.0
    for s in BATCH:
        ids = m.vocab.encode(s.tokens).tolist()
        feats = match_features([t.surface for t in s.tokens], m.match_window)
        labels = [I_IDX if l == "I" else O_IDX for l in s.labels]
        want += scalar_sentence_loss(m.params, ids, feats, labels, m.window)
    assert loss(m, BATCH) == pytest.approx(want / len(BATCH), rel=1e-12)


def rel_err(a, n):
    return abs(a - n) / max(abs(a), abs(n), 1e-8)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_finite_differences(seed):
    m = small_model(seed=seed, scale=0.5)
    _, g = grad(m, BATCH)
    rng = np.random.default_rng(seed)
    h = 1e-4
    worst = 0.0
    for name, p in m.params.items():
        flat = p.reshape(-1)
        for idx in rng.choice(flat.size, size=min(25, flat.size), replace=False):
            orig = flat[idx]
            flat[idx] = orig + h
            up = loss(m, BATCH)
            flat[idx] = orig - h
            down = loss(m, BATCH)
            flat[idx] = orig
            worst = max(worst, rel_err(g[name].reshape(-1)[idx], (up - down) / (2 * h)))
    assert worst < 1e-4


def test_bias_gradient_closed_form():
    m = small_model(scale=0.5)
    _, g = grad(m, BATCH)
    want = np.zeros(2)
    for s in BATCH:
        p = forward(m, s.tokens)
        onehot = np.zeros_like(p)
        onehot[np.arange(len(s.labels)), [I_IDX if l == "I" else O_IDX for l in s.labels]] = 1
        want += (p - onehot).sum(axis=0)
    assert np.allclose(g["out_b"], want / len(BATCH), rtol=1e-12, atol=1e-15)


def test_label_frequency_bias_is_stationary():
    m = small_model()
    n_o = sum(s.labels.count("O") for s in BATCH)
    n_i = sum(s.labels.count("I") for s in BATCH)
    m.params["out_b"] = np.log([n_o, n_i])
    _, g = grad(m, BATCH)
    assert np.allclose(g["out_b"], 0.0, atol=1e-14)


def test_sentence_order_invariance():
    m = small_model(scale=0.5)
    L1, g1 = grad(m, BATCH)
    L2, g2 = grad(m, BATCH[::-1])
    assert L1 == pytest.approx(L2, rel=1e-13)
    for k in g1:
        assert np.allclose(g1[k], g2[k], rtol=1e-11, atol=1e-15)


def test_checkpoint_round_trip_is_bitwise(tmp_path):
    m = small_model(scale=0.7)
    path = tmp_path / "m.json"
    save(m, path, TrainConfig())
    back = load(path)
    for k in m.params:
        assert back.params[k].tobytes() == m.params[k].tobytes()
    assert back.vocab.words == m.vocab.words
    assert forward(back, BATCH[0].tokens).tobytes() == forward(m, BATCH[0].tokens).tobytes()
    assert json.loads(path.read_text())["train_config"]["learning_rate"] == 1e-3


def test_load_rejects_other_json(tmp_path):
    path = tmp_path / "x.json"
    path.write_text('{"format": "other"}')
    with pytest.raises(ValueError):
        load(path)


def test_training_deterministic():
    corpus = labeled_corpus(20)
    vocab = Vocab.build(corpus)
    cfg = TrainConfig(epochs=3, batch_size=8)
    a, ha = train(TaggerModel.init(vocab, dim=8, hidden=16), corpus, cfg)
    b, hb = train(TaggerModel.init(vocab, dim=8, hidden=16), corpus, cfg)
    assert ha.losses == hb.losses
    for k in a.params:
        assert np.array_equal(a.params[k], b.params[k])


def test_training_does_not_mutate_input():
    corpus = labeled_corpus(10)
    m = TaggerModel.init(Vocab.build(corpus), dim=8, hidden=16)
    before = {k: v.copy() for k, v in m.params.items()}
    train(m, corpus, TrainConfig(epochs=2))
    assert all(np.array_equal(before[k], m.params[k]) for k in before)


def test_training_reduces_loss_to_small_per_token_value():
    corpus = labeled_corpus(50)
    m = TaggerModel.init(Vocab.build(corpus), dim=16, hidden=32, seed=1)
    trained, hist = train(m, corpus, TrainConfig(epochs=600, batch_size=16, unk_rate=0.0))
    n_tok = sum(len(s.tokens) for s in corpus)
    assert hist.losses[0] == pytest.approx(n_tok * math.log(2) / len(corpus))
    assert hist.losses[-1] * len(corpus) / n_tok < 0.01


def test_early_stopping_restores_best(tmp_path):
    corpus = labeled_corpus(30)
    dev = labeled_corpus(10, seed=9)
    m = TaggerModel.init(Vocab.build(corpus), dim=8, hidden=16)
    ckpt = tmp_path / "c.json"
    trained, hist = train(m, corpus, TrainConfig(epochs=40, patience=2), dev=dev, checkpoint=ckpt)
    best = max(r["dev_f1"] for r in hist.rows)
    assert hist.rows[hist.best_epoch]["dev_f1"] == best
    preds = [predict_labels(trained, s.tokens) for s in dev]
    assert score(dev, preds).f1 == best
    assert ckpt.exists()
    csv = tmp_path / "h.csv"
    hist.to_csv(csv)
    assert csv.read_text().splitlines()[0] == "epoch,loss,dev_f1"


def test_diverged_loss_saves_last_finite(tmp_path):
    corpus = labeled_corpus(5)
    m = TaggerModel.init(Vocab.build(corpus), dim=8, hidden=16)
    m.params["out_w"][:] = np.nan
    ckpt = tmp_path / "c.json"
    with pytest.raises(DivergedLoss) as info:
        train(m, corpus, TrainConfig(epochs=2), checkpoint=ckpt)
    assert info.value.epoch == 1
    assert ckpt.exists()


class Stub:
    def __init__(self, p_i):
        self.p_i = np.asarray(p_i, dtype=float)

    def predict_proba(self, tokens):
        return np.stack([1 - self.p_i, self.p_i], axis=1)


def test_predict_labels_threshold_and_tie():
    toks = [Token(w) for w in "a b c d".split()]
    stub = Stub([0.2, 0.5, 0.51, 0.9])
    assert predict_labels(stub, toks) == ["O", "I", "I", "I"]
    assert predict_labels(stub, toks, 0.6) == ["O", "O", "O", "I"]
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            predict_labels(stub, toks, bad)


def test_errors():
    m = small_model()
    with pytest.raises(EmptyInput):
        forward(m, [])
    with pytest.raises(EmptyInput):
        loss(m, [])
    bad = LabeledSentence.__new__(LabeledSentence)
    object.__setattr__(bad, "tokens", (Token("a"),))
    object.__setattr__(bad, "labels", ("O", "O"))
    with pytest.raises(LengthMismatch):
        loss(m, [bad])
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0)


def test_unknown_words_map_to_unk():
    v = Vocab.build([[Token("Hello")]])
    assert v.encode([Token("hello"), Token("zzz")]).tolist() == [2, 1]
