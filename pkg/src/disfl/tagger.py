"""From-scratch I/O sequence tagger.

Each token is encoded from a window of word embeddings (plus a few
word-identity match indicators), passed through a tanh layer, then an affine
two-way softmax head. Loss is per-sentence summed cross-entropy averaged over
the sentences of a batch; gradients are computed analytically.
"""
from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .corpus import LABEL_I, LABEL_O, EmptyCorpus, LabeledSentence, Token

LABELS = (LABEL_O, LABEL_I)  # column order of probability arrays
O_IDX, I_IDX = 0, 1
PAD, UNK = "<pad>", "<unk>"
TRANSFORMER_LEARNING_RATE = 1e-5  # reported for transformer fine-tuning; too small from scratch
CHECKPOINT_FORMAT = "disfl-tagger"
CHECKPOINT_VERSION = 1
PARAM_NAMES = ("embed", "hidden_w", "hidden_b", "out_w", "out_b")


class EmptyInput(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class DivergedLoss(FloatingPointError):
    def __init__(self, epoch: int, checkpoint=None):
        self.epoch = epoch
        self.checkpoint = checkpoint
        super().__init__(f"non-finite loss in epoch {epoch}")


class Detector(Protocol):
    """Anything that maps a token list to a (T, 2) array of (O, I) probabilities."""

    def predict_proba(self, tokens) -> np.ndarray: ...


def _surface(t) -> str:
    return t.surface if isinstance(t, Token) else str(t)


class Vocab:
    def __init__(self, words: Sequence[str], lowercase: bool = True):
        if list(words[:2]) != [PAD, UNK]:
            raise ValueError("vocab must start with the padding and unknown entries")
        self.words = list(words)
        self.lowercase = lowercase
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ValueError("duplicate vocab entries")

    @classmethod
    def build(cls, sentences, lowercase: bool = True, min_count: int = 1) -> "Vocab":
        counts = Counter()
        for s in sentences:
            tokens = s.tokens if hasattr(s, "tokens") else s
            counts.update(cls._norm(_surface(t), lowercase) for t in tokens)
        words = sorted((w for w, c in counts.items() if c >= min_count),
                       key=lambda w: (-counts[w], w))
        return cls([PAD, UNK] + words, lowercase)

    @staticmethod
    def _norm(word: str, lowercase: bool) -> str:
        return word.casefold() if lowercase else word

    def __len__(self):
        return len(self.words)

    def encode(self, tokens) -> np.ndarray:
        unk = self.index[UNK]
        return np.array([self.index.get(self._norm(_surface(t), self.lowercase), unk)
                         for t in tokens], dtype=np.int64)


@dataclass
class TaggerModel:
    vocab: Vocab
    params: dict[str, np.ndarray]
    window: int = 2
    match_window: int = 4

    @classmethod
    def init(cls, vocab: Vocab, dim: int = 32, hidden: int = 64, window: int = 2,
             match_window: int = 4, seed: int = 0) -> "TaggerModel":
        rng = np.random.default_rng(seed)
        fan_in = (2 * window + 1) * dim + 2 * match_window
        params = {
            "embed": rng.uniform(-0.1, 0.1, size=(len(vocab), dim)),
            "hidden_w": rng.standard_normal((hidden, fan_in)) / math.sqrt(fan_in),
            "hidden_b": np.zeros(hidden),
            # zero head: every token starts at (0.5, 0.5)
            "out_w": np.zeros((2, hidden)),
            "out_b": np.zeros(2),
        }
        return cls(vocab, params, window, match_window)

    @property
    def dim(self) -> int:
        return self.params["embed"].shape[1]

    def copy(self) -> "TaggerModel":
        return TaggerModel(self.vocab, {k: v.copy() for k, v in self.params.items()},
                           self.window, self.match_window)

    def predict_proba(self, tokens) -> np.ndarray:
        return forward(self, tokens)

    def is_finite(self) -> bool:
        return all(np.isfinite(v).all() for v in self.params.values())


# -- encoding -----------------------------------------------------------------

@dataclass
class _Encoded:
    ids: np.ndarray        # (N_tok, 2r+1) vocab rows of each window slot
    feats: np.ndarray      # (N_tok, 2m) match indicators
    labels: np.ndarray     # (N_tok,) 0/1, or empty when unlabeled
    weights: np.ndarray    # (N_tok,) loss weight per token


def _match_features(words: list[str], m: int) -> np.ndarray:
    T = len(words)
    out = np.zeros((T, 2 * m))
    for i in range(T):
        for k in range(1, m + 1):
            if i + k < T and words[i + k] == words[i]:
                out[i, k - 1] = 1.0
            if i - k >= 0 and words[i - k] == words[i]:
                out[i, m + k - 1] = 1.0
    return out


def _encode_tokens(model: TaggerModel, tokens, ids=None):
    r = model.window
    if ids is None:
        ids = model.vocab.encode(tokens)
    padded = np.concatenate([np.zeros(r, dtype=np.int64), ids, np.zeros(r, dtype=np.int64)])
    T = len(ids)
    win = padded[np.arange(T)[:, None] + np.arange(2 * r + 1)[None, :]]
    words = [Vocab._norm(_surface(t), model.vocab.lowercase) for t in tokens]
    return win, _match_features(words, model.match_window)


def _encode_batch(model: TaggerModel, batch: Sequence[LabeledSentence], rng=None,
                  unk_rate: float = 0.0) -> _Encoded:
    wins, feats, labels, weights = [], [], [], []
    n = len(batch)
    for s in batch:
        if len(s.tokens) != len(s.labels):
            raise LengthMismatch(f"{len(s.tokens)} tokens vs {len(s.labels)} labels")
        ids = model.vocab.encode(s.tokens)
        if rng is not None and unk_rate > 0:
            ids = np.where(rng.random(len(ids)) < unk_rate, 1, ids)
        w, f = _encode_tokens(model, s.tokens, ids)
        wins.append(w)
        feats.append(f)
        labels.append(np.array([I_IDX if l == LABEL_I else O_IDX for l in s.labels]))
        weights.append(np.full(len(ids), 1.0 / n))
    return _Encoded(np.concatenate(wins), np.concatenate(feats),
                    np.concatenate(labels), np.concatenate(weights))


def _hidden(model: TaggerModel, win, feats):
    p = model.params
    x = p["embed"][win].reshape(len(win), -1)
    u = np.concatenate([x, feats], axis=1)
    h = np.tanh(u @ p["hidden_w"].T + p["hidden_b"])
    return u, h


def _softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True), z - np.log(e.sum(axis=1, keepdims=True))


def forward(model: TaggerModel, tokens) -> np.ndarray:
    """(T, 2) array of (p(O), p(I)) per token."""
    tokens = list(tokens)
    if not tokens:
        raise EmptyInput("cannot tag an empty token list")
    win, feats = _encode_tokens(model, tokens)
    _, h = _hidden(model, win, feats)
    probs, _ = _softmax(h @ model.params["out_w"].T + model.params["out_b"])
    return probs


def _loss_and_grad(model: TaggerModel, enc: _Encoded, want_grad: bool):
    p = model.params
    u, h = _hidden(model, enc.ids, enc.feats)
    probs, logp = _softmax(h @ p["out_w"].T + p["out_b"])
    nll = -logp[np.arange(len(enc.labels)), enc.labels]
    L = float(np.dot(nll, enc.weights))
    if not want_grad:
        return L, None
    d_logits = probs.copy()
    d_logits[np.arange(len(enc.labels)), enc.labels] -= 1.0
    d_logits *= enc.weights[:, None]
    g = {"out_w": d_logits.T @ h, "out_b": d_logits.sum(axis=0)}
    d_z = (d_logits @ p["out_w"]) * (1.0 - h * h)
    g["hidden_w"] = d_z.T @ u
    g["hidden_b"] = d_z.sum(axis=0)
    d_u = d_z @ p["hidden_w"]
    d_x = d_u[:, :enc.ids.shape[1] * model.dim].reshape(enc.ids.shape + (model.dim,))
    g_embed = np.zeros_like(p["embed"])
    np.add.at(g_embed, enc.ids, d_x)
    g["embed"] = g_embed
    return L, g


def loss(model: TaggerModel, batch: Sequence[LabeledSentence]) -> float:
    """Mean over sentences of summed token cross-entropy."""
    batch = list(batch)
    if not batch:
        raise EmptyInput("empty batch")
    return _loss_and_grad(model, _encode_batch(model, batch), False)[0]


def grad(model: TaggerModel, batch: Sequence[LabeledSentence]) -> tuple[float, dict[str, np.ndarray]]:
    batch = list(batch)
    if not batch:
        raise EmptyInput("empty batch")
    return _loss_and_grad(model, _encode_batch(model, batch), True)


def predict_labels(model: Detector, tokens, threshold: float = 0.5) -> list[str]:
    """I wherever p(I) >= threshold; a tie at the threshold resolves to I."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    probs = model.predict_proba(tokens)
    return [LABEL_I if pi >= threshold else LABEL_O for pi in probs[:, I_IDX]]


# -- training -----------------------------------------------------------------

@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 32
    epochs: int = 30
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    patience: int = 0  # 0 disables early stopping
    unk_rate: float = 0.01

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass
class History:
    rows: list[dict] = field(default_factory=list)
    stopped_early: bool = False
    best_epoch: int | None = None

    @property
    def losses(self) -> list[float]:
        return [r["loss"] for r in self.rows]

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "loss", "dev_f1"])
            for r in self.rows:
                w.writerow([r["epoch"], repr(r["loss"]),
                            "" if r["dev_f1"] is None else repr(r["dev_f1"])])


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr, beta1, beta2, eps):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1 - self.b1 ** self.t
        c2 = 1 - self.b2 ** self.t
        for k in PARAM_NAMES:
            g = grads[k]
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def _dev_f1(model, dev) -> float:
    from .evaluate import score
    return score(dev, [predict_labels(model, s.tokens) for s in dev]).f1


def train(model: TaggerModel, corpus: Sequence[LabeledSentence], config: TrainConfig,
          dev: Sequence[LabeledSentence] | None = None, checkpoint=None) -> tuple[TaggerModel, History]:
    """Adam on shuffled mini-batches. Returns a trained copy and per-epoch history.

    Row 0 of the history is the loss before any update. With ``patience`` and a
    dev set, training stops once dev F1 has not improved for that many epochs
    and the best parameters are restored.
    """
    corpus = list(corpus)
    if not corpus:
        raise EmptyCorpus("nothing to train on")
    model = model.copy()
    rng = np.random.default_rng(config.seed)
    opt = Adam(model.params, config.learning_rate, config.beta1, config.beta2, config.adam_eps)
    full = _encode_batch(model, corpus)
    hist = History()

    def record(epoch):
        L = _loss_and_grad(model, full, False)[0]
        f1 = _dev_f1(model, dev) if dev else None
        hist.rows.append({"epoch": epoch, "loss": L, "dev_f1": f1})
        return L, f1

    record(0)
    best = (hist.rows[0]["dev_f1"], model.copy(), 0)
    since_best = 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(corpus))
        for start in range(0, len(corpus), config.batch_size):
            batch = [corpus[i] for i in order[start:start + config.batch_size]]
            enc = _encode_batch(model, batch, rng, config.unk_rate)
            before = {k: v.copy() for k, v in model.params.items()}
            L, g = _loss_and_grad(model, enc, True)
            if not math.isfinite(L):
                return _diverged(model, before, epoch, checkpoint, config)
            opt.step(model.params, g)
            if not model.is_finite():
                return _diverged(model, before, epoch, checkpoint, config)
        L, f1 = record(epoch)
        if not math.isfinite(L):
            raise DivergedLoss(epoch)
        if checkpoint:
            save(model, checkpoint, config)
        if dev and config.patience:
            if best[0] is None or f1 > best[0]:
                best = (f1, model.copy(), epoch)
                since_best = 0
            else:
                since_best += 1
                if since_best >= config.patience:
                    hist.stopped_early = True
                    break
    if dev and config.patience:
        model = best[1]
        hist.best_epoch = best[2]
        if checkpoint:
            save(model, checkpoint, config)
    return model, hist


def _diverged(model, params, epoch, checkpoint, config):
    model.params = params
    if checkpoint:
        save(model, checkpoint, config)
    raise DivergedLoss(epoch, checkpoint)


# -- checkpoints ----------------------------------------------------------------

def save(model: TaggerModel, path, config: TrainConfig | None = None):
    """JSON checkpoint; float64 values are written with repr so they load bit-exactly."""
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "vocab": model.vocab.words,
        "lowercase": model.vocab.lowercase,
        "window": model.window,
        "match_window": model.match_window,
        "params": {k: {"shape": list(v.shape), "data": v.ravel().tolist()}
                   for k, v in model.params.items()},
        "train_config": asdict(config) if config else None,
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load(path) -> TaggerModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a tagger checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')}")
    params = {k: np.array(v["data"], dtype=np.float64).reshape(v["shape"])
              for k, v in doc["params"].items()}
    return TaggerModel(Vocab(doc["vocab"], doc["lowercase"]), params,
                       doc["window"], doc["match_window"])
