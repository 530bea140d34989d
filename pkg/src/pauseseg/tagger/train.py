"""Training strategies: full supervision, directly-train on partial
annotations, and complete-then-train."""

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from pauseseg.evalkit import evaluate
from pauseseg.lattice import LEGAL, Label, build_lattice
from pauseseg.tagger.model import Batch, CrfModel, batch_loss, decode_batch, gold_mask
from pauseseg.tagger.scheme import labels_to_words, words_to_labels

log = logging.getLogger(__name__)

STRATEGIES = ("complete-then-train", "directly-train", "no-constraint-ablation", "base-only")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.002
    batch_size: int = 256
    patience: int = 10
    max_epochs: int = 100
    l2: float = 1e-4
    seed: int = 0
    optimizer: str = "adam"  # or "lbfgs"

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.patience < 1 or self.max_epochs < 1:
            raise ConfigError("learning_rate, batch_size, patience and max_epochs must be positive")
        if self.l2 < 0:
            raise ConfigError("l2 must be non-negative")
        if self.optimizer not in ("adam", "lbfgs"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class History:
    dev_scores: list = field(default_factory=list)
    best_epoch: int = 0
    epochs_run: int = 0


def _instances(model, corpus, partial):
    ids, masks = [], []
    for words in corpus:
        chars = "".join(words)
        ids.append(model.feature_ids(chars))
        masks.append(gold_mask(words_to_labels(words)))
    for pa in partial:
        ids.append(model.feature_ids(pa.chars))
        masks.append(build_lattice(pa).mask)
    return ids, masks


class _Adam:
    def __init__(self, lr, b1=0.9, b2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = self.v = None
        self.t = 0

    def step(self, params, grad):
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        self.t += 1
        self.m = self.b1 * self.m + (1 - self.b1) * grad
        self.v = self.b2 * self.v + (1 - self.b2) * grad * grad
        m_hat = self.m / (1 - self.b1 ** self.t)
        v_hat = self.v / (1 - self.b2 ** self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _flat(model):
    return np.concatenate([model.emission.ravel(), model.transition[LEGAL]])


def _unflat(model, theta):
    n = model.emission.size
    model.emission = theta[:n].reshape(model.emission.shape).copy()
    model.transition = model.transition.copy()
    model.transition[LEGAL] = theta[n:]


def _flat_grad(g):
    return np.concatenate([g.emission.ravel(), g.transition[LEGAL]])


def default_dev_scorer(dev):
    def score(model):
        return evaluate(dev, tag_corpus(model, ["".join(w) for w in dev])).f1
    return score


def train(corpus, cfg=TrainConfig(), dev=None, partial=(), scorer=None):
    """Fit a CRF on segmented sentences plus optional partial annotations.

    Sentences in `corpus` contribute their single gold path; each entry of
    `partial` contributes the total probability of its lattice (the
    directly-train objective). The snapshot with the best dev score is
    returned; training stops once `cfg.patience` epochs pass without a new
    best. `scorer(model) -> float` overrides the default dev F1.
    """
    corpus, partial = list(corpus), list(partial)
    if not corpus and not partial:
        raise ConfigError("empty training corpus")
    texts = ["".join(w) for w in corpus] + [pa.chars for pa in partial]
    model = CrfModel.from_sentences(texts, l2=cfg.l2, config=asdict(cfg))
    ids, masks = _instances(model, corpus, partial)
    if scorer is None and dev:
        scorer = default_dev_scorer(dev)

    hist = History()
    best, best_score = model.copy(), -np.inf
    stale = 0

    def after_epoch(epoch):
        nonlocal best, best_score, stale
        hist.epochs_run = epoch
        if scorer is None:
            best = model.copy()
            return False
        s = scorer(model)
        hist.dev_scores.append(s)
        if s > best_score:
            best, best_score, stale = model.copy(), s, 0
            hist.best_epoch = epoch
        else:
            stale += 1
        log.info("epoch %d dev %.4f (best %.4f @ %d)", epoch, s, best_score, hist.best_epoch)
        return stale >= cfg.patience

    rng = np.random.default_rng(cfg.seed)
    if cfg.optimizer == "adam":
        opt = _Adam(cfg.learning_rate)
        n = len(ids)
        for epoch in range(1, cfg.max_epochs + 1):
            order = rng.permutation(n)
            for start in range(0, n, cfg.batch_size):
                sel = order[start:start + cfg.batch_size]
                batch = Batch([ids[i] for i in sel], [masks[i] for i in sel])
                _, g = batch_loss(model, batch)
                _unflat(model, opt.step(_flat(model), _flat_grad(g)))
            if after_epoch(epoch):
                break
    else:
        _train_lbfgs(model, Batch(ids, masks), cfg, after_epoch)

    best.history = hist
    return best


class _Stop(Exception):
    pass


def _train_lbfgs(model, batch, cfg, after_epoch):
    """Full-batch L-BFGS; each iteration counts as one epoch."""

    def fun(theta):
        _unflat(model, theta)
        loss, g = batch_loss(model, batch)
        return loss, _flat_grad(g)

    epoch = 0

    def callback(theta):
        nonlocal epoch
        epoch += 1
        _unflat(model, theta)
        if after_epoch(epoch):
            raise _Stop

    try:
        minimize(fun, _flat(model), jac=True, method="L-BFGS-B", callback=callback,
                 options={"maxiter": cfg.max_epochs})
    except _Stop:
        pass


def tag_corpus(model, texts):
    """Segment raw character strings with scheme-legal Viterbi."""
    if not texts:
        return []
    ids = [model.feature_ids(t) for t in texts]
    paths = decode_batch(model, ids)
    return [labels_to_words(t, [Label(y) for y in p], strict=True) for t, p in zip(texts, paths)]


def tag(model, chars):
    return tag_corpus(model, ["".join(chars)])[0]


def complete(model, partial, constrained=True):
    """Fill in partial annotations with the model's best path.

    With ``constrained=False`` the mined boundaries are ignored and plain
    Viterbi output is returned (the no-constraint ablation).
    """
    partial = list(partial)
    if not partial:
        return []
    ids = [model.feature_ids(pa.chars) for pa in partial]
    masks = [build_lattice(pa).mask for pa in partial] if constrained else None
    paths = decode_batch(model, ids, masks)
    return [labels_to_words(pa.text, [Label(y) for y in p]) for pa, p in zip(partial, paths)]


@dataclass
class CompleteThenTrain:
    model: CrfModel
    basic: CrfModel
    completed: list


def complete_then_train(base, partial, cfg=TrainConfig(), dev=None, constrained=True, basic=None):
    """Train a basic model on `base`, complete `partial` with it, then train
    the final model on both.

    A pre-trained `basic` model may be passed to skip step one.
    """
    base = list(base)
    if not base:
        raise ConfigError("empty base corpus")
    if basic is None:
        basic = train(base, cfg, dev)
    completed = complete(basic, partial, constrained=constrained)
    if not completed:
        return CompleteThenTrain(basic, basic, completed)
    final = train(base + completed, cfg, dev)
    return CompleteThenTrain(final, basic, completed)
