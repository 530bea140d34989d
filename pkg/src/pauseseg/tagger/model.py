"""Linear-chain CRF over BMES labels with a feature-template emission scorer."""

import json
from dataclasses import dataclass

import numpy as np

from pauseseg.lattice import (
    LEGAL, NEG, forward_backward_batch, path_lattice, scheme_lattice, viterbi_batch,
)
from pauseseg.tagger.features import TEMPLATES, CharWindowTemplate, Vocabulary
from pauseseg.tagger.scheme import check_labels

MODEL_FORMAT = "pauseseg-crf"
MODEL_VERSION = 1


class ModelFormatError(ValueError):
    pass


@dataclass
class Gradient:
    emission: np.ndarray  # (F, 4)
    transition: np.ndarray  # (4, 4), zero on illegal transitions


class CrfModel:
    def __init__(self, vocab, emission=None, transition=None, l2=1e-4, template=None, config=None):
        self.vocab = vocab
        self.template = template or CharWindowTemplate()
        self.emission = np.zeros((len(vocab), 4)) if emission is None else np.asarray(emission, float)
        if transition is None:
            transition = np.zeros((4, 4))
        self.transition = np.where(LEGAL, transition, NEG)
        self.l2 = l2
        self.config = dict(config or {})

    @classmethod
    def from_sentences(cls, sentences, **kw):
        """Empty model whose vocabulary covers every feature of `sentences`."""
        template = kw.get("template") or CharWindowTemplate()
        vocab = Vocabulary()
        for chars in sentences:
            vocab.add_all(template.extract(chars))
        return cls(vocab, **kw)

    def copy(self):
        return CrfModel(self.vocab, self.emission.copy(), self.transition.copy(),
                        self.l2, self.template, self.config)

    def feature_ids(self, chars):
        return self.vocab.lookup(self.template.extract(chars))

    def scores_from_ids(self, ids):
        # row -1 of the padded table is all zeros: unseen features score nothing
        table = np.vstack([self.emission, np.zeros((1, 4))])
        return table[ids].sum(axis=-2)

    def emissions(self, chars):
        return self.scores_from_ids(self.feature_ids(chars))

    def l2_term(self):
        legal_t = self.transition[LEGAL]
        return 0.5 * self.l2 * (np.sum(self.emission ** 2) + np.sum(legal_t ** 2))

    def emission_grad(self, ids, diff):
        """Scatter per-position label gradients (..., 4) onto feature rows."""
        n_feat = len(self.vocab)
        flat = np.where(ids < 0, n_feat, ids).reshape(-1)
        k = ids.shape[-1]
        d = np.repeat(diff.reshape(-1, 4), k, axis=0)
        g = np.stack([np.bincount(flat, weights=d[:, j], minlength=n_feat + 1) for j in range(4)], 1)
        return g[:n_feat]

    # -- persistence --

    def to_json(self):
        trans = [[float(self.transition[a, b]) if LEGAL[a, b] else None for b in range(4)]
                 for a in range(4)]
        doc = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "template": self.template.name,
            "l2": self.l2,
            "config": self.config,
            "features": self.vocab.features,
            "emission": self.emission.tolist(),
            "transition": trans,
        }
        return json.dumps(doc, ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        if doc.get("format") != MODEL_FORMAT:
            raise ModelFormatError("not a pauseseg model file")
        if doc.get("version") != MODEL_VERSION:
            raise ModelFormatError(
                f"model version {doc.get('version')} is not supported (expected {MODEL_VERSION})")
        template_cls = TEMPLATES.get(doc["template"])
        if template_cls is None:
            raise ModelFormatError(f"unknown feature template {doc['template']!r}")
        trans = np.array([[NEG if v is None else v for v in row] for row in doc["transition"]])
        emission = np.array(doc["emission"], dtype=float).reshape(-1, 4)
        return cls(Vocabulary(doc["features"]), emission, trans, doc["l2"], template_cls(), doc["config"])

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_json() + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as f:
            return cls.from_json(f.read())


def nll_partial(model, chars, lat):
    """Negative log of the probability mass that falls inside `lat`.

    Returns ``(loss, Gradient)``. The loss includes the L2 penalty.
    """
    if lat.n != len(chars):
        raise ValueError(f"lattice length {lat.n} != sentence length {len(chars)}")
    ids = model.feature_ids(chars)
    em = model.scores_from_ids(ids)
    n = len(chars)
    z_full, u_full, p_full = forward_backward_batch(
        em[None], model.transition, scheme_lattice(n).mask[None], [n])
    z_lat, u_lat, p_lat = forward_backward_batch(em[None], model.transition, lat.mask[None], [n])
    loss = z_full[0] - z_lat[0] + model.l2_term()
    g_em = model.emission_grad(ids, u_full[0] - u_lat[0]) + model.l2 * model.emission
    g_tr = np.where(LEGAL, p_full - p_lat + model.l2 * model.transition, 0.0)
    return float(loss), Gradient(g_em, g_tr)


def nll_full(model, chars, gold_labels):
    """Negative log-likelihood of one gold label sequence (plus L2).

    The gold score and empirical counts are read off the path directly; only
    the partition function goes through the forward-backward pass.
    """
    check_labels(gold_labels)
    gold = [int(y) for y in gold_labels]
    if len(gold) != len(chars):
        raise ValueError("label count does not match sentence length")
    ids = model.feature_ids(chars)
    em = model.scores_from_ids(ids)
    n = len(chars)
    log_z, unary, pair = forward_backward_batch(
        em[None], model.transition, scheme_lattice(n).mask[None], [n])
    gold_score = em[np.arange(n), gold].sum() + sum(model.transition[a, b] for a, b in zip(gold, gold[1:]))
    emp = np.zeros((n, 4))
    emp[np.arange(n), gold] = 1.0
    emp_pair = np.zeros((4, 4))
    for a, b in zip(gold, gold[1:]):
        emp_pair[a, b] += 1
    loss = log_z[0] - gold_score + model.l2_term()
    g_em = model.emission_grad(ids, unary[0] - emp) + model.l2 * model.emission
    g_tr = np.where(LEGAL, pair - emp_pair + model.l2 * model.transition, 0.0)
    return float(loss), Gradient(g_em, g_tr)


def gold_mask(labels):
    return path_lattice(labels).mask


class Batch:
    """Padded feature ids and target masks for a group of sentences."""

    def __init__(self, ids_list, masks):
        self.lengths = np.array([len(x) for x in ids_list])
        bsz, length = len(ids_list), int(self.lengths.max())
        k = ids_list[0].shape[1]
        self.ids = np.full((bsz, length, k), -1, dtype=np.int64)
        self.full = np.ones((bsz, length, 4), dtype=bool)
        self.target = np.ones((bsz, length, 4), dtype=bool)
        for b, (ids, m) in enumerate(zip(ids_list, masks)):
            n = len(ids)
            self.ids[b, :n] = ids
            self.full[b, :n] = scheme_lattice(n).mask
            if m is not None:
                self.target[b, :n] = m


def batch_loss(model, batch):
    """Mean over the batch of log Z(all legal paths) - log Z(target paths),
    plus the L2 penalty; returns ``(loss, Gradient)``."""
    em = model.scores_from_ids(batch.ids)
    bsz = len(batch.lengths)
    zf, uf, pf = forward_backward_batch(em, model.transition, batch.full, batch.lengths)
    zt, ut, pt = forward_backward_batch(em, model.transition, batch.full & batch.target, batch.lengths)
    loss = float(np.mean(zf - zt)) + model.l2_term()
    g_em = model.emission_grad(batch.ids, uf - ut) / bsz + model.l2 * model.emission
    g_tr = np.where(LEGAL, (pf - pt) / bsz + model.l2 * model.transition, 0.0)
    return loss, Gradient(g_em, g_tr)


def decode_batch(model, ids_list, masks=None):
    """Constrained (or, with masks=None, scheme-legal) Viterbi for many sentences."""
    batch = Batch(ids_list, masks if masks is not None else [None] * len(ids_list))
    em = model.scores_from_ids(batch.ids)
    mask = batch.full & batch.target
    return viterbi_batch(em, model.transition, mask, batch.lengths)
