"""Constrained BMES label lattices and the dynamic programs over them.

Scores are unnormalized log-potentials. Disallowed labels and illegal
transitions are set to ``NEG``, a large finite negative number, so sums of
impossible paths stay finite and nothing turns into NaN.
"""

from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property, lru_cache
from itertools import product

import numpy as np

NEG = -1e30


class Label(IntEnum):
    B = 0
    M = 1
    E = 2
    S = 3


ALL = frozenset(Label)
STARTS = frozenset({Label.B, Label.S})  # may follow a boundary
ENDS = frozenset({Label.E, Label.S})  # may precede a boundary

# LEGAL[a, b]: label b may follow label a
LEGAL = np.zeros((4, 4), dtype=bool)
for _a, _bs in {Label.B: "ME", Label.M: "ME", Label.E: "BS", Label.S: "BS"}.items():
    for _b in _bs:
        LEGAL[_a, Label[_b]] = True
LEGAL.flags.writeable = False


@dataclass(frozen=True)
class LabelLattice:
    allowed: tuple  # one frozenset of Label per position

    def __post_init__(self):
        allowed = tuple(frozenset(Label(x) for x in a) for a in self.allowed)
        object.__setattr__(self, "allowed", allowed)
        if not allowed:
            raise ValueError("empty lattice")
        if any(not a for a in allowed):
            raise ValueError("every position needs at least one allowed label")

    def __len__(self):
        return len(self.allowed)

    @property
    def n(self):
        return len(self.allowed)

    @cached_property
    def mask(self):
        m = np.zeros((self.n, 4), dtype=bool)
        for i, a in enumerate(self.allowed):
            m[i, list(a)] = True
        m.flags.writeable = False
        return m

    def contains(self, labels):
        """True if `labels` is a legal path through this lattice."""
        if len(labels) != self.n:
            return False
        if any(y not in a for y, a in zip(labels, self.allowed)):
            return False
        return all(LEGAL[a, b] for a, b in zip(labels, labels[1:]))

    def render(self, chars=None):
        """Text grid with one row per label and one column per character;
        ``#`` marks an allowed cell, ``.`` a forbidden one."""
        head = "   " + " ".join(chars) if chars else None
        rows = [f"{lab.name}  " + " ".join("#" if lab in a else "." for a in self.allowed)
                for lab in Label]
        return "\n".join(([head] if head else []) + rows)


def build_lattice(pa):
    """Turn a partial annotation into per-position allowed label sets."""
    return lattice_from_boundaries(len(pa.chars), pa.boundaries)


def lattice_from_boundaries(n, boundaries=()):
    if n == 1:
        return LabelLattice([{Label.S}])
    allowed = [set(ALL) for _ in range(n)]
    allowed[0] &= STARTS
    allowed[-1] &= ENDS
    for k in boundaries:
        allowed[k - 1] &= ENDS
        allowed[k] &= STARTS
    return LabelLattice(allowed)


@lru_cache(maxsize=512)
def scheme_lattice(n):
    """Only the sentence-edge constraints: every BMES-legal segmentation."""
    return lattice_from_boundaries(n)


def path_lattice(labels):
    return LabelLattice([{y} for y in labels])


def count_legal_paths(lat, max_n=20):
    if lat.n > max_n:
        raise ValueError(f"refusing to count paths for n={lat.n} > {max_n}")
    counts = lat.mask[0].astype(np.int64)
    legal = LEGAL.astype(np.int64)
    for i in range(1, lat.n):
        counts = (counts @ legal) * lat.mask[i]
    return int(counts.sum())


def _masked(emissions, trans, mask):
    emissions = np.asarray(emissions, dtype=float)
    trans = np.where(LEGAL, np.asarray(trans, dtype=float), NEG)
    return np.where(mask, emissions, NEG), trans


def _logsumexp(x, axis):
    m = x.max(axis=axis, keepdims=True)
    return (m + np.log(np.exp(x - m).sum(axis=axis, keepdims=True))).squeeze(axis)


def path_score(emissions, trans, labels):
    emissions = np.asarray(emissions, dtype=float)
    trans = np.asarray(trans, dtype=float)
    s = sum(emissions[i, y] for i, y in enumerate(labels))
    return float(s + sum(trans[a, b] for a, b in zip(labels, labels[1:])))


def constrained_viterbi(emissions, trans, lat):
    """Best legal path through `lat`.

    Ties go to the smaller label code, resolved from the last position
    backwards, so results are reproducible.
    """
    em, tr = _masked(emissions, trans, lat.mask)
    n = len(em)
    if n != lat.n:
        raise ValueError(f"{n} emission rows for a lattice of length {lat.n}")
    delta = em[0].copy()
    back = np.zeros((n, 4), dtype=np.int64)
    for i in range(1, n):
        cand = delta[:, None] + tr
        back[i] = cand.argmax(axis=0)
        delta = cand.max(axis=0) + em[i]
    y = [int(delta.argmax())]
    for i in range(n - 1, 0, -1):
        y.append(int(back[i, y[-1]]))
    return [Label(v) for v in reversed(y)]


def constrained_log_forward(emissions, trans, lat):
    """log of the summed exp-scores of every legal path in `lat`."""
    em, tr = _masked(emissions, trans, lat.mask)
    if len(em) != lat.n:
        raise ValueError(f"{len(em)} emission rows for a lattice of length {lat.n}")
    alpha = em[0]
    for i in range(1, len(em)):
        alpha = _logsumexp(alpha[:, None] + tr, axis=0) + em[i]
    return float(_logsumexp(alpha, axis=0))


def enumerate_legal_paths(lat, max_n=12):
    """All legal label sequences; exponential, for oracles on tiny inputs."""
    if lat.n > max_n:
        raise ValueError(f"refusing to enumerate n={lat.n} > {max_n}")
    return [list(p) for p in product(Label, repeat=lat.n) if lat.contains(p)]


# Batched versions used by training and bulk decoding. Inputs are padded to
# the longest sentence; positions at or beyond `lengths[b]` are ignored.

def forward_backward_batch(emissions, trans, mask, lengths):
    """Log partition values and marginals for a padded batch.

    emissions: (B, L, 4); mask: (B, L, 4) bool; lengths: (B,).
    Returns ``(log_z, unary, pair_sum)`` where unary is (B, L, 4) marginal
    probabilities (zero on padding) and pair_sum is the (4, 4) transition
    marginal summed over positions and sentences.
    """
    em = np.where(mask, emissions, NEG)
    tr = np.where(LEGAL, trans, NEG)
    bsz, length, _ = em.shape
    lengths = np.asarray(lengths)
    alpha = np.empty_like(em)
    alpha[:, 0] = em[:, 0]
    for t in range(1, length):
        alpha[:, t] = _logsumexp(alpha[:, t - 1, :, None] + tr, axis=1) + em[:, t]
    last = alpha[np.arange(bsz), lengths - 1]
    log_z = _logsumexp(last, axis=1)

    beta = np.zeros_like(em)
    for t in range(length - 2, -1, -1):
        nxt = _logsumexp(tr + (em[:, t + 1] + beta[:, t + 1])[:, None, :], axis=2)
        beta[:, t] = np.where((t < lengths - 1)[:, None], nxt, 0.0)

    valid = np.arange(length)[None, :] < lengths[:, None]
    unary = np.exp(np.where(valid[:, :, None], alpha + beta - log_z[:, None, None], NEG))
    pair_sum = np.zeros((4, 4))
    for t in range(length - 1):
        live = t + 1 < lengths
        if not live.any():
            break
        lp = (alpha[live, t, :, None] + tr + (em[live, t + 1] + beta[live, t + 1])[:, None, :]
              - log_z[live, None, None])
        pair_sum += np.exp(lp).sum(axis=0)
    return log_z, unary, pair_sum


def viterbi_batch(emissions, trans, mask, lengths):
    """Best path per sentence of a padded batch; list of label-code lists."""
    em = np.where(mask, emissions, NEG)
    tr = np.where(LEGAL, trans, NEG)
    bsz, length, _ = em.shape
    lengths = np.asarray(lengths)
    delta = em[:, 0].copy()
    back = np.zeros((bsz, length, 4), dtype=np.int64)
    final = np.zeros((bsz, 4))
    done = lengths == 1
    final[done] = delta[done]
    for t in range(1, length):
        cand = delta[:, :, None] + tr
        back[:, t] = cand.argmax(axis=1)
        delta = cand.max(axis=1) + em[:, t]
        ends = lengths == t + 1
        final[ends] = delta[ends]
    out = []
    for b in range(bsz):
        n = int(lengths[b])
        y = [int(final[b].argmax())]
        for t in range(n - 1, 0, -1):
            y.append(int(back[b, t, y[-1]]))
        out.append(y[::-1])
    return out
