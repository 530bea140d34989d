"""Synthetic two-domain language with rendered speech alignments.

A shared core vocabulary plus one private tail per domain gives a
controllable domain shift. The target domain's unlabeled sentences are
"spoken": every character gets a pronunciation span, and gaps get a long
pause at some word boundaries and a short one everywhere else, so the
gold boundaries are known for every mined pause.
"""

import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from pauseseg.alignment import AlignedSentence, write_alignment_file
from pauseseg.tagger.scheme import write_segmented

CJK_BASE = 0x4E00


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 0
    n_chars: int = 300
    # Dirichlet concentration of each character's preference for the
    # begin/middle/end/single roles; small values make roles predictable
    role_concentration: float = 0.3
    vocab_size: int = 600  # words per domain
    tail_fraction: float = 0.30  # share of each domain's vocabulary it keeps private
    word_len_probs: tuple = (0.2, 0.55, 0.18, 0.07)  # lengths 1..4
    zipf: float = 1.0
    tail_weight: float = 0.3  # relative frequency of tail words vs core words
    min_words: int = 4
    max_words: int = 12
    source_train: int = 600
    target_dev: int = 300
    target_test: int = 300
    speech: int = 1500
    frame_offset_ms: float = 5.0
    char_ms: tuple = (150.0, 330.0)
    short_pause_ms: tuple = (0.0, 40.0)
    long_pause_ms: tuple = (70.0, 110.0)
    pause_rate: float = 0.6  # chance a word boundary gets a long pause
    noise: float = 0.0  # chance an intra-word gap gets a long pause

    def __post_init__(self):
        if self.n_chars < 1 or self.vocab_size < 1:
            raise ValueError("n_chars and vocab_size must be positive")
        if not 0 <= self.tail_fraction < 1:
            raise ValueError("tail_fraction must lie in [0, 1)")
        if not 1 <= self.min_words <= self.max_words:
            raise ValueError("need 1 <= min_words <= max_words")
        if abs(sum(self.word_len_probs) - 1) > 1e-9:
            raise ValueError("word_len_probs must sum to 1")
        if not (0 <= self.pause_rate <= 1 and 0 <= self.noise <= 1):
            raise ValueError("pause_rate and noise are probabilities")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for k in ("word_len_probs", "char_ms", "short_pause_ms", "long_pause_ms"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)


@dataclass
class SynthData:
    source_train: list
    target_dev: list
    target_test: list
    speech: list  # AlignedSentence
    speech_gold: list  # word lists, parallel to speech
    source_vocab: set
    target_vocab: set


def _char_roles(rng, spec):
    """(4, n_chars) sampling distributions over characters for the B, M, E
    and S roles."""
    aff = rng.dirichlet(np.full(4, spec.role_concentration), size=spec.n_chars).T
    return aff / aff.sum(axis=1, keepdims=True)


def _make_words(rng, spec, count, taken, roles):
    lengths = np.arange(1, len(spec.word_len_probs) + 1)
    n = spec.n_chars
    words = []
    while len(words) < count:
        k = int(rng.choice(lengths, p=spec.word_len_probs))
        if k == 1:
            codes = [rng.choice(n, p=roles[3])]
        else:
            codes = ([rng.choice(n, p=roles[0])] + [rng.choice(n, p=roles[1]) for _ in range(k - 2)]
                     + [rng.choice(n, p=roles[2])])
        w = "".join(chr(CJK_BASE + int(c)) for c in codes)
        if w not in taken:
            taken.add(w)
            words.append(w)
    return words


class _Domain:
    def __init__(self, rng, core, tail, spec):
        self.words = core + tail
        ranks = np.concatenate([rng.permutation(len(core)), rng.permutation(len(tail))]) + 1
        w = 1.0 / ranks.astype(float) ** spec.zipf
        w[len(core):] *= spec.tail_weight
        self.p = w / w.sum()
        self.rng = rng
        self.spec = spec

    def sentence(self):
        k = int(self.rng.integers(self.spec.min_words, self.spec.max_words + 1))
        idx = self.rng.choice(len(self.words), size=k, p=self.p)
        return [self.words[i] for i in idx]


def _ms_to_frames(rng, lo_hi, offset):
    lo, hi = (int(round(x / offset)) for x in lo_hi)
    return int(rng.integers(lo, hi + 1))


def speak(rng, words, spec, sid):
    """Render one gold-segmented sentence as a character alignment."""
    chars = "".join(words)
    ends = set()
    pos = 0
    for w in words[:-1]:
        pos += len(w)
        ends.add(pos)
    spans = []
    t = _ms_to_frames(rng, (50, 200), spec.frame_offset_ms)
    for i in range(len(chars)):
        if i:
            long_pause = rng.random() < (spec.pause_rate if i in ends else spec.noise)
            t += _ms_to_frames(rng, spec.long_pause_ms if long_pause else spec.short_pause_ms,
                               spec.frame_offset_ms)
        d = _ms_to_frames(rng, spec.char_ms, spec.frame_offset_ms)
        spans.append((t, t + d))
        t += d
    return AlignedSentence(sid, tuple(chars), tuple(spans), spec.frame_offset_ms)


def generate(spec):
    rng = np.random.default_rng(spec.seed)
    taken = set()
    roles = _char_roles(rng, spec)
    n_tail = int(round(spec.vocab_size * spec.tail_fraction))
    core = _make_words(rng, spec, spec.vocab_size - n_tail, taken, roles)
    tail_src = _make_words(rng, spec, n_tail, taken, roles)
    tail_tgt = _make_words(rng, spec, n_tail, taken, roles)
    src = _Domain(rng, core, tail_src, spec)
    tgt = _Domain(rng, core, tail_tgt, spec)
    source_train = [src.sentence() for _ in range(spec.source_train)]
    target_dev = [tgt.sentence() for _ in range(spec.target_dev)]
    target_test = [tgt.sentence() for _ in range(spec.target_test)]
    speech_gold = [tgt.sentence() for _ in range(spec.speech)]
    speech = [speak(rng, w, spec, f"sp{i:06d}") for i, w in enumerate(speech_gold)]
    return SynthData(source_train, target_dev, target_test, speech, speech_gold,
                     set(src.words), set(tgt.words))


FILES = {
    "source_train": "source_train.txt",
    "target_dev": "target_dev.txt",
    "target_test": "target_test.txt",
    "speech": "speech.jsonl",
    "speech_gold": "speech_gold.txt",
    "spec": "synth.json",
}


def write_synth(data, spec, outdir):
    os.makedirs(outdir, exist_ok=True)
    path = {k: os.path.join(outdir, v) for k, v in FILES.items()}
    write_segmented(data.source_train, path["source_train"])
    write_segmented(data.target_dev, path["target_dev"])
    write_segmented(data.target_test, path["target_test"])
    write_segmented(data.speech_gold, path["speech_gold"])
    write_alignment_file(data.speech, path["speech"])
    with open(path["spec"], "w", encoding="utf-8") as f:
        json.dump(asdict(spec), f, indent=2, sort_keys=True)
        f.write("\n")
    return path
