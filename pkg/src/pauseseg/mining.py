"""Mine word boundaries from pause durations and score them against gold."""

import json
from dataclasses import dataclass, field
from itertools import product

from pauseseg.alignment import duration_profile

DEFAULT_MIN_GRID = (30.0, 40.0, 50.0, 60.0, 70.0)
DEFAULT_ALPHA_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)


@dataclass(frozen=True)
class MiningConfig:
    min_ms: float = 50.0
    alpha: float = 0.30

    def __post_init__(self):
        if self.min_ms < 0 or self.alpha < 0:
            raise ValueError("min_ms and alpha must be non-negative")


@dataclass(frozen=True)
class PartialAnnotation:
    """A sentence with some confirmed word boundaries.

    ``boundaries`` holds 1-based gap indices: k means a word ends at
    character k and the next starts at k+1. A missing index says nothing.
    """

    id: str
    chars: tuple
    boundaries: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "chars", tuple(self.chars))
        bounds = tuple(self.boundaries)
        n = len(self.chars)
        if n == 0:
            raise ValueError(f"{self.id}: empty sentence")
        if any(b <= a for a, b in zip(bounds, bounds[1:])):
            raise ValueError(f"{self.id}: boundaries must be strictly increasing")
        if bounds and not (1 <= bounds[0] and bounds[-1] <= n - 1):
            raise ValueError(f"{self.id}: boundary index outside [1, {n - 1}]")
        object.__setattr__(self, "boundaries", bounds)

    @property
    def text(self):
        return "".join(self.chars)

    def to_record(self):
        return {"id": self.id, "text": self.text, "boundaries": list(self.boundaries)}

    @classmethod
    def from_record(cls, rec):
        return cls(str(rec["id"]), tuple(rec["text"]), tuple(int(b) for b in rec["boundaries"]))


@dataclass(frozen=True)
class MiningStats:
    sentences: int
    boundaries: int


def mine_boundaries(s, cfg=MiningConfig()):
    """Keep gap i when its pause clears both the absolute floor and the
    speaking-rate relative floor (alpha x mean char duration)."""
    prof = duration_profile(s)
    rel = cfg.alpha * prof.mean_char_ms
    bounds = tuple(i for i, p in enumerate(prof.pause_ms, 1) if p >= cfg.min_ms and p >= rel)
    return PartialAnnotation(s.id, s.chars, bounds)


def mine_corpus(sentences, cfg=MiningConfig()):
    partials = [mine_boundaries(s, cfg) for s in sentences]
    stats = MiningStats(len(partials), sum(len(p.boundaries) for p in partials))
    return partials, stats


def read_partial_file(path):
    with open(path, encoding="utf-8") as f:
        return [PartialAnnotation.from_record(json.loads(line)) for line in f if line.strip()]


def write_partial_file(partials, path):
    with open(path, "w", encoding="utf-8") as f:
        for p in partials:
            f.write(json.dumps(p.to_record(), ensure_ascii=False) + "\n")


def gold_boundaries(words):
    """1-based gap indices between the words of a segmented sentence."""
    out, pos = [], 0
    for w in words[:-1]:
        pos += len(w)
        out.append(pos)
    return out


@dataclass(frozen=True)
class BoundaryQuality:
    precision: float
    recall: float
    f1: float
    mined: int
    gold: int
    correct: int
    # set when a ratio had an empty denominator and took its convention value
    degenerate: bool = field(default=False)


def boundary_prf(pred_sets, gold_sets):
    """Micro P/R/F1 over paired boundary sets.

    Empty denominators take the value 1.0 (nothing predicted means nothing
    predicted wrongly), which keeps degenerate sweep points finite.
    """
    n_pred = n_gold = n_ok = 0
    for p, g in zip(pred_sets, gold_sets, strict=True):
        p, g = set(p), set(g)
        n_pred += len(p)
        n_gold += len(g)
        n_ok += len(p & g)
    p = n_ok / n_pred if n_pred else 1.0
    r = n_ok / n_gold if n_gold else 1.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return BoundaryQuality(p, r, f, n_pred, n_gold, n_ok, degenerate=not (n_pred and n_gold))


def boundary_quality(mined, gold):
    """Compare mined partial annotations with gold segmentations.

    ``gold`` maps sentence id to its word list.
    """
    pred_sets, gold_sets = [], []
    for pa in mined:
        words = gold.get(pa.id)
        if words is None:
            raise KeyError(f"no gold segmentation for id {pa.id!r}")
        if "".join(words) != pa.text:
            raise ValueError(f"character mismatch between mined and gold sentence {pa.id!r}")
        pred_sets.append(pa.boundaries)
        gold_sets.append(gold_boundaries(words))
    return boundary_prf(pred_sets, gold_sets)


@dataclass(frozen=True)
class SweepRow:
    min_ms: float
    alpha: float
    precision: float
    recall: float
    f1: float
    boundaries: int


def sweep_thresholds(sentences, gold, min_grid=DEFAULT_MIN_GRID, alpha_grid=DEFAULT_ALPHA_GRID):
    if not min_grid or not alpha_grid:
        raise ValueError("threshold grids must be non-empty")
    rows = []
    for m, a in product(sorted(min_grid), sorted(alpha_grid)):
        partials, stats = mine_corpus(sentences, MiningConfig(m, a))
        q = boundary_quality(partials, gold)
        rows.append(SweepRow(m, a, q.precision, q.recall, q.f1, stats.boundaries))
    return rows


def two_phase_sweep(sentences, gold, min_grid=DEFAULT_MIN_GRID, alpha_grid=DEFAULT_ALPHA_GRID):
    """Fix alpha=0 and pick the best MIN by F1, then sweep alpha at that MIN.

    Returns ``(phase1_rows, phase2_rows, best_min, best_alpha)``; ties go to
    the smaller threshold.
    """
    phase1 = sweep_thresholds(sentences, gold, min_grid, [0.0])
    best_min = max(phase1, key=lambda r: (r.f1, -r.min_ms)).min_ms
    phase2 = sweep_thresholds(sentences, gold, [best_min], alpha_grid)
    best_alpha = max(phase2, key=lambda r: (r.f1, -r.alpha)).alpha
    return phase1, phase2, best_min, best_alpha


def format_sweep_tsv(rows):
    lines = ["min_ms\talpha\tprecision\trecall\tf1\tboundaries"]
    for r in rows:
        lines.append(f"{r.min_ms:g}\t{r.alpha:g}\t{r.precision:.4f}\t{r.recall:.4f}\t{r.f1:.4f}\t{r.boundaries}")
    return "\n".join(lines) + "\n"
