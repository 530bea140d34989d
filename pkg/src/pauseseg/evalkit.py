"""Word-level segmentation scoring: P, R, F1 and recall on OOV words."""

import json
import math
from dataclasses import asdict, dataclass


class AlignmentMismatch(ValueError):
    pass


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f1: float
    r_oov: float | None  # None when the gold side has no OOV words
    gold_words: int
    pred_words: int
    correct_words: int
    gold_oov: int
    correct_oov: int

    def to_dict(self):
        return asdict(self)

    def as_row(self):
        oov = "-" if self.r_oov is None else f"{100 * self.r_oov:.2f}"
        return f"P {100 * self.precision:.2f}  R {100 * self.recall:.2f}  F {100 * self.f1:.2f}  R_oov {oov}"


def word_spans(words):
    """(start, end) character offsets of each word, end exclusive."""
    spans, pos = [], 0
    for w in words:
        spans.append((pos, pos + len(w)))
        pos += len(w)
    return spans


def prf(correct, gold, pred):
    p = correct / pred if pred else 0.0
    r = correct / gold if gold else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


def evaluate(gold, pred, train_vocab=frozenset()):
    """Score predicted segmentations against gold, sentence by sentence.

    A predicted word counts as correct only if the same character span is a
    word in the gold sentence. OOV words are gold words not in `train_vocab`.
    """
    if len(gold) != len(pred):
        raise AlignmentMismatch(f"{len(gold)} gold sentences but {len(pred)} predicted")
    n_gold = n_pred = n_ok = n_oov = n_oov_ok = 0
    for lineno, (g, p) in enumerate(zip(gold, pred), 1):
        if "".join(g) != "".join(p):
            raise AlignmentMismatch(f"sentence {lineno}: gold and predicted characters differ")
        pred_spans = set(word_spans(p))
        n_gold += len(g)
        n_pred += len(p)
        for w, span in zip(g, word_spans(g)):
            hit = span in pred_spans
            n_ok += hit
            if w not in train_vocab:
                n_oov += 1
                n_oov_ok += hit
    p, r, f = prf(n_ok, n_gold, n_pred)
    r_oov = n_oov_ok / n_oov if n_oov else None
    return EvalReport(p, r, f, r_oov, n_gold, n_pred, n_ok, n_oov, n_oov_ok)


METRICS = ("precision", "recall", "f1", "r_oov")


def aggregate_runs(reports):
    """Mean and population standard deviation of each metric across runs.

    Returns ``{metric: (mean, std)}``; a metric undefined in every run maps
    to None.
    """
    if not reports:
        raise ValueError("no reports to aggregate")
    out = {}
    for m in METRICS:
        vals = [getattr(r, m) for r in reports if getattr(r, m) is not None]
        if not vals:
            out[m] = None
            continue
        mean = sum(vals) / len(vals)
        std = math.sqrt(sum((v - mean) ** 2 for v in vals) / len(vals))
        out[m] = (mean, std)
    return out


def format_aggregate(agg):
    cells = []
    for m in METRICS:
        if agg[m] is None:
            cells.append(f"{m} -")
        else:
            mean, std = agg[m]
            cells.append(f"{m} {100 * mean:.2f}±{100 * std:.2f}")
    return "  ".join(cells)


def format_report(report):
    lines = [
        f"{'metric':<10}{'value':>8}",
        f"{'P':<10}{100 * report.precision:>8.2f}",
        f"{'R':<10}{100 * report.recall:>8.2f}",
        f"{'F1':<10}{100 * report.f1:>8.2f}",
        f"{'R_oov':<10}{'-' if report.r_oov is None else format(100 * report.r_oov, '.2f'):>8}",
        f"gold {report.gold_words}  pred {report.pred_words}  correct {report.correct_words}  "
        f"oov {report.gold_oov}  oov_correct {report.correct_oov}",
    ]
    return "\n".join(lines)


def report_json(report):
    return json.dumps(report.to_dict(), sort_keys=True)


def single_char_ratio(sentences):
    """Fraction of words that are one character long."""
    words = [w for s in sentences for w in s]
    return sum(len(w) == 1 for w in words) / len(words) if words else 0.0
