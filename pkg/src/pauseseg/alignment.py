"""Character-level speech/text alignments and the durations derived from them.

Alignments come from an upstream forced aligner as JSONL, one sentence per
line::

    {"id": "s1", "chars": ["有", "人"], "spans": [[0, 40], [50, 90]],
     "frame_offset_ms": 5}

Each span is the (begin, end) frame index pair of one character; frame
indices times the frame offset give milliseconds.
"""

import json
import logging
from dataclasses import dataclass, field

from pauseseg.numerals import normalize_transcript  # noqa: F401  (re-export)

log = logging.getLogger(__name__)

DEFAULT_FRAME_OFFSET_MS = 5.0


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class AlignedSentence:
    id: str
    chars: tuple
    spans: tuple
    frame_offset_ms: float = DEFAULT_FRAME_OFFSET_MS
    # strict=False keeps overlapping spans (negative pauses); they are
    # harmless because both mining thresholds are non-negative.
    strict: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "chars", tuple(self.chars))
        object.__setattr__(self, "spans", tuple((int(b), int(e)) for b, e in self.spans))
        if not self.chars:
            raise AlignmentError("sentence has no characters")
        if any(not isinstance(c, str) or len(c) != 1 for c in self.chars):
            raise AlignmentError("every entry of chars must be a single character")
        if len(self.spans) != len(self.chars):
            raise AlignmentError(
                f"{len(self.spans)} spans for {len(self.chars)} characters")
        if not self.frame_offset_ms > 0:
            raise AlignmentError(f"frame_offset_ms must be positive, got {self.frame_offset_ms}")
        for i, (b, e) in enumerate(self.spans, 1):
            if b < 0 or e < 0:
                raise AlignmentError(f"negative frame index in span {i}")
            if b > e:
                raise AlignmentError(f"span {i} begins after it ends ({b} > {e})")
        if self.strict:
            for i in range(1, len(self.spans)):
                if self.spans[i - 1][1] > self.spans[i][0]:
                    raise AlignmentError(f"spans {i} and {i + 1} overlap")

    def __len__(self):
        return len(self.chars)

    @property
    def text(self):
        return "".join(self.chars)

    def to_record(self):
        return {
            "id": self.id,
            "chars": list(self.chars),
            "spans": [list(s) for s in self.spans],
            "frame_offset_ms": self.frame_offset_ms,
        }

    @classmethod
    def from_record(cls, rec, strict=True, default_offset=DEFAULT_FRAME_OFFSET_MS):
        if not isinstance(rec, dict):
            raise AlignmentError("record is not a JSON object")
        missing = [k for k in ("id", "chars", "spans") if k not in rec]
        if missing:
            raise AlignmentError(f"missing field(s): {', '.join(missing)}")
        offset = rec.get("frame_offset_ms", default_offset)
        if isinstance(offset, bool) or not isinstance(offset, (int, float)):
            raise AlignmentError("frame_offset_ms must be a number")
        try:
            spans = [(b, e) for b, e in rec["spans"]]
        except (TypeError, ValueError):
            raise AlignmentError("spans must be [begin, end] pairs") from None
        if any(not isinstance(x, int) or isinstance(x, bool) for s in spans for x in s):
            raise AlignmentError("span frame indices must be integers")
        return cls(str(rec["id"]), rec["chars"], spans, float(offset), strict=strict)


@dataclass(frozen=True)
class Rejection:
    line: int
    reason: str


@dataclass(frozen=True)
class DurationProfile:
    pause_ms: tuple
    char_ms: tuple
    mean_char_ms: float


def pause_duration(s, i):
    """Pause in ms between character i and i+1 (1-based gap index)."""
    if not 1 <= i <= len(s) - 1:
        raise IndexError(f"gap index {i} out of range for {len(s)} characters")
    return (s.spans[i][0] - s.spans[i - 1][1]) * s.frame_offset_ms


def char_duration(s, i):
    """Pronunciation time in ms of character i (1-based)."""
    if not 1 <= i <= len(s):
        raise IndexError(f"character index {i} out of range for {len(s)} characters")
    b, e = s.spans[i - 1]
    return (e - b) * s.frame_offset_ms


def duration_profile(s):
    n = len(s)
    pauses = tuple(pause_duration(s, i) for i in range(1, n))
    chars = tuple(char_duration(s, i) for i in range(1, n + 1))
    return DurationProfile(pauses, chars, sum(chars) / n)


def parse_alignment_lines(lines, strict=True, default_offset=DEFAULT_FRAME_OFFSET_MS):
    """Parse JSONL alignment lines.

    Returns ``(sentences, rejections)``. Malformed lines and records that
    break the span invariants are skipped and reported, never fatal.
    """
    sentences, rejections = [], []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            rejections.append(Rejection(lineno, f"malformed JSON: {exc.msg}"))
            continue
        try:
            sentences.append(AlignedSentence.from_record(rec, strict, default_offset))
        except AlignmentError as exc:
            rejections.append(Rejection(lineno, str(exc)))
    for r in rejections:
        log.warning("alignment line %d rejected: %s", r.line, r.reason)
    return sentences, rejections


def parse_alignment_file(path, strict=True, default_offset=DEFAULT_FRAME_OFFSET_MS):
    with open(path, encoding="utf-8") as f:
        return parse_alignment_lines(f, strict, default_offset)


def write_alignment_file(sentences, path):
    with open(path, "w", encoding="utf-8") as f:
        for s in sentences:
            f.write(json.dumps(s.to_record(), ensure_ascii=False) + "\n")


def write_rejections(rejections, path):
    """Sidecar report, one ``line<TAB>reason`` row per rejected record."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("line\treason\n")
        for r in rejections:
            f.write(f"{r.line}\t{r.reason}\n")
