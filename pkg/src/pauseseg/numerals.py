"""Transcript cleaning: digit runs to Chinese numerals, punctuation removal."""

import re
import unicodedata

DIGITS = "零一二三四五六七八九"
MAX_VALUE = 99_999_999

_DIGIT_RUN = re.compile(r"[0-9]+")
_UNITS = ("", "十", "百", "千")


class NumeralError(ValueError):
    pass


def _read_group(value, leading):
    """Read 1..9999; `leading` means nothing precedes this group."""
    out = []
    pending_zero = False
    for place in (3, 2, 1, 0):
        digit = value // 10 ** place % 10
        if digit == 0:
            if out:
                pending_zero = True
            continue
        if pending_zero:
            out.append(DIGITS[0])
            pending_zero = False
        if place == 1 and digit == 1 and not out and leading:
            out.append("十")
        elif digit == 2 and place >= 2:
            out.append("两" + _UNITS[place])
        else:
            out.append(DIGITS[digit] + _UNITS[place])
    return "".join(out)


def number_to_chinese(value):
    """Render an integer in [0, 99999999] as a Chinese numeral.

    Hundreds and thousands use the colloquial 两 (1200 -> 一千两百), a
    leading 一十 is shortened to 十, and interior zero runs collapse to a
    single 零.
    """
    if not 0 <= value <= MAX_VALUE:
        raise NumeralError(f"number out of range: {value}")
    if value == 0:
        return DIGITS[0]
    high, low = divmod(value, 10_000)
    if not high:
        return _read_group(low, leading=True)
    head = "两" if high == 2 else _read_group(high, leading=True)
    head += "万"
    if not low:
        return head
    # 10010 -> 一万零一十; a gap below the thousands place needs a 零
    sep = DIGITS[0] if low < 1000 else ""
    return head + sep + _read_group(low, leading=False)


def digits_to_chinese(run):
    """Convert one run of ASCII digits.

    Runs with a leading zero (e.g. "007") are read digit by digit, which
    is how codes and years-with-padding are spoken.
    """
    if len(run) > 8:
        raise NumeralError(f"digit run too long: {run!r}")
    if len(run) > 1 and run[0] == "0":
        return "".join(DIGITS[int(d)] for d in run)
    return number_to_chinese(int(run))


def is_removable(ch):
    if ch.isspace():
        return True
    return unicodedata.category(ch)[0] in "PS"


def normalize_transcript(text):
    """Replace digit runs by Chinese numerals, then drop punctuation,
    symbols and whitespace."""
    text = _DIGIT_RUN.sub(lambda m: digits_to_chinese(m.group()), text)
    return "".join(ch for ch in text if not is_removable(ch))
