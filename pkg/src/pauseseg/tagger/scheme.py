"""BMES encoding of segmented sentences and the segmented corpus format."""

from pauseseg.lattice import LEGAL, Label

B, M, E, S = Label.B, Label.M, Label.E, Label.S


class SchemeError(ValueError):
    pass


def words_to_labels(words):
    labels = []
    for i, w in enumerate(words):
        if not w:
            raise SchemeError(f"empty word at index {i}")
        if len(w) == 1:
            labels.append(S)
        else:
            labels.extend([B] + [M] * (len(w) - 2) + [E])
    return labels


def check_labels(labels):
    """Raise SchemeError at the first position that breaks BMES legality."""
    labels = [Label(y) for y in labels]
    if not labels:
        return
    if labels[0] not in (B, S):
        raise SchemeError(f"position 1: sentence cannot start with {labels[0].name}")
    for i in range(1, len(labels)):
        if not LEGAL[labels[i - 1], labels[i]]:
            raise SchemeError(
                f"position {i + 1}: {labels[i - 1].name} -> {labels[i].name} is illegal")
    if labels[-1] not in (E, S):
        raise SchemeError(f"position {len(labels)}: sentence cannot end with {labels[-1].name}")


def labels_to_words(chars, labels, strict=True):
    """Inverse of words_to_labels.

    In lenient mode an illegal junction simply starts a new word.
    """
    if len(chars) != len(labels):
        raise SchemeError(f"{len(chars)} characters but {len(labels)} labels")
    labels = [Label(y) for y in labels]
    if strict:
        check_labels(labels)
    words, cur = [], ""
    for i, (c, y) in enumerate(zip(chars, labels)):
        if cur and (y in (B, S) or not LEGAL[labels[i - 1], y]):
            words.append(cur)
            cur = ""
        cur += c
        if y in (E, S):
            words.append(cur)
            cur = ""
    if cur:
        words.append(cur)
    return words


def read_segmented(path):
    """One sentence per line, words separated by single spaces."""
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            words = line.split(" ")
            if any(not w for w in words):
                raise SchemeError(f"{path}:{lineno}: empty word (double or edge space)")
            out.append(words)
    return out


def write_segmented(sentences, path):
    with open(path, "w", encoding="utf-8") as f:
        for words in sentences:
            f.write(" ".join(words) + "\n")
