"""Character-window feature templates for the linear emission scorer."""

import numpy as np

BOS = "<s>"
EOS = "</s>"


class CharWindowTemplate:
    """Unigrams c-2..c+2, bigrams (c-1,c0), (c0,c+1), (c-1,c+1), and a bias.

    Any object with the same ``name`` / ``extract`` interface can replace it
    as the emission feature source of a CrfModel.
    """

    name = "char-window-v1"

    def extract(self, chars):
        n = len(chars)
        pad = [BOS, BOS] + list(chars) + [EOS, EOS]
        out = []
        for i in range(n):
            c = pad[i:i + 5]  # c-2 .. c+2
            out.append([
                "bias",
                f"U-2={c[0]}", f"U-1={c[1]}", f"U0={c[2]}", f"U+1={c[3]}", f"U+2={c[4]}",
                f"B-1,0={c[1]}{c[2]}", f"B0,+1={c[2]}{c[3]}", f"B-1,+1={c[1]}{c[3]}",
            ])
        return out


TEMPLATES = {CharWindowTemplate.name: CharWindowTemplate}


class Vocabulary:
    """Feature string <-> row index. Unknown features map to -1."""

    def __init__(self, features=()):
        self.features = list(features)
        self.index = {f: i for i, f in enumerate(self.features)}

    def __len__(self):
        return len(self.features)

    def add_all(self, feats):
        for row in feats:
            for f in row:
                if f not in self.index:
                    self.index[f] = len(self.features)
                    self.features.append(f)

    def lookup(self, feats):
        get = self.index.get
        return np.array([[get(f, -1) for f in row] for row in feats], dtype=np.int64)
