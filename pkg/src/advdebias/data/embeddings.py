"""Word-embedding tables, analogy files and the gender (bias) direction."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..numerics import DimensionError, top_principal_components
from .examples import ExampleSet

logger = logging.getLogger(__name__)

#: (male, female) pairs used when no pairs file is supplied.
DEFAULT_PAIRS = (
    ("he", "she"), ("his", "her"), ("man", "woman"), ("himself", "herself"),
    ("son", "daughter"), ("father", "mother"), ("guy", "gal"), ("boy", "girl"),
    ("male", "female"), ("John", "Mary"),
)


class EmbeddingFormatError(ValueError):
    pass


class MissingWordError(KeyError):
    def __init__(self, words):
        self.words = list(words)
        super().__init__(f"not in vocabulary: {', '.join(self.words)}")


@dataclass
class EmbeddingTable:
    words: list[str]
    vectors: np.ndarray
    vocab: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.words):
            raise DimensionError("need one vector row per word")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("embedding contains non-finite values")
        self.vocab = {}
        for i, w in enumerate(self.words):
            if w in self.vocab:
                raise ValueError(f"duplicate word {w!r}")
            self.vocab[w] = i

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word) -> bool:
        return word in self.vocab

    def __getitem__(self, word: str) -> np.ndarray:
        try:
            return self.vectors[self.vocab[word]]
        except KeyError:
            raise MissingWordError([word]) from None

    def require(self, words) -> None:
        missing = [w for w in words if w not in self.vocab]
        if missing:
            raise MissingWordError(missing)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for w, vec in zip(self.words, self.vectors):
                fh.write(w + " " + " ".join(repr(float(x)) for x in vec) + "\n")


def load_embeddings(path, max_vocab: int | None = None) -> EmbeddingTable:
    """Read a whitespace-separated ``word v1 ... vd`` text file.

    A leading ``count dim`` header is skipped.  Later duplicates of a word are
    ignored with a warning.
    """
    words, rows = [], []
    seen = set()
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue
            word, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
            if len(values) != dim or dim == 0:
                raise EmbeddingFormatError(f"{path}:{lineno}: expected {dim} values, got {len(values)}")
            if word in seen:
                logger.warning("%s:%d: duplicate word %r ignored", path, lineno, word)
                continue
            seen.add(word)
            words.append(word)
            rows.append([float(v) for v in values])
            if max_vocab is not None and len(words) >= max_vocab:
                break
    return EmbeddingTable(words, np.array(rows).reshape(len(rows), dim or 0))


def load_pairs(path) -> list[tuple[str, str]]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'male_word female_word'")
            pairs.append((parts[0], parts[1]))
    return pairs


@dataclass
class BiasSubspace:
    directions: np.ndarray  # (k, d), orthonormal rows
    source_pairs: list[tuple[str, str]]

    @property
    def k(self) -> int:
        return self.directions.shape[0]

    @property
    def g(self) -> np.ndarray:
        return self.directions[0]


def compute_bias_subspace(table: EmbeddingTable, pairs=DEFAULT_PAIRS, k: int = 1) -> BiasSubspace:
    """Top-``k`` principal directions of the female-minus-male differences.

    Each pair contributes its two vectors centred on the pair midpoint, i.e.
    ``+d/2`` and ``-d/2`` with ``d = e(female) - e(male)``.  The first
    direction is signed so that it points from "he" towards "she" when that
    pair is present, otherwise towards the mean female side.
    """
    pairs = [tuple(p) for p in pairs]
    if k > len(pairs):
        raise ValueError(f"k={k} exceeds the number of pairs ({len(pairs)})")
    table.require([w for p in pairs for w in p])
    diffs = np.array([table[f] - table[m] for m, f in pairs])
    rows = np.concatenate([diffs / 2, -diffs / 2])
    comps = np.array(top_principal_components(rows, k))
    anchor = table["she"] - table["he"] if ("he", "she") in pairs else diffs.mean(axis=0)
    for i in range(k):
        if comps[i] @ anchor < 0:
            comps[i] = -comps[i]
    return BiasSubspace(comps, pairs)


def project_protected(y_vec, sub: BiasSubspace) -> float:
    y_vec = np.asarray(y_vec, dtype=np.float64)
    if y_vec.shape[-1] != sub.g.shape[0]:
        raise DimensionError("vector and bias direction differ in dimension")
    return y_vec @ sub.g


@dataclass(frozen=True)
class AnalogyItem:
    a: str
    b: str
    c: str
    d: str
    section: str = ""


def load_analogies(path, table: EmbeddingTable | None = None):
    """Parse a ``: section`` / ``a b c d`` analogy file.

    Returns ``(items, dropped)`` where ``dropped`` counts lines that used a
    word missing from ``table``.
    """
    items, dropped = [], 0
    section = ""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith(":"):
                section = line[1:].strip()
                continue
            words = line.split()
            if len(words) != 4:
                raise ValueError(f"{path}:{lineno}: analogy lines need exactly four words")
            if table is not None and any(w not in table for w in words):
                dropped += 1
                continue
            items.append(AnalogyItem(*words, section=section))
    return items, dropped


def analogy_examples(table: EmbeddingTable, items, sub: BiasSubspace) -> ExampleSet:
    """Stack analogies into ``X: (n, 3, d)``, ``y = e(d)``, ``z = g . e(d)``."""
    X = np.array([[table[it.a], table[it.b], table[it.c]] for it in items]).reshape(len(items), 3, table.d)
    Y = np.array([table[it.d] for it in items]).reshape(len(items), table.d)
    return ExampleSet(X, Y, project_protected(Y, sub) if len(items) else np.zeros(0))


def complete_analogy(table: EmbeddingTable, a: str, b: str, c: str, transform=None, top_n: int = 9):
    """Rank the vocabulary by cosine similarity to the analogy query.

    The query is ``e(b) + e(c) - e(a)`` or, with ``transform``, that
    predictor's output on the triple.  The three query words are excluded.
    """
    table.require([a, b, c])
    x = np.stack([table[a], table[b], table[c]])
    query = transform.forward(x)[0] if transform is not None else x[1] + x[2] - x[0]
    norms = np.linalg.norm(table.vectors, axis=1) * np.linalg.norm(query)
    sims = table.vectors @ query / np.where(norms > 0, norms, 1.0)
    for w in (a, b, c):
        sims[table.vocab[w]] = -np.inf
    order = np.argsort(-sims, kind="stable")[:top_n]
    return [(table.words[i], float(sims[i])) for i in order if np.isfinite(sims[i])]
