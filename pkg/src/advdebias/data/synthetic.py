"""A small synthetic vocabulary with a planted gender axis.

Axis 0 carries gender (female positive) and axis 1 carries noise that the
analogy arithmetic amplifies; the remaining axes carry word meaning.

* Gendered pairs share their meaning and differ along axis 0 only.
* Words in the neutral relation families (capital/country, singular/plural,
  base/comparative) carry small random gender offsets.
* Medical occupations share a meaning cluster and carry stereotyped gender
  offsets (``OCCUPATIONS``), so ``he : she :: doctor : ?`` is biased.

Most training analogies are gender-neutral, as in public analogy sets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..numerics import SeededRng
from .embeddings import DEFAULT_PAIRS, AnalogyItem, EmbeddingTable

EXTRA_PAIRS = (("king", "queen"), ("brother", "sister"), ("uncle", "aunt"), ("husband", "wife"))
FAMILIES = {
    "capital-country": (("paris", "france"), ("tokyo", "japan"), ("rome", "italy"),
                        ("berlin", "germany"), ("madrid", "spain"), ("lima", "peru"),
                        ("cairo", "egypt"), ("oslo", "norway"), ("athens", "greece")),
    "plural": (("car", "cars"), ("tree", "trees"), ("house", "houses"), ("river", "rivers"),
               ("bird", "birds"), ("stone", "stones"), ("road", "roads"), ("cloud", "clouds"),
               ("lamp", "lamps")),
    "comparative": (("big", "bigger"), ("fast", "faster"), ("cold", "colder"), ("tall", "taller"),
                    ("small", "smaller"), ("warm", "warmer"), ("long", "longer"),
                    ("strong", "stronger"), ("old", "older")),
}
#: occupation -> planted gender offset (positive = stereotypically female)
OCCUPATIONS = {"doctor": -0.45, "nurse": 0.55, "physician": 0.0, "surgeon": -0.3,
               "nanny": 0.7, "dentist": 0.05}
GENDER_AXIS = 0
NOISE_AXIS = 1


@dataclass(frozen=True)
class SyntheticVocabulary:
    table: EmbeddingTable
    analogies: list[AnalogyItem]
    pairs: list[tuple[str, str]]
    gender_axis: np.ndarray


def planted_gender_vocabulary(seed: int = 0, dim: int = 24, noise: float = 0.3,
                              gender_noise: float = 0.2, pair_noise: float = 0.02,
                              n_gender_analogies: int = 40) -> SyntheticVocabulary:
    rng = SeededRng(seed)
    n_sem = dim - 2

    def meaning(scale=1.0):
        return np.concatenate([[0.0, 0.0], rng.normal(0.0, scale / np.sqrt(n_sem), n_sem)])

    def jitter():
        return np.concatenate([[0.0], [rng.normal(0.0, noise)], rng.normal(0.0, pair_noise, n_sem)])

    g = np.zeros(dim)
    g[GENDER_AXIS] = 1.0
    words, vecs = [], []

    def add(word, vec):
        words.append(word)
        vecs.append(vec)

    gender_pairs = list(DEFAULT_PAIRS) + list(EXTRA_PAIRS)
    for male, female in gender_pairs:
        base = meaning()
        half = 0.5 * rng.normal(2.0, 0.3)
        add(male, base - half * g + jitter())
        add(female, base + half * g + jitter())

    for pairs in FAMILIES.values():
        shift = meaning()
        for first, second in pairs:
            base = meaning()
            add(first, base + rng.normal(0.0, gender_noise) * g + jitter())
            add(second, base + shift + rng.normal(0.0, gender_noise) * g + jitter())

    medicine = meaning()
    for word, offset in OCCUPATIONS.items():
        add(word, medicine + meaning(0.35) + offset * g + jitter())

    table = EmbeddingTable(words, np.array(vecs))

    analogies = []
    for section, pairs in FAMILIES.items():
        for (a, b), (c, d) in itertools.permutations(pairs, 2):
            analogies.append(AnalogyItem(a, b, c, d, section))
    gendered = []
    for (m1, f1), (m2, f2) in itertools.permutations(gender_pairs, 2):
        gendered.append(AnalogyItem(m1, f1, m2, f2, "gender"))
        gendered.append(AnalogyItem(f1, m1, f2, m2, "gender"))
    pick = rng.permutation(len(gendered))[:n_gender_analogies]
    analogies += [gendered[i] for i in sorted(pick)]
    return SyntheticVocabulary(table, analogies, list(DEFAULT_PAIRS), g)
