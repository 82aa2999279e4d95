"""Finite-difference checks for every predictor/adversary pairing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grad_engine import finite_diff_check
from .models import (
    AnalogyPredictor, EmbeddingAdversary, LogisticPredictor, OddsAdversary, ParityAdversary,
    model_gradients,
)
from .numerics import SeededRng

TOLERANCE = 1e-4
STEP = 1e-4


@dataclass
class CheckResult:
    name: str
    trials: int
    worst: float

    @property
    def passed(self) -> bool:
        return self.worst < TOLERANCE


def _classification_draw(rng, n=16, d=5):
    X = rng.normal(0.0, 1.0, (n, d))
    y = rng.integers(0, 2, size=n).astype(np.float64)
    z = rng.integers(0, 2, size=n).astype(np.float64)
    p = LogisticPredictor.zeros(d)
    p.params.values[:] = rng.normal(0.0, 0.5, d + 1)
    return p, X, y, z


def _analogy_draw(rng, n=12, d=6):
    X = rng.normal(0.0, 1.0, (n, 3, d))
    Y = rng.normal(0.0, 1.0, (n, d))
    g = rng.normal(0.0, 1.0, d)
    g /= np.linalg.norm(g)
    p = AnalogyPredictor.zeros(d)
    p.params.values[:] = rng.normal(0.0, 0.5, d)
    return p, X, Y, Y @ g


def _random_adversary(kind, rng, d=None):
    if kind == "parity":
        a = ParityAdversary.zeros()
    elif kind == "odds":
        a = OddsAdversary.zeros(label_bias=True)
    else:
        a = EmbeddingAdversary.zeros(d)
    a.params.values[:] = rng.normal(0.0, 1.0, len(a.params))
    if kind == "odds":
        # keep c off the kink of |c|
        c = a.params.values[0]
        a.params.values[0] = np.sign(c) * (0.2 + abs(c))
    return a


def _check_predictor(p, X, y):
    _, grad = p.loss_grad(X, y)
    cls = type(p)
    return finite_diff_check(lambda pv: cls(pv).loss_grad(X, y)[0], grad, p.params, STEP)


def _check_adversary(p, adv, X, y, z):
    """Worst error over both the adversary's own weights and the predictor weights."""
    g = model_gradients(p, X, y, z, adv)
    yhat = p.forward(X)
    pcls, acls = type(p), type(adv)
    err_u = finite_diff_check(lambda pv: acls(pv).loss_grad(yhat, y, z)[0], g.grad_a_u, adv.params, STEP)
    err_w = finite_diff_check(lambda pv: adv.loss_grad(pcls(pv).forward(X), y, z)[0], g.grad_a_w,
                              p.params, STEP)
    return max(err_u, err_w)


def _logistic_bce(rng):
    p, X, y, _ = _classification_draw(rng)
    return _check_predictor(p, X, y)


def _logistic_parity(rng):
    p, X, y, z = _classification_draw(rng)
    return _check_adversary(p, _random_adversary("parity", rng), X, y, z)


def _logistic_odds(rng):
    p, X, y, z = _classification_draw(rng)
    return _check_adversary(p, _random_adversary("odds", rng), X, y, z)


def _analogy_squared(rng):
    p, X, Y, _ = _analogy_draw(rng)
    return _check_predictor(p, X, Y)


def _analogy_embedding(rng):
    p, X, Y, z = _analogy_draw(rng)
    return _check_adversary(p, _random_adversary("embedding", rng, p.dim), X, Y, z)


PAIRINGS = {
    "logistic": _logistic_bce,
    "logistic+parity": _logistic_parity,
    "logistic+odds": _logistic_odds,
    "analogy": _analogy_squared,
    "analogy+embedding": _analogy_embedding,
}


def run_gradcheck(model: str = "all", seed: int = 0, trials: int = 20) -> list[CheckResult]:
    """Check ``trials`` random draws for ``model`` (a key of ``PAIRINGS`` or ``"all"``)."""
    if model != "all" and model not in PAIRINGS:
        raise KeyError(model)
    if trials < 1:
        raise ValueError("trials must be positive")
    names = list(PAIRINGS) if model == "all" else [model]
    results = []
    for i, name in enumerate(names):
        rng = SeededRng(seed).spawn(i)
        worst = float(max(PAIRINGS[name](rng) for _ in range(trials)))
        results.append(CheckResult(name, trials, worst))
    return results
