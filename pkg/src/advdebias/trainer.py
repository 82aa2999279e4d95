"""Simultaneous predictor/adversary training with the projected debiasing update."""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .data.examples import ExampleSet
from .fairness import FairnessReport, fairness_report
from .grad_engine import (
    AdamState, DivergenceError, ScheduleSpec, adam_step, compose_debias_direction, schedule_values,
)
from .models import (
    AnalogyPredictor, EmbeddingAdversary, LogisticPredictor, OddsAdversary, ParityAdversary,
    model_gradients,
)
from .numerics import SeededRng

PARITY = "demographic_parity"
ODDS = "equality_of_odds"
OPPORTUNITY = "equality_of_opportunity"


@dataclass(frozen=True)
class FairnessMode:
    """Which fairness notion the adversary enforces.

    Parity: the adversary sees the prediction only.  Odds: it also sees the
    true label.  Opportunity: like parity, but the adversary only trains on
    examples whose label equals ``target_y``.
    """

    kind: str = PARITY
    target_y: int | None = None

    def __post_init__(self):
        if self.kind not in (PARITY, ODDS, OPPORTUNITY):
            raise ValueError(f"unknown fairness mode {self.kind!r}")
        if self.kind == OPPORTUNITY and self.target_y not in (0, 1):
            raise ValueError("equality of opportunity needs target_y in {0, 1}")

    @classmethod
    def parse(cls, name: str, target_y: int | None = None) -> "FairnessMode":
        aliases = {"parity": PARITY, "odds": ODDS, "opportunity": OPPORTUNITY}
        kind = aliases.get(name, name)
        return cls(kind, target_y if kind == OPPORTUNITY else None)

    def adversary_mask(self, y) -> np.ndarray | None:
        if self.kind != OPPORTUNITY:
            return None
        return np.asarray(y) == self.target_y


@dataclass
class TrainConfig:
    steps: int = 5000
    batch_size: int = 128
    predictor_lr: float = 0.01
    adversary_lr: float = 0.01
    schedule: ScheduleSpec = field(default_factory=ScheduleSpec)
    mode: FairnessMode = field(default_factory=FairnessMode)
    debias: bool = True
    seed: int = 0
    loss_blowup_limit: float = 1e3
    task: str = "classification"
    per_segment_projection: bool = False
    odds_label_bias: bool = False
    init_scale: float = 1.0
    adversary_init_scale: float = 0.01
    log_every: int = 1

    def __post_init__(self):
        if self.steps < 1 or self.batch_size < 1:
            raise ValueError("steps and batch_size must be positive")
        if self.predictor_lr <= 0 or self.adversary_lr <= 0:
            raise ValueError("learning rates must be positive")
        if self.task not in ("classification", "analogy"):
            raise ValueError(f"unknown task {self.task!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = {"kind": self.mode.kind, "target_y": self.mode.target_y}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if isinstance(d.get("schedule"), dict):
            d["schedule"] = ScheduleSpec(**d["schedule"])
        if isinstance(d.get("mode"), dict):
            d["mode"] = FairnessMode(**d["mode"])
        return cls(**d)


def toy_config(**overrides) -> TrainConfig:
    cfg = TrainConfig(steps=5000, adversary_lr=0.1,
                      schedule=ScheduleSpec(alpha0=0.1, eta_mode="inverse_t", t0=500),
                      mode=FairnessMode(PARITY))
    return replace(cfg, **overrides)


def adult_config(**overrides) -> TrainConfig:
    cfg = TrainConfig(steps=20000, adversary_lr=0.03, odds_label_bias=True,
                      schedule=ScheduleSpec(alpha0=1.0, eta_mode="inverse_t", t0=300),
                      mode=FairnessMode(ODDS))
    return replace(cfg, **overrides)


def embedding_config(**overrides) -> TrainConfig:
    cfg = TrainConfig(steps=3000, task="analogy", batch_size=64,
                      schedule=ScheduleSpec(alpha0=0.2, eta_mode="inverse_t", t0=100),
                      mode=FairnessMode(PARITY))
    return replace(cfg, **overrides)


@dataclass
class TrainLog:
    records: list[dict] = field(default_factory=list)
    wall_time_s: float = 0.0
    termination: str = ""

    def append(self, record: dict) -> None:
        if self.records and record["t"] <= self.records[-1]["t"]:
            raise ValueError("log records must have increasing t")
        self.records.append(record)

    def to_ndjson(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_ndjson())


@dataclass
class TrainedModels:
    predictor: object
    adversary: object | None = None


@dataclass
class TrainState:
    t: int
    predictor: object
    predictor_opt: AdamState
    adversary: object | None
    adversary_opt: AdamState | None
    rng: SeededRng
    log: TrainLog = field(default_factory=TrainLog)

    @property
    def models(self) -> TrainedModels:
        return TrainedModels(self.predictor, self.adversary)


def build_models(cfg: TrainConfig, dim: int, rng: SeededRng):
    if cfg.task == "analogy":
        predictor = AnalogyPredictor.zeros(dim)
        predictor.params.values[:] = rng.normal(0.0, cfg.init_scale / math.sqrt(dim), dim)
        adversary = EmbeddingAdversary.zeros(dim) if cfg.debias else None
    else:
        predictor = LogisticPredictor.zeros(dim)
        adversary = None
        if cfg.debias:
            adversary = OddsAdversary.zeros(cfg.odds_label_bias) if cfg.mode.kind == ODDS else ParityAdversary.zeros()
    if adversary is not None:
        n = len(adversary.params)
        adversary.params.values[:] = rng.normal(0.0, cfg.adversary_init_scale, n)
    return predictor, adversary


def init_state(cfg: TrainConfig, dim: int) -> TrainState:
    rng = SeededRng(cfg.seed)
    predictor, adversary = build_models(cfg, dim, rng.spawn(1))
    pred_opt = AdamState(len(predictor.params), base_lr=cfg.predictor_lr)
    adv_opt = AdamState(len(adversary.params), base_lr=cfg.adversary_lr) if adversary else None
    return TrainState(0, predictor, pred_opt, adversary, adv_opt, rng)


def _guard(value, cfg: TrainConfig, name: str, state: TrainState) -> None:
    if value is None:
        return
    if not math.isfinite(value) or value > cfg.loss_blowup_limit:
        state.log.termination = f"diverged: {name}={value!r} at step {state.t + 1}"
        raise DivergenceError(state.log.termination, log=state.log)


def train_step(state: TrainState, batch: ExampleSet, cfg: TrainConfig) -> TrainState:
    """Advance both models by one simultaneous step on ``batch``."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    adversary = state.adversary if cfg.debias else None
    mask = cfg.mode.adversary_mask(batch.y) if adversary is not None else None
    g = model_gradients(state.predictor, batch.X, batch.y, batch.z, adversary, mask)
    _guard(g.loss_p, cfg, "L_P", state)
    _guard(g.loss_a, cfg, "L_A", state)

    t = state.t + 1
    alpha, eta_scale = schedule_values(cfg.schedule, t)
    if adversary is not None and g.adversary_batch > 0:
        adam_step(state.adversary_opt, adversary.params, g.grad_a_u)
    segments = None
    if cfg.per_segment_projection:
        segments = [state.predictor.params.slice_of(n) for n, _ in state.predictor.params.segments]
    direction = compose_debias_direction(g, alpha, segments)
    adam_step(state.predictor_opt, state.predictor.params, direction, eta_scale)
    state.t = t

    if t % cfg.log_every == 0 or t == cfg.steps:
        ga = g.grad_a_w
        state.log.append({
            "t": t, "L_P": g.loss_p, "L_A": g.loss_a, "alpha": alpha, "eta_scale": eta_scale,
            "adversary_batch": g.adversary_batch,
            "d_dot_ga": float(direction @ ga), "ga_sq": float(ga @ ga),
            "d_norm": float(np.linalg.norm(direction)),
        })
    return state


def batches(n: int, batch_size: int, rng: SeededRng):
    """Endless minibatch index stream, reshuffled every epoch."""
    while True:
        perm = rng.permutation(n)
        for start in range(0, n, batch_size):
            yield perm[start:start + batch_size]


def fit(cfg: TrainConfig, train: ExampleSet):
    if len(train) == 0:
        raise ValueError("empty training set")
    dim = train.X.shape[-1]
    state = init_state(cfg, dim)
    stream = batches(len(train), cfg.batch_size, state.rng.spawn(2))
    start = time.perf_counter()
    try:
        for _ in range(cfg.steps):
            train_step(state, train[next(stream)], cfg)
    finally:
        state.log.wall_time_s = time.perf_counter() - start
    state.log.termination = "completed"
    return state.models, state.log


def evaluate(models: TrainedModels, test: ExampleSet, mode: FairnessMode | None = None,
             bias_direction=None):
    """Fairness report for classifiers, or transform statistics for the analogy model."""
    if len(test) == 0:
        raise ValueError("empty test set")
    predictor = models.predictor
    if isinstance(predictor, AnalogyPredictor):
        loss, _ = predictor.loss_grad(test.X, test.y)
        w = predictor.w
        out = {"heldout_loss": loss, "w_norm": float(np.linalg.norm(w))}
        if bias_direction is not None:
            out["w_dot_g"] = float(w @ np.asarray(bias_direction))
        return out
    return fairness_report(predictor.forward(test.X), test.y, test.z)


def adversary_holdout_loss(models: TrainedModels, test: ExampleSet, mode: FairnessMode) -> float:
    """Mean loss of the trained adversary on held-out data (restricted per ``mode``)."""
    if models.adversary is None:
        raise ValueError("no adversary was trained")
    mask = mode.adversary_mask(test.y)
    data = test if mask is None else test[mask]
    yhat = models.predictor.forward(data.X)
    value, _, _ = models.adversary.loss_grad(yhat, data.y, data.z)
    return value


def coefficients(report_or_models) -> dict:
    """Named weights of a trained logistic predictor."""
    p = report_or_models.predictor
    return {"w1": p.w1.tolist(), "b": p.b}


__all__ = [
    "PARITY", "ODDS", "OPPORTUNITY", "FairnessMode", "TrainConfig", "TrainLog", "TrainState",
    "TrainedModels", "FairnessReport", "toy_config", "adult_config", "embedding_config",
    "init_state", "train_step", "fit", "evaluate", "adversary_holdout_loss", "coefficients",
]
