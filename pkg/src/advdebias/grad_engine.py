"""Parameter bookkeeping, Adam, step-size schedules and the debiased update direction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .numerics import PROJECTION_EPS, DimensionError, project


class DivergenceError(RuntimeError):
    """Raised when a gradient or loss stops being finite (or blows up)."""

    def __init__(self, message: str, log=None):
        super().__init__(message)
        self.log = log


class ParamVector:
    """A flat float64 parameter vector split into named contiguous segments."""

    def __init__(self, segments: Sequence[tuple[str, int]], values=None):
        names = [name for name, _ in segments]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate segment names in {names}")
        self.segments = [(str(name), int(length)) for name, length in segments]
        self._slices = {}
        offset = 0
        for name, length in self.segments:
            if length < 0:
                raise ValueError(f"segment {name!r} has negative length")
            self._slices[name] = slice(offset, offset + length)
            offset += length
        if values is None:
            values = np.zeros(offset)
        values = np.array(values, dtype=np.float64)
        if values.shape != (offset,):
            raise DimensionError(f"expected {offset} values, got shape {values.shape}")
        self.values = values

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[self._slices[name]]

    def __setitem__(self, name: str, value) -> None:
        self.values[self._slices[name]] = value

    def slice_of(self, name: str) -> slice:
        return self._slices[name]

    def copy(self) -> "ParamVector":
        return ParamVector(self.segments, self.values.copy())

    def with_values(self, values) -> "ParamVector":
        return ParamVector(self.segments, values)

    def as_dict(self) -> dict[str, list[float]]:
        return {name: self[name].tolist() for name, _ in self.segments}

    def __repr__(self) -> str:
        return f"ParamVector({self.segments})"


@dataclass
class AdamState:
    size: int
    base_lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if self.eps <= 0 or self.base_lr <= 0:
            raise ValueError("eps and base_lr must be positive")
        if self.m is None:
            self.m = np.zeros(self.size)
        if self.v is None:
            self.v = np.zeros(self.size)


def adam_step(state: AdamState, params: ParamVector, grad, lr_scale: float = 1.0):
    """One bias-corrected Adam update of ``params`` in place.

    ``lr_scale`` multiplies the base learning rate for this step only; the
    moment estimates are updated regardless of its value.
    """
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != params.values.shape:
        raise DimensionError(f"gradient shape {grad.shape} != params {params.values.shape}")
    if lr_scale < 0:
        raise ValueError("lr_scale must be nonnegative")
    if not np.all(np.isfinite(grad)):
        raise DivergenceError("non-finite gradient passed to Adam")
    state.t += 1
    state.m = state.beta1 * state.m + (1 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1 - state.beta2) * grad * grad
    m_hat = state.m / (1 - state.beta1 ** state.t)
    v_hat = state.v / (1 - state.beta2 ** state.t)
    if lr_scale > 0:
        params.values -= state.base_lr * lr_scale * m_hat / (np.sqrt(v_hat) + state.eps)
    return state, params


@dataclass(frozen=True)
class ScheduleSpec:
    """Adversary weight ``alpha0 * sqrt(t)`` and predictor step scale.

    ``eta_mode="inverse_t"`` scales the predictor step by ``min(1, t0 / t)``.
    """

    alpha0: float = 0.1
    eta_mode: str = "constant"
    t0: int = 1

    def __post_init__(self):
        if self.alpha0 < 0:
            raise ValueError("alpha0 must be nonnegative")
        if self.eta_mode not in ("constant", "inverse_t"):
            raise ValueError(f"unknown eta_mode {self.eta_mode!r}")
        if self.t0 < 1:
            raise ValueError("t0 must be a positive integer")


def schedule_values(spec: ScheduleSpec, t: int) -> tuple[float, float]:
    if t < 1:
        raise ValueError("t counts steps from 1")
    alpha = spec.alpha0 * math.sqrt(t)
    eta_scale = 1.0 if spec.eta_mode == "constant" else min(1.0, spec.t0 / t)
    return alpha, eta_scale


@dataclass
class DebiasGradients:
    grad_p: np.ndarray
    grad_a_w: np.ndarray
    grad_a_u: np.ndarray
    loss_p: float | None = None
    loss_a: float | None = None
    adversary_batch: int = 0

    def __post_init__(self):
        if np.shape(self.grad_p) != np.shape(self.grad_a_w):
            raise DimensionError("predictor and adversary gradients over W differ in length")


def compose_debias_direction(g: DebiasGradients, alpha: float, segments=None) -> np.ndarray:
    """``grad_p - proj_{grad_a_w} grad_p - alpha * grad_a_w``.

    With ``segments`` (a list of slices) the projection is taken separately on
    each block instead of on the whole flattened vector.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    gp = np.asarray(g.grad_p, dtype=np.float64)
    ga = np.asarray(g.grad_a_w, dtype=np.float64)
    if gp.shape != ga.shape:
        raise DimensionError(f"length mismatch {gp.shape} vs {ga.shape}")
    if segments is None:
        segments = [slice(None)]
    out = gp.copy()
    for sl in segments:
        if float(np.dot(ga[sl], ga[sl])) < PROJECTION_EPS:
            continue
        out[sl] = gp[sl] - project(gp[sl], ga[sl]) - alpha * ga[sl]
    return out


def finite_diff_check(loss: Callable[[ParamVector], float], analytic_grad, params: ParamVector,
                      h: float = 1e-4) -> float:
    """Worst relative disagreement between ``analytic_grad`` and central differences."""
    if h <= 0:
        raise ValueError("h must be positive")
    analytic = np.asarray(analytic_grad, dtype=np.float64)
    if analytic.shape != params.values.shape:
        raise DimensionError("analytic gradient does not match parameter length")
    base = params.values
    worst = 0.0
    for i in range(base.shape[0]):
        plus = base.copy()
        plus[i] += h
        minus = base.copy()
        minus[i] -= h
        lp = loss(params.with_values(plus))
        lm = loss(params.with_values(minus))
        if not (math.isfinite(lp) and math.isfinite(lm)):
            raise DivergenceError(f"loss is not finite around coordinate {i}")
        numeric = (lp - lm) / (2 * h)
        err = abs(analytic[i] - numeric) / max(1e-8, abs(analytic[i]) + abs(numeric))
        worst = max(worst, err)
    return worst
