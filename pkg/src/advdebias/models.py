"""Predictors and adversaries with closed-form forward passes and gradients.

All batch methods take arrays whose leading axis indexes examples and return
mean losses.  Predictors expose ``vjp`` (vector-Jacobian product of their
output with respect to their own parameters) so that an adversary's loss can
be differentiated back into the predictor weights.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .grad_engine import DebiasGradients, DivergenceError, ParamVector
from .numerics import DimensionError, SparseFeatures

#: Predicted probabilities are kept inside [SIGMOID_EPS, 1 - SIGMOID_EPS].
SIGMOID_EPS = 1e-7
LOGIT_MAX = math.log((1 - SIGMOID_EPS) / SIGMOID_EPS)


def sigmoid(a):
    a = np.asarray(a, dtype=np.float64)
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ea = np.exp(a[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out if out.ndim else float(out)


def logit(p):
    p = np.asarray(p, dtype=np.float64)
    out = np.log(p) - np.log1p(-p)
    return out if out.ndim else float(out)


class LossKind(enum.Enum):
    BINARY_CROSS_ENTROPY = "binary_cross_entropy"
    SQUARED_ERROR = "squared_error"


def loss(kind: LossKind, prediction, target) -> float:
    """Loss of a single prediction.

    Binary cross-entropy takes a probability and a 0/1 target; squared error
    takes scalars or vectors and returns the squared Euclidean distance.
    """
    if kind is LossKind.BINARY_CROSS_ENTROPY:
        p = float(prediction)
        y = float(target)
        if not 0.0 < p < 1.0:
            raise ValueError(f"cross-entropy needs a prediction in (0, 1), got {p}")
        if y not in (0.0, 1.0):
            raise ValueError(f"cross-entropy needs a 0/1 target, got {y}")
        return -(y * math.log(p) + (1 - y) * math.log1p(-p))
    pred = np.asarray(prediction, dtype=np.float64)
    tgt = np.asarray(target, dtype=np.float64)
    if pred.shape != tgt.shape:
        raise DimensionError(f"shape mismatch {pred.shape} vs {tgt.shape}")
    diff = pred - tgt
    return float(np.sum(diff * diff))


def mean_bce(p, y) -> float:
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if p.size == 0:
        return 0.0
    if np.any((p <= 0) | (p >= 1)):
        raise ValueError("cross-entropy needs predictions strictly inside (0, 1)")
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log1p(-p)))


def bce_from_logits(a, y) -> np.ndarray:
    """Per-example cross-entropy of ``sigmoid(a)`` against ``y``, computed stably."""
    a = np.asarray(a, dtype=np.float64)
    return np.logaddexp(0.0, a) - y * a


def _as_matrix(X, dim):
    if isinstance(X, SparseFeatures):
        X = X.to_dense()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[-1] != dim:
        raise DimensionError(f"input dimension {X.shape[-1]} != model dimension {dim}")
    return X


def _clamp_probability(p):
    p = np.asarray(p, dtype=np.float64)
    if np.any((p <= 0) | (p >= 1)) or not np.all(np.isfinite(p)):
        raise ValueError("probability input must lie strictly inside (0, 1)")
    return np.clip(p, SIGMOID_EPS, 1 - SIGMOID_EPS)


def _check_finite(*arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise DivergenceError("non-finite value in gradient computation")


# ---------------------------------------------------------------------------
# predictors
# ---------------------------------------------------------------------------

@dataclass
class LogisticPredictor:
    """``yhat = sigmoid(w1 . x + b)`` with the logit clipped to keep yhat off {0, 1}."""

    params: ParamVector
    loss_kind = LossKind.BINARY_CROSS_ENTROPY

    @classmethod
    def zeros(cls, dim: int) -> "LogisticPredictor":
        return cls(ParamVector([("w1", dim), ("b", 1)]))

    @property
    def dim(self) -> int:
        return len(self.params) - 1

    @property
    def w1(self) -> np.ndarray:
        return self.params["w1"]

    @property
    def b(self) -> float:
        return float(self.params["b"][0])

    def logits(self, X) -> np.ndarray:
        X = _as_matrix(X, self.dim)
        return X @ self.w1 + self.b

    def forward(self, X) -> np.ndarray:
        return sigmoid(np.clip(self.logits(X), -LOGIT_MAX, LOGIT_MAX))

    def __call__(self, X):
        return self.forward(X)

    def loss_grad(self, X, y) -> tuple[float, np.ndarray]:
        X = _as_matrix(X, self.dim)
        y = np.asarray(y, dtype=np.float64)
        n = X.shape[0]
        if n == 0:
            return 0.0, np.zeros(len(self.params))
        a = X @ self.w1 + self.b
        inside = np.abs(a) < LOGIT_MAX
        p = sigmoid(np.clip(a, -LOGIT_MAX, LOGIT_MAX))
        value = mean_bce(p, y)
        da = (p - y) * inside / n
        grad = np.concatenate([X.T @ da, [da.sum()]])
        _check_finite(grad)
        return value, grad

    def vjp(self, X, cotangent) -> np.ndarray:
        """Gradient over the parameters of ``sum_i cotangent_i * yhat_i``."""
        X = _as_matrix(X, self.dim)
        a = X @ self.w1 + self.b
        inside = np.abs(a) < LOGIT_MAX
        p = sigmoid(np.clip(a, -LOGIT_MAX, LOGIT_MAX))
        da = np.asarray(cotangent, dtype=np.float64) * p * (1 - p) * inside
        return np.concatenate([X.T @ da, [da.sum()]])


@dataclass
class AnalogyPredictor:
    """``yhat = v - w (w . v)`` with ``v = x2 + x3 - x1``.

    Inputs are arrays of shape ``(n, 3, d)`` holding the three query vectors.
    """

    params: ParamVector
    loss_kind = LossKind.SQUARED_ERROR

    @classmethod
    def zeros(cls, dim: int) -> "AnalogyPredictor":
        return cls(ParamVector([("w", dim)]))

    @property
    def dim(self) -> int:
        return len(self.params)

    @property
    def w(self) -> np.ndarray:
        return self.params["w"]

    def _generic(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 2:
            X = X[None]
        if X.shape[1:] != (3, self.dim):
            raise DimensionError(f"expected inputs of shape (n, 3, {self.dim}), got {X.shape}")
        return X[:, 1] + X[:, 2] - X[:, 0]

    def forward(self, X) -> np.ndarray:
        v = self._generic(X)
        return v - np.outer(v @ self.w, self.w)

    def __call__(self, X):
        return self.forward(X)

    def loss_grad(self, X, Y) -> tuple[float, np.ndarray]:
        v = self._generic(X)
        Y = np.asarray(Y, dtype=np.float64).reshape(v.shape)
        n = v.shape[0]
        if n == 0:
            return 0.0, np.zeros(self.dim)
        w = self.w
        s = v @ w
        r = v - np.outer(s, w) - Y
        value = float(np.mean(np.sum(r * r, axis=1)))
        grad = self.vjp(X, 2.0 * r / n)
        _check_finite(grad)
        return value, grad

    def vjp(self, X, cotangent) -> np.ndarray:
        v = self._generic(X)
        C = np.asarray(cotangent, dtype=np.float64).reshape(v.shape)
        w = self.w
        s = v @ w
        return -(C.T @ s + v.T @ (C @ w))


# ---------------------------------------------------------------------------
# adversaries
# ---------------------------------------------------------------------------
# Each adversary's ``loss_grad(yhat, y, z)`` returns
#   (mean loss, gradient over its own params, dLoss/dyhat per example)
# where the last term already carries the 1/n of the batch mean.


@dataclass
class ParityAdversary:
    """Logistic model of z from the predicted probability alone."""

    params: ParamVector
    loss_kind = LossKind.BINARY_CROSS_ENTROPY

    @classmethod
    def zeros(cls) -> "ParityAdversary":
        return cls(ParamVector([("u", 1), ("c0", 1)]))

    @property
    def u(self) -> float:
        return float(self.params["u"][0])

    @property
    def c0(self) -> float:
        return float(self.params["c0"][0])

    def logits(self, yhat, y=None) -> np.ndarray:
        return self.u * np.asarray(yhat, dtype=np.float64) + self.c0

    def forward(self, yhat, y=None):
        return sigmoid(self.logits(yhat))

    def loss_grad(self, yhat, y, z):
        yhat = np.asarray(yhat, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        n = yhat.shape[0]
        if n == 0:
            return 0.0, np.zeros(2), np.zeros(0)
        a = self.logits(yhat)
        value = float(np.mean(bce_from_logits(a, z)))
        e = (sigmoid(a) - z) / n
        grad_u = np.array([e @ yhat, e.sum()])
        d_yhat = e * self.u
        _check_finite(grad_u, d_yhat)
        return value, grad_u, d_yhat


@dataclass
class OddsAdversary:
    """Adversary that also sees the true label.

    ``s = sigmoid((1 + |c|) logit(yhat))`` sharpens the prediction and the
    logit of z is ``w2 . [s, s*y, s*(1-y)] + bias``.  Built with
    ``label_bias=True`` it carries one more weight that adds ``label_bias * y``
    to the logit, so the label can inform z even where ``s`` is near zero.
    """

    params: ParamVector
    loss_kind = LossKind.BINARY_CROSS_ENTROPY

    @classmethod
    def zeros(cls, label_bias: bool = False) -> "OddsAdversary":
        segments = [("c", 1), ("bias", 1), ("w2", 3)]
        if label_bias:
            segments.append(("label_bias", 1))
        return cls(ParamVector(segments))

    @property
    def c(self) -> float:
        return float(self.params["c"][0])

    @property
    def bias(self) -> float:
        return float(self.params["bias"][0])

    @property
    def w2(self) -> np.ndarray:
        return self.params["w2"]

    @property
    def has_label_bias(self) -> bool:
        return len(self.params) == 6

    @property
    def label_bias(self) -> float:
        return float(self.params["label_bias"][0]) if self.has_label_bias else 0.0

    def sharpen(self, yhat):
        return sigmoid((1 + abs(self.c)) * logit(_clamp_probability(yhat)))

    def _features(self, s, y):
        y = np.asarray(y, dtype=np.float64)
        return np.stack([s, s * y, s * (1 - y)], axis=-1)

    def logits(self, yhat, y):
        s = self.sharpen(yhat)
        y = np.asarray(y, dtype=np.float64)
        return self._features(s, y) @ self.w2 + self.bias + self.label_bias * y

    def forward(self, yhat, y):
        return sigmoid(self.logits(yhat, y))

    def loss_grad(self, yhat, y, z):
        yhat = np.atleast_1d(_clamp_probability(yhat))
        y = np.atleast_1d(np.asarray(y, dtype=np.float64))
        z = np.atleast_1d(np.asarray(z, dtype=np.float64))
        n = yhat.shape[0]
        if n == 0:
            return 0.0, np.zeros(len(self.params)), np.zeros(0)
        q = logit(yhat)
        k = 1 + abs(self.c)
        s = sigmoid(k * q)
        feats = self._features(s, y)
        a = feats @ self.w2 + self.bias + self.label_bias * y
        value = float(np.mean(bce_from_logits(a, z)))
        e = (sigmoid(a) - z) / n
        w2 = self.w2
        ds = e * (w2[0] + w2[1] * y + w2[2] * (1 - y))
        slope = s * (1 - s)
        grad_c = np.sum(ds * slope * q) * np.sign(self.c)
        parts = [[grad_c, e.sum()], feats.T @ e]
        if self.has_label_bias:
            parts.append([e @ y])
        grad_u = np.concatenate(parts)
        d_yhat = ds * slope * k / (yhat * (1 - yhat))
        _check_finite(grad_u, d_yhat)
        return value, grad_u, d_yhat


@dataclass
class EmbeddingAdversary:
    """Linear regressor ``zhat = w2 . yhat`` trained with squared error."""

    params: ParamVector
    loss_kind = LossKind.SQUARED_ERROR

    @classmethod
    def zeros(cls, dim: int) -> "EmbeddingAdversary":
        return cls(ParamVector([("w2", dim)]))

    @property
    def w2(self) -> np.ndarray:
        return self.params["w2"]

    def forward(self, yhat, y=None):
        yhat = np.asarray(yhat, dtype=np.float64)
        if yhat.shape[-1] != self.w2.shape[0]:
            raise DimensionError(f"yhat dimension {yhat.shape[-1]} != {self.w2.shape[0]}")
        out = yhat @ self.w2
        return out if np.ndim(out) else float(out)

    def loss_grad(self, yhat, y, z):
        yhat = np.asarray(yhat, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        n = yhat.shape[0]
        if n == 0:
            return 0.0, np.zeros_like(self.w2), np.zeros((0, self.w2.shape[0]))
        r = yhat @ self.w2 - z
        value = float(np.mean(r * r))
        e = 2.0 * r / n
        grad_u = yhat.T @ e
        d_yhat = np.outer(e, self.w2)
        _check_finite(grad_u, d_yhat)
        return value, grad_u, d_yhat


def model_gradients(predictor, X, y, z, adversary=None, adversary_mask=None) -> DebiasGradients:
    """Predictor gradient and, if an adversary is given, its gradients over U and W.

    ``adversary_mask`` selects the examples the adversary trains on; its
    gradients are averaged over that sub-batch only.  Losses are attached to
    the result as ``loss_p`` and ``loss_a`` (``None`` without an adversary).
    """
    loss_p, grad_p = predictor.loss_grad(X, y)
    n_params = len(predictor.params)
    if adversary is None:
        return DebiasGradients(grad_p, np.zeros(n_params), np.zeros(0), loss_p=loss_p)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    z = np.asarray(z)
    if adversary_mask is not None:
        X, y, z = X[adversary_mask], y[adversary_mask], z[adversary_mask]
    n_adv = X.shape[0]
    if n_adv == 0:
        return DebiasGradients(grad_p, np.zeros(n_params), np.zeros(len(adversary.params)),
                               loss_p=loss_p)
    yhat = predictor.forward(X)
    loss_a, grad_u, d_yhat = adversary.loss_grad(yhat, y, z)
    grad_a_w = predictor.vjp(X, d_yhat)
    _check_finite(grad_a_w)
    return DebiasGradients(grad_p, grad_a_w, grad_u, loss_p=loss_p, loss_a=loss_a,
                           adversary_batch=n_adv)
