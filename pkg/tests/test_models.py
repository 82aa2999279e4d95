import math

import numpy as np
import pytest

from advdebias.grad_engine import DivergenceError, finite_diff_check
from advdebias.gradcheck import PAIRINGS, run_gradcheck
from advdebias.models import (
    LOGIT_MAX, SIGMOID_EPS, AnalogyPredictor, EmbeddingAdversary, LogisticPredictor, LossKind,
    OddsAdversary, ParityAdversary, logit, loss, model_gradients, sigmoid,
)
from advdebias.numerics import DimensionError, SparseFeatures
from advdebias.fairness import empirical_entropy


def logistic(w, b):
    p = LogisticPredictor.zeros(len(w))
    p.params["w1"] = w
    p.params["b"] = [b]
    return p


def odds(c, bias, w2, label_bias=None):
    a = OddsAdversary.zeros(label_bias is not None)
    a.params["c"] = [c]
    a.params["bias"] = [bias]
    a.params["w2"] = w2
    if label_bias is not None:
        a.params["label_bias"] = [label_bias]
    return a


class TestLogistic:
    def test_zero_weights(self):
        assert logistic([0.0, 0.0, 0.0], 0.0).forward(np.array([[3.0, -1.0, 2.0]]))[0] == 0.5
        assert logistic([1.0], 0.0).forward(np.array([[0.0]]))[0] == 0.5

    def test_value(self):
        p = logistic([2.0, -1.0], 0.5)
        assert p.forward(np.array([[1.0, 1.0]]))[0] == pytest.approx(1 / (1 + math.exp(-1.5)), abs=1e-12)
        assert p.forward(np.array([[1.0, 1.0]]))[0] == pytest.approx(0.817574, abs=1e-6)

    def test_sparse_input(self):
        p = logistic([2.0, -1.0, 0.3], 0.5)
        sf = SparseFeatures.from_pairs([(0, 1.0), (2, 2.0)], 3)
        assert p.forward(sf)[0] == pytest.approx(sigmoid(2.0 + 0.6 + 0.5))

    def test_clamped_output(self):
        p = logistic([1000.0], 0.0)
        out = p.forward(np.array([[1.0], [-1.0]]))
        assert 0.0 < out[1] < out[0] < 1.0
        assert out[0] == pytest.approx(1 - SIGMOID_EPS, rel=1e-9)
        assert out[1] == pytest.approx(SIGMOID_EPS, rel=1e-6)
        assert LOGIT_MAX == pytest.approx(logit(1 - SIGMOID_EPS))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            logistic([1.0, 2.0], 0.0).forward(np.ones((1, 3)))

    def test_gradient_by_hand(self):
        x = np.array([[0.3, -1.2, 2.0]])
        _, grad = logistic([0.0, 0.0, 0.0], 0.0).loss_grad(x, np.array([1.0]))
        np.testing.assert_allclose(grad[:3], -0.5 * x[0])
        assert grad[3] == pytest.approx(-0.5)


class TestAnalogy:
    def test_zero_w_is_generic_vector(self, rng):
        X = rng.normal(size=(4, 3, 5))
        v = X[:, 1] + X[:, 2] - X[:, 0]
        np.testing.assert_array_equal(AnalogyPredictor.zeros(5).forward(X), v)

    def test_full_removal(self):
        p = AnalogyPredictor.zeros(3)
        p.params["w"] = [0.0, 1.0, 0.0]
        X = np.array([[[0, 0, 0], [0, 2.0, 0], [0, 1.0, 0]]])
        np.testing.assert_allclose(p.forward(X), [[0, 0, 0]], atol=1e-15)

    def test_matches_explicit_matrix(self, rng):
        p = AnalogyPredictor.zeros(2)
        p.params["w"] = [2.0, 0.0]
        X = rng.normal(size=(6, 3, 2))
        v = X[:, 1] + X[:, 2] - X[:, 0]
        w = np.array([2.0, 0.0])
        expected = (np.eye(2) - np.outer(w, w)) @ v.T
        np.testing.assert_allclose(p.forward(X), expected.T, atol=1e-12)
        np.testing.assert_allclose(p.forward(X)[:, 0], v[:, 0] - 4 * v[:, 0])

    def test_unit_w_output_orthogonal(self, rng):
        w = rng.normal(size=7)
        w /= np.linalg.norm(w)
        p = AnalogyPredictor.zeros(7)
        p.params["w"] = w
        out = p.forward(rng.normal(size=(10, 3, 7)))
        assert np.max(np.abs(out @ w)) < 1e-9

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            AnalogyPredictor.zeros(3).forward(np.zeros((1, 3, 4)))


class TestParityAdversary:
    def make(self, u, c0):
        a = ParityAdversary.zeros()
        a.params.values[:] = [u, c0]
        return a

    def test_degenerate(self):
        a = self.make(0.0, 0.7)
        assert a.forward(np.array([0.1, 0.9])) == pytest.approx([sigmoid(0.7)] * 2)

    def test_values(self):
        assert self.make(1.0, 0.0).forward(np.array([0.5]))[0] == pytest.approx(0.622459, abs=1e-6)
        assert self.make(-4.0, 2.0).forward(np.array([0.5]))[0] == 0.5


class TestOddsAdversary:
    def test_c_zero_is_identity(self):
        yhat = np.array([0.1, 0.37, 0.5, 0.93])
        np.testing.assert_allclose(odds(0.0, 0.0, [1, 0, 0]).sharpen(yhat), yhat, rtol=1e-12)

    def test_saturation(self):
        assert odds(200.0, 0.0, [1, 0, 0]).sharpen(np.array([0.7]))[0] > 1 - 1e-12

    def test_closed_form(self):
        # with c = 1: s = p^2 / (p^2 + (1-p)^2)
        s_exact = 0.49 / (0.49 + 0.09)
        a = odds(1.0, 0.0, [1.0, 1.0, 0.0])
        assert a.sharpen(np.array([0.7]))[0] == pytest.approx(s_exact, rel=1e-12)
        assert a.logits(np.array([0.7]), np.array([1.0]))[0] == pytest.approx(2 * s_exact, rel=1e-12)

    def test_label_bias_term(self):
        a = odds(0.5, 0.1, [0.2, -0.3, 0.4], label_bias=1.5)
        s = a.sharpen(np.array([0.6, 0.6]))
        out = a.logits(np.array([0.6, 0.6]), np.array([0.0, 1.0]))
        assert out[1] - out[0] == pytest.approx(-0.3 * s[1] - 0.4 * s[0] + 1.5)
        assert odds(0.5, 0.1, [0.2, -0.3, 0.4]).label_bias == 0.0

    def test_monotone_in_yhat(self):
        yhat = np.linspace(0.01, 0.99, 50)
        s = odds(0.8, 0.0, [1, 0, 0]).sharpen(yhat)
        assert np.all(np.diff(s) > 0)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            odds(0.0, 0.0, [1, 0, 0]).sharpen(np.array([1.0]))


class TestEmbeddingAdversary:
    def test_values(self):
        a = EmbeddingAdversary.zeros(2)
        assert a.forward(np.array([3.0, 4.0])) == 0.0
        a.params["w2"] = [1.0, 2.0]
        assert a.forward(np.array([3.0, 4.0])) == 11.0
        a.params["w2"] = [1.0, 0.0]
        assert a.forward(np.array([0.0, 5.0])) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            EmbeddingAdversary.zeros(3).forward(np.ones(2))


class TestLoss:
    def test_bce(self):
        assert loss(LossKind.BINARY_CROSS_ENTROPY, 0.5, 1) == pytest.approx(math.log(2))
        assert loss(LossKind.BINARY_CROSS_ENTROPY, 0.9, 0) == pytest.approx(2.302585, abs=1e-6)

    def test_squared(self):
        x = np.array([1.0, -2.0, 3.0])
        assert loss(LossKind.SQUARED_ERROR, x, x) == 0.0
        assert loss(LossKind.SQUARED_ERROR, x, np.zeros(3)) == 14.0

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.2])
    def test_bce_domain(self, p):
        with pytest.raises(ValueError):
            loss(LossKind.BINARY_CROSS_ENTROPY, p, 1)

    def test_bce_target_domain(self):
        with pytest.raises(ValueError):
            loss(LossKind.BINARY_CROSS_ENTROPY, 0.4, 0.5)

    def test_base_rate_adversary_attains_entropy(self, rng):
        z = (rng.uniform(size=500) < 0.3).astype(float)
        rate = z.mean()
        a = ParityAdversary.zeros()
        a.params.values[:] = [0.0, logit(rate)]
        value, _, _ = a.loss_grad(rng.uniform(0.05, 0.95, 500), None, z)
        assert value == pytest.approx(empirical_entropy(z).h_z, abs=1e-6)


class TestModelGradients:
    def test_empty_batch(self):
        p = logistic([0.3, 0.1], 0.0)
        g = model_gradients(p, np.zeros((0, 2)), np.zeros(0), np.zeros(0), ParityAdversary.zeros())
        np.testing.assert_array_equal(g.grad_p, 0.0)
        np.testing.assert_array_equal(g.grad_a_w, 0.0)
        np.testing.assert_array_equal(g.grad_a_u, 0.0)
        assert g.adversary_batch == 0

    def test_no_adversary(self, rng):
        p = logistic([0.3, 0.1], 0.2)
        X = rng.normal(size=(5, 2))
        g = model_gradients(p, X, np.ones(5), np.zeros(5))
        np.testing.assert_array_equal(g.grad_a_w, 0.0)
        assert g.loss_a is None

    def test_mask_restricts_adversary(self, rng):
        p = logistic([0.3, -0.7], 0.1)
        X, y, z = rng.normal(size=(9, 2)), (np.arange(9) % 2).astype(float), rng.integers(0, 2, 9).astype(float)
        adv = ParityAdversary.zeros()
        adv.params.values[:] = [1.3, -0.2]
        mask = y == 1
        full = model_gradients(p, X, y, z, adv, mask)
        sub = model_gradients(p, X[mask], y[mask], z[mask], adv)
        np.testing.assert_allclose(full.grad_a_w, sub.grad_a_w)
        np.testing.assert_allclose(full.grad_a_u, sub.grad_a_u)
        assert full.adversary_batch == mask.sum()

    def test_non_finite_input(self):
        p = logistic([0.3], 0.0)
        with pytest.raises(DivergenceError):
            model_gradients(p, np.array([[np.nan]]), np.ones(1), np.ones(1), ParityAdversary.zeros())

    def test_batch_mean_invariance(self, rng):
        p = logistic([0.4, -0.2], 0.1)
        X, y = rng.normal(size=(7, 2)), rng.integers(0, 2, 7).astype(float)
        _, g1 = p.loss_grad(X, y)
        _, g2 = p.loss_grad(np.vstack([X, X]), np.concatenate([y, y]))
        np.testing.assert_allclose(g1, g2)


@pytest.mark.parametrize("name", sorted(PAIRINGS))
def test_finite_differences(name):
    (result,) = run_gradcheck(name, seed=3, trials=20)
    assert result.worst < 1e-4


def test_tampered_gradient_is_caught(rng):
    p = logistic(rng.normal(size=4), 0.3)
    X, y = rng.normal(size=(10, 4)), rng.integers(0, 2, 10).astype(float)
    _, grad = p.loss_grad(X, y)
    err = finite_diff_check(lambda pv: LogisticPredictor(pv).loss_grad(X, y)[0], 2 * grad, p.params)
    assert err > 0.3
