"""Walk through the two-variable toy problem.

The label depends on a fair signal ``u`` and on ``r``, a noisy copy of the
protected bit.  A plain logistic model leans on both; the debiased one
learns to push ``r`` the other way so the prediction stops revealing the
protected bit.

Run with ``python demos/toy_demo.py``.
"""

from advdebias.data import ToyConfig, generate_toy
from advdebias.fairness import demographic_parity_gap
from advdebias.trainer import adversary_holdout_loss, evaluate, fit, toy_config

train = generate_toy(ToyConfig(n=10_000, seed=0))
test = generate_toy(ToyConfig(n=10_000, seed=1))

for debias in (False, True):
    cfg = toy_config(debias=debias)
    models, log = fit(cfg, train)
    w_r, w_u = models.predictor.w1
    yhat = models.predictor.forward(test.X)
    rep = evaluate(models, test)
    print(f"{'debiased' if debias else 'plain   '}  yhat = sigmoid({w_u:.2f} u {w_r:+.2f} r {models.predictor.b:+.2f})")
    print(f"          accuracy {rep.accuracy:.3f}, parity gap {demographic_parity_gap(yhat, test.z):.4f}, "
          f"{log.wall_time_s:.1f}s")
    if debias:
        # an adversary that can do no better than chance sits at ln 2 nats
        print(f"          adversary held-out loss {adversary_holdout_loss(models, test, cfg.mode):.4f} (ln 2 = 0.6931)")
