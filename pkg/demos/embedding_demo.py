"""Debiasing an analogy-completion transform on a planted vocabulary.

The synthetic vocabulary stores gender on one coordinate.  A linear
transform ``w`` trained on analogies is compared with one trained against
an adversary that tries to read the gender component off the prediction.
"""

from advdebias.data import analogy_examples, complete_analogy, compute_bias_subspace, planted_gender_vocabulary
from advdebias.numerics import SeededRng
from advdebias.trainer import embedding_config, evaluate, fit

vocab = planted_gender_vocabulary(seed=0)
sub = compute_bias_subspace(vocab.table, vocab.pairs, k=1)
examples = analogy_examples(vocab.table, vocab.analogies, sub)
perm = SeededRng(0).spawn(7).permutation(len(examples))
n_test = len(examples) // 5
train, test = examples[perm[n_test:]], examples[perm[:n_test]]
print(f"{len(vocab.table)} words, {len(train)} training analogies; "
      f"gender direction loads {abs(sub.g[0]):.3f} on the planted axis")

models = {}
for debias in (False, True):
    models[debias], _ = fit(embedding_config(debias=debias), train)
    stats = evaluate(models[debias], test, bias_direction=sub.g)
    print(f"{'debiased' if debias else 'plain   '}  w.g = {stats['w_dot_g']:+.3f}  |w| = {stats['w_norm']:.3f}")

for a, b, c in [("he", "she", "doctor"), ("man", "woman", "king"), ("paris", "france", "tokyo")]:
    print(f"\n{a} : {b} :: {c} : ?")
    for label, transform in (("raw", None), ("plain", models[False].predictor), ("debiased", models[True].predictor)):
        top = complete_analogy(vocab.table, a, b, c, transform=transform, top_n=3)
        print(f"  {label:9}" + "  ".join(f"{w} ({s:.2f})" for w, s in top))
