"""Equalized odds on the UCI Adult census data.

Expects ``data/adult/adult.data`` and ``data/adult/adult.test`` relative to
the repository root.  Prints the grouped confusion matrices for a plain and
a debiased classifier, then the per-group error rates with their p-values.
"""

import sys
from pathlib import Path

from advdebias.data import AdultCodec, encode_features, load_adult
from advdebias.fairness import confusion_by_group, format_confusion_table
from advdebias.trainer import adult_config, evaluate, fit

root = Path(__file__).resolve().parents[1] / "data" / "adult"
try:
    train_recs, test_recs = load_adult(root / "adult.data", root / "adult.test")
except FileNotFoundError as exc:
    sys.exit(f"missing data file: {exc.filename}")

codec = AdultCodec().fit(train_recs)
train, test = encode_features(train_recs, codec), encode_features(test_recs, codec)
print(f"{len(train)} training rows, {len(test)} test rows, {len(codec.feature_names())} features")

confusions, reports = [], []
for debias in (False, True):
    models, _ = fit(adult_config(debias=debias), train)
    confusions.append(confusion_by_group(models.predictor.forward(test.X), test.y, test.z))
    reports.append(evaluate(models, test))

print(format_confusion_table(*confusions))
for name, rep in zip(("plain", "debiased"), reports):
    f, m = rep.groups[0], rep.groups[1]
    print(f"{name:9} accuracy {rep.accuracy:.4f}  FPR {f.fpr:.3f}/{m.fpr:.3f} (p={rep.p_value_y0:.3f})  "
          f"FNR {f.fnr:.3f}/{m.fnr:.3f} (p={rep.p_value_y1:.3f})")
