"""Set-valued prediction in one sitting.

Generates a four-class benchmark, predicts label sets for a mixed test
batch, and walks through how to read the three possible outcomes:

* empty set        -> the point looks like none of the classes (outlier)
* singleton        -> confident classification
* multiple labels  -> the point is compatible with several classes

Run:  python3 demos/01_prediction_sets.py
"""

import numpy as np

from confset import evaluate_sets, generate, multi_class_config, predict

ALPHA = 0.05

config = multi_class_config(p=100, n_k=300, rho=0.5, m=400, run_seed=20)
train, batch = generate(config)
print(
    f"training: {train.n} rows, {train.n_classes} classes, "
    f"{train.n_features} features"
)
n_out = int(np.sum(batch.truth == train.n_classes + 1))
print(f"test batch: {batch.m} rows, of which {n_out} are true outliers\n")

pvals, sets = predict(train, batch, alpha=ALPHA)

print(f"per-class acceptance thresholds at alpha={ALPHA}:")
for class_id, cut in enumerate(pvals.thresholds, start=1):
    print(f"  class {class_id}: accept when adjusted p > {cut:.4f}")

sizes = sets.sizes
print(f"\nset sizes: {int((sizes == 0).sum())} empty, "
      f"{int((sizes == 1).sum())} singletons, "
      f"{int((sizes > 1).sum())} ambiguous (mean size {sizes.mean():.2f})")

print("\na few test points, with the p-values behind their sets:")
shown = {0: "first inlier", batch.m - 1: "last row (a true outlier)"}
# also show one ambiguous point if there is one
ambiguous = np.flatnonzero(sizes > 1)
if ambiguous.size:
    shown[int(ambiguous[0])] = "an ambiguous point"
for i, label in sorted(shown.items()):
    labels = sorted(int(c) for c in sets.sets[i])
    adj = ", ".join(f"{v:.3f}" for v in pvals.adjusted[i])
    truth = batch.truth[i]
    name = "outlier" if truth == train.n_classes + 1 else f"class {truth}"
    print(f"  row {i:3d} ({label}; truly {name})")
    print(f"    adjusted p per class: [{adj}]")
    print(f"    prediction set: {set(labels) if labels else '{} -> flagged outlier'}")

report = evaluate_sets(sets, batch.truth)
print("\nscored against the known truth:")
print(f"  coverage  {report.coverage:.3f}   (inliers whose set holds their class)")
print(f"  power     {report.power:.3f}   (outliers receiving the empty set)")
print(f"  fdr       {report.fdr:.3f}   (outlier calls that hit inliers)")
print(f"  ambiguity {report.ambiguity:.3f}   (mean nonempty set size)")
