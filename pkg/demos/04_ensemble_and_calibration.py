"""What the assembly stage selects, and what calibration does to the output.

Part one trains on a dataset whose label is spread thinly over all eight
property groups. Only models above the Tukey fence of the whole pool are
kept, so the ensemble can end up drawing on a single group; the member table
shows which models survived.

Part two fits a small regression ensemble. Calibration inverts the line
pred = a * true + b fitted on out-of-fold predictions. Correlation is
untouched, but when the members are weak the slope a is small and dividing
by it stretches the output, which shows up as a worse r_score. Both versions
are always reported; ``train --no-calibration`` skips the step.
"""

from aaspectra.aaindex import load_aaindex
from aaspectra.propgroups import build_descriptors
from aaspectra.synthetic import composition_regression, split_signal_classification
from aaspectra.workflow import TrainConfig, train_ensemble

table = build_descriptors(load_aaindex())

ds = split_signal_classification(table)
rep = train_ensemble(ds, table, TrainConfig(seed=0, max_models=60, primary_metric="accuracy")).report
best = {}
for row in rep["per_model_cv_scores"]:
    if "cv" in row:
        best[row["group_id"]] = max(best.get(row["group_id"], 0), row["cv"]["accuracy"])
print("best CV accuracy per group: " + ", ".join(f"{g} {v:.2f}" for g, v in best.items()))
print("selected members, held-out accuracy:")
for m in rep["member_test_metrics"]:
    print(f"  {m['group_id']} w={m['weight']:.2f}  {m['test_metrics']['accuracy']:.3f}  {m['model'][:48]}")
print(f"  weighted ensemble        {rep['test_metrics']['accuracy']:.3f}")

ds = composition_regression(n=120)
rep = train_ensemble(ds, table, TrainConfig(seed=0, max_models=24)).report
cal = rep["calibration"]
print(f"\nout-of-fold line: pred = {cal['slope']:.3f} * true + {cal['intercept']:.3f}")
for stage in ("pre_calibration", "post_calibration"):
    m = rep["test_metrics"][stage]
    print(f"  {stage:17s} pearson {m['pearson']:.3f}  r_score {m['r_score']:.3f}")
