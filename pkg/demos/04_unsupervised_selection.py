"""Zero-label model selection from the consensus-informed priors alone.

The pooled predictions of all candidates act as a noisy committee: blending
each model's agreement with the committee into its prior often ranks the
pool well before a single label is collected.
"""

import numpy as np

from amselect import (
    PriorConfig,
    SyntheticSpec,
    confusions_from_accuracies,
    generate_synthetic,
    run_unsupervised,
    true_best,
    unsupervised_pbest,
)

rng = np.random.default_rng(5)
accuracies = np.sort(rng.uniform(0.5, 0.88, size=12))[::-1]
spec = SyntheticSpec(
    num_models=12,
    num_items=2000,
    num_classes=6,
    true_confusions=confusions_from_accuracies(accuracies, 6),
    class_prevalence=np.full(6, 1.0 / 6.0),
    sharpness=15.0,
    seed=23,
)
task = generate_synthetic(spec)
best, empirical = true_best(task)

pb = unsupervised_pbest(task, PriorConfig(), grid_size=1025)
choice = run_unsupervised(task, PriorConfig(), grid_size=1025)

order = np.argsort(pb.probs)[::-1]
print("rank   model       P(best)   true accuracy")
for rank, k in enumerate(order, start=1):
    marker = " <- chosen" if k == choice else ""
    print(f"{rank:4d}   {task.model_ids[k]}   {pb.probs[k]:7.3f}   {empirical[k]:12.1%}{marker}")
print()
gap = (empirical[best] - empirical[choice]) * 100.0
print(f"regret of the zero-label choice: {gap:.2f} accuracy points")
