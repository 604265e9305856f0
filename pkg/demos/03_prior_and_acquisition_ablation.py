"""Ablation grid: prior construction x acquisition strategy on one task.

Crosses the three prior modes (uniform, diagonal, consensus-blended) with the
three acquisition strategies (random, committee uncertainty, expected
information gain) and prints cumulative regret at the budget for each cell.
Deterministic strategies run once; stochastic ones average five seeds.
"""

import numpy as np

from amselect import (
    AcquisitionMethod,
    PriorConfig,
    RunConfig,
    SyntheticSpec,
    confusions_from_accuracies,
    generate_synthetic,
    run_selection,
)

accuracies = np.array([0.74, 0.70, 0.68, 0.66, 0.63, 0.60, 0.58, 0.55])
spec = SyntheticSpec(
    num_models=8,
    num_items=1200,
    num_classes=4,
    true_confusions=confusions_from_accuracies(accuracies, 4),
    class_prevalence=np.full(4, 0.25),
    sharpness=12.0,
    seed=19,
)
task = generate_synthetic(spec)

BUDGET, GRID = 50, 513


def final_cum_regret(method_kind: str, prior_mode: str) -> float:
    seeds = (0,) if method_kind in ("eig", "uncertainty") else (0, 1, 2, 3, 4)
    cfg = RunConfig(
        method=AcquisitionMethod(method_kind),
        selector="pbest",
        budget=BUDGET,
        prior=PriorConfig(mode=prior_mode),
        grid_size=GRID,
        seeds=seeds,
    )
    finals = [run_selection(task, cfg, seed=s).cumulative_regret[-1] for s in seeds]
    return float(np.mean(finals))


print(f"cumulative regret at step {BUDGET} (accuracy points; lower is better)")
print(f"{'prior':>12} | {'random':>8} {'uncertainty':>12} {'info-gain':>10}")
print("-" * 48)
for prior_mode in ("uniform", "diagonal", "consensus"):
    row = [final_cum_regret(kind, prior_mode)
           for kind in ("random", "uncertainty", "eig")]
    print(f"{prior_mode:>12} | {row[0]:8.1f} {row[1]:12.1f} {row[2]:10.1f}")
print()
print("uniform and diagonal priors are identical across models, so every model")
print("starts equally plausible and the partial updates separate them only slowly;")
print("the consensus blend ranks the pool well before the first label arrives.")
print("(with 2 classes the uniform and diagonal priors coincide exactly.)")
