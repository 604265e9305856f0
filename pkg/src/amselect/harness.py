"""Simulation harness: selection loops, regret accounting, and reports.

A run replays the label-acquisition loop against a task whose oracle labels
are known: at each step the selector names its current best model, regret is
recorded against the true best, the acquisition method picks an item, and
the revealed label updates the beliefs. Multi-seed aggregation produces
regret curves, success rates, and CSV/JSON reports.
"""

from __future__ import annotations

import dataclasses
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .acquisition import AcquisitionMethod, ScoringStats, select_next
from .beliefs import (
    DEFAULT_ETA,
    BeliefState,
    PriorConfig,
    apply_label,
    build_prior,
    consensus,
    empirical_confusions,
)
from .benchmark import BenchmarkTask
from .pbest import DEFAULT_GRID_SIZE, PBest, StepMarginals, compute_pbest, select_model

__all__ = [
    "RunConfig",
    "SelectionRun",
    "RunSummary",
    "UnsupervisedChoice",
    "run_config_from_json",
    "run_config_to_json",
    "true_best",
    "regret_at",
    "run_selection",
    "unsupervised_pbest",
    "run_unsupervised",
    "aggregate",
    "export_report",
]

SELECTORS = ("pbest", "empirical_risk")

DEFAULT_SEEDS = (0, 1, 2, 3, 4)


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a simulated selection run except the seed."""

    method: AcquisitionMethod = field(default_factory=AcquisitionMethod)
    selector: str = "pbest"
    budget: int = 100
    prior: PriorConfig = field(default_factory=PriorConfig)
    grid_size: int = DEFAULT_GRID_SIZE
    seeds: tuple = DEFAULT_SEEDS
    freeze_marginal: bool = False
    eta: float = DEFAULT_ETA
    subsample: int | None = None

    def __post_init__(self):
        if self.selector not in SELECTORS:
            raise ValueError(f"selector must be one of {SELECTORS}, got {self.selector!r}")
        if self.budget < 1:
            raise ValueError("budget must be at least 1")
        if self.grid_size < 3:
            raise ValueError("grid_size must be at least 3")
        if not self.eta > 0.0:
            raise ValueError("eta must be positive")
        if self.subsample is not None and self.subsample < 1:
            raise ValueError("subsample must be positive when set")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ValueError("need at least one seed")


def run_config_from_json(doc) -> RunConfig:
    """Build a config from a JSON document (or parsed dict) mirroring the fields."""
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    doc = dict(doc)
    method = doc.pop("method", "eig")
    if isinstance(method, str):
        method = AcquisitionMethod(kind=method)
    elif isinstance(method, dict):
        method = AcquisitionMethod(**method)
    prior = doc.pop("prior", None)
    if prior is None:
        prior = PriorConfig()
    elif isinstance(prior, dict):
        prior = PriorConfig(**prior)
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown run config fields: {sorted(unknown)}")
    return RunConfig(method=method, prior=prior, **doc)


def run_config_to_json(config: RunConfig) -> dict:
    return {
        "method": {"kind": config.method.kind, "rng_seed": config.method.rng_seed},
        "selector": config.selector,
        "budget": config.budget,
        "prior": {
            "alpha": config.prior.alpha,
            "temperature": config.prior.temperature,
            "mode": config.prior.mode,
        },
        "grid_size": config.grid_size,
        "seeds": list(config.seeds),
        "freeze_marginal": config.freeze_marginal,
        "eta": config.eta,
        "subsample": config.subsample,
    }


@dataclass
class SelectionRun:
    """Step-indexed record of one simulated run.

    ``pbest_trace`` holds the best-model distribution per step for the pbest
    selector, or the labeled-set accuracy vector for the empirical-risk
    selector. Regret is in accuracy percentage points.
    """

    seed: int
    queried_items: np.ndarray
    chosen_models: np.ndarray
    regret: np.ndarray
    cumulative_regret: np.ndarray
    pbest_trace: np.ndarray
    wall_time_per_step: np.ndarray
    pbest_evaluations: np.ndarray


def true_best(task: BenchmarkTask) -> tuple[int, np.ndarray]:
    """Index of the empirically best model over the full pool, plus all accuracies."""
    if task.oracle_labels is None:
        raise ValueError("task has no oracle labels")
    correct = task.hard == task.oracle_labels[None, :]
    accuracies = correct.mean(axis=1)
    return int(np.argmax(accuracies)), accuracies


def regret_at(task: BenchmarkTask, chosen: int, best: int) -> float:
    """Accuracy gap between the best and the chosen model, in percentage points."""
    _, accuracies = true_best(task)
    return float((accuracies[best] - accuracies[chosen]) * 100.0)


def _build_state(task: BenchmarkTask, prior: PriorConfig, eta: float) -> BeliefState:
    empirical = empirical_confusions(task, consensus(task))
    return build_prior(empirical, prior, eta=eta)


def _empirical_risk_choice(correct_counts: np.ndarray, n_labeled: int,
                           rng: np.random.Generator) -> tuple[int, np.ndarray]:
    if n_labeled == 0:
        accuracies = np.zeros(correct_counts.shape[0])
    else:
        accuracies = correct_counts / n_labeled
    leaders = np.nonzero(accuracies == accuracies.max())[0]
    chosen = int(leaders[0]) if leaders.size == 1 else int(rng.choice(leaders))
    return chosen, accuracies


def run_selection(task: BenchmarkTask, config: RunConfig, seed: int) -> SelectionRun:
    """Simulate one seeded run of the selection loop.

    Each step records the choice made from the beliefs *before* that step's
    label is applied. Acquisition randomness derives from the run seed, so a
    (task, config, seed) triple fully determines the run.
    """
    if task.oracle_labels is None:
        raise ValueError("simulation requires oracle labels")
    if config.budget > task.num_items:
        raise ValueError(
            f"budget {config.budget} exceeds pool size {task.num_items}"
        )

    rng = np.random.default_rng(seed)
    method = dataclasses.replace(config.method, rng_seed=int(seed))
    state = _build_state(task, config.prior, config.eta)
    best, accuracies = true_best(task)

    budget = config.budget
    num_models = task.num_models
    labeled = np.zeros(task.num_items, dtype=bool)
    correct_counts = np.zeros(num_models)

    queried = np.empty(budget, dtype=np.int64)
    chosen_models = np.empty(budget, dtype=np.int64)
    regret = np.empty(budget)
    trace = np.empty((budget, num_models))
    wall = np.empty(budget)
    eval_counts = np.empty(budget, dtype=np.int64)

    frozen = StepMarginals.from_state(task, state) if config.freeze_marginal else None

    for t in range(budget):
        t0 = time.perf_counter()
        stats = ScoringStats()
        marginals = frozen if frozen is not None else StepMarginals.from_state(task, state)

        if config.selector == "pbest":
            pb = compute_pbest(state, marginals.marginal, config.grid_size)
            chosen = select_model(pb)
            trace[t] = pb.probs
        else:
            chosen, trace[t] = _empirical_risk_choice(correct_counts, int(labeled.sum()), rng)

        chosen_models[t] = chosen
        regret[t] = (accuracies[best] - accuracies[chosen]) * 100.0

        item = select_next(state, task, labeled, method, marginals=marginals,
                           grid_size=config.grid_size, stats=stats,
                           subsample=config.subsample)
        label = int(task.oracle_labels[item])
        apply_label(state, task, item, label, scale=1.0)
        labeled[item] = True
        correct_counts += task.hard[:, item] == label

        queried[t] = item
        eval_counts[t] = stats.pbest_evaluations
        wall[t] = time.perf_counter() - t0

    return SelectionRun(
        seed=int(seed),
        queried_items=queried,
        chosen_models=chosen_models,
        regret=regret,
        cumulative_regret=np.cumsum(regret),
        pbest_trace=trace,
        wall_time_per_step=wall,
        pbest_evaluations=eval_counts,
    )


class UnsupervisedChoice(NamedTuple):
    model_index: int
    pbest: PBest


def unsupervised_pbest(task: BenchmarkTask, prior: PriorConfig | None = None,
                       grid_size: int = DEFAULT_GRID_SIZE,
                       eta: float = DEFAULT_ETA) -> PBest:
    """Best-model distribution from the consensus-informed priors alone."""
    state = _build_state(task, prior or PriorConfig(), eta)
    return compute_pbest(state, StepMarginals.from_state(task, state).marginal, grid_size)


def run_unsupervised(task: BenchmarkTask, prior: PriorConfig | None = None,
                     grid_size: int = DEFAULT_GRID_SIZE) -> int:
    """Zero-label model selection: argmax of the prior-only distribution."""
    return select_model(unsupervised_pbest(task, prior, grid_size))


@dataclass
class RunSummary:
    """Cross-seed aggregation of runs sharing one task and budget."""

    budget: int
    seeds: list
    mean_regret: np.ndarray
    std_regret: np.ndarray
    mean_cum_regret: np.ndarray
    std_cum_regret: np.ndarray
    success_rate: np.ndarray
    near_optimal_rate: np.ndarray
    final_cum_regret: list
    total_wall_time: float
    total_pbest_evaluations: int
    best_model: int
    best_accuracy: float
    num_models: int
    num_items: int
    num_classes: int
    config: dict | None = None


def aggregate(runs, task: BenchmarkTask, config: RunConfig | None = None,
              near_optimal_points: float = 1.0) -> RunSummary:
    """Per-step mean/std of (cumulative) regret plus success-rate curves.

    Success counts a seed whose chosen model matches the best accuracy
    exactly; near-optimal allows a gap up to ``near_optimal_points``
    percentage points.
    """
    runs = list(runs)
    if not runs:
        raise ValueError("no runs to aggregate")
    budget = runs[0].regret.shape[0]
    for run in runs:
        if run.regret.shape[0] != budget:
            raise ValueError("runs have mismatched budgets")

    best, accuracies = true_best(task)
    regrets = np.stack([run.regret for run in runs])
    cums = np.stack([run.cumulative_regret for run in runs])
    chosen = np.stack([run.chosen_models for run in runs])
    gap = (accuracies[best] - accuracies[chosen]) * 100.0

    return RunSummary(
        budget=budget,
        seeds=[run.seed for run in runs],
        mean_regret=regrets.mean(axis=0),
        std_regret=regrets.std(axis=0),
        mean_cum_regret=cums.mean(axis=0),
        std_cum_regret=cums.std(axis=0),
        success_rate=(gap == 0.0).mean(axis=0),
        near_optimal_rate=(gap <= near_optimal_points).mean(axis=0),
        final_cum_regret=[float(run.cumulative_regret[-1]) for run in runs],
        total_wall_time=float(sum(run.wall_time_per_step.sum() for run in runs)),
        total_pbest_evaluations=int(sum(run.pbest_evaluations.sum() for run in runs)),
        best_model=best,
        best_accuracy=float(accuracies[best]),
        num_models=task.num_models,
        num_items=task.num_items,
        num_classes=task.num_classes,
        config=run_config_to_json(config) if config is not None else None,
    )


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def export_report(summary: RunSummary, out_dir, name: str = "report") -> tuple[Path, Path]:
    """Write the per-step CSV and the JSON summary; byte-stable given equal input.

    Regret columns are in accuracy percentage points; steps are 1-based.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    lines = ["step,mean_regret,std_regret,mean_cum_regret,std_cum_regret,"
             "success_rate,near_optimal_rate"]
    for t in range(summary.budget):
        lines.append(",".join([
            str(t + 1),
            repr(float(summary.mean_regret[t])),
            repr(float(summary.std_regret[t])),
            repr(float(summary.mean_cum_regret[t])),
            repr(float(summary.std_cum_regret[t])),
            repr(float(summary.success_rate[t])),
            repr(float(summary.near_optimal_rate[t])),
        ]))
    csv_path = out_dir / f"{name}.csv"
    _atomic_write(csv_path, "\n".join(lines) + "\n")

    doc = {
        "units": "accuracy percentage points",
        "budget": summary.budget,
        "seeds": summary.seeds,
        "num_runs": len(summary.seeds),
        "config": summary.config,
        "task": {
            "num_models": summary.num_models,
            "num_items": summary.num_items,
            "num_classes": summary.num_classes,
            "best_model": summary.best_model,
            "best_accuracy": summary.best_accuracy,
        },
        "final": {
            "mean_cum_regret": float(summary.mean_cum_regret[-1]),
            "std_cum_regret": float(summary.std_cum_regret[-1]),
            "mean_regret": float(summary.mean_regret[-1]),
            "success_rate": float(summary.success_rate[-1]),
            "near_optimal_rate": float(summary.near_optimal_rate[-1]),
        },
        "per_run_final_cum_regret": summary.final_cum_regret,
        "timing": {
            "total_wall_time": summary.total_wall_time,
            "total_pbest_evaluations": summary.total_pbest_evaluations,
        },
    }
    json_path = out_dir / f"{name}.json"
    _atomic_write(json_path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path
