"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they complete. The data-dependent reproduction at the bottom is
opt-in: it runs only when AMSEL_BENCHMARK_DIR points at converted benchmark
manifests (see README).
"""

import hashlib
import os
import time
from pathlib import Path

import numpy as np
import pytest

from amselect.acquisition import (
    AcquisitionMethod,
    ScoringStats,
    eig_score,
    eig_scores_memoized,
)
from amselect.beliefs import (
    BeliefState,
    PriorConfig,
    build_prior,
    consensus,
    empirical_confusions,
    mean_confusions,
)
from amselect.benchmark import (
    SyntheticSpec,
    confusions_from_accuracies,
    generate_synthetic,
    load_benchmark,
    task_from_scores,
)
from amselect.harness import RunConfig, run_selection, true_best
from amselect.pbest import (
    BetaMixture,
    StepMarginals,
    class_marginal,
    compute_pbest,
    item_class_posterior,
    pbest_from_mixture,
    pbest_monte_carlo,
)


def report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def make_task(rng, h, d, c, labels=True):
    scores = rng.uniform(0.05, 1.0, size=(h, d, c))
    return task_from_scores(
        [f"m{k}" for k in range(h)], [f"x{i}" for i in range(d)], c, scores,
        oracle_labels=rng.integers(0, c, size=d) if labels else None)


def consensus_state(task, eta=0.01):
    return build_prior(empirical_confusions(task, consensus(task)),
                       PriorConfig(), eta=eta)


class TestQuadratureAgainstMonteCarlo:
    def test_twenty_random_belief_states(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(42)
        worst = 0.0
        for trial in range(20):
            h = int(rng.choice([2, 3, 5]))
            c = int(rng.choice([2, 3, 4]))
            mix = BetaMixture(
                a=rng.uniform(0.5, 50.0, size=(h, c)),
                b=rng.uniform(0.5, 50.0, size=(h, c)),
                weights=rng.dirichlet(np.ones(c)),
            )
            quad = pbest_from_mixture(mix, 2049).probs
            mc = pbest_monte_carlo(mix, n_samples=500_000, seed=trial)
            tv = 0.5 * float(np.abs(quad - mc).sum())
            worst = max(worst, tv)
            assert tv <= 0.01, f"trial {trial}: TV {tv:.4f} > 0.01"
        elapsed = time.perf_counter() - t0
        report("pbest-vs-monte-carlo",
               worst <= 0.01 and elapsed < 120.0,
               f"20 states, worst TV {worst:.5f} (limit 0.01), {elapsed:.1f}s (limit 120s)")


class TestClosedForm:
    def test_beta21_vs_beta11(self):
        mix = BetaMixture(a=np.array([[2.0], [1.0]]), b=np.array([[1.0], [1.0]]),
                          weights=np.array([1.0]))
        probs = pbest_from_mixture(mix, 2049).probs
        err = float(np.abs(probs - np.array([2.0 / 3.0, 1.0 / 3.0])).max())
        report("closed-form-beta-integral", err <= 1e-3,
               f"probs {probs.round(6)} vs (2/3, 1/3), max err {err:.2e} (limit 1e-3)")


class TestSymmetrySuite:
    def test_identical_models_uniform_pbest_and_zero_eig(self):
        rng = np.random.default_rng(7)
        row = rng.uniform(0.05, 1.0, size=(25, 3))
        task = task_from_scores(["a", "b", "c"], [f"x{i}" for i in range(25)], 3,
                                np.stack([row, row, row]))
        state = consensus_state(task)
        marginals = StepMarginals.from_state(task, state)
        pb = compute_pbest(state, marginals.marginal, 2049)
        pbest_dev = float(np.abs(pb.probs - 1.0 / 3.0).max())
        scores = eig_scores_memoized(state, task, marginals, np.arange(25), 1025)
        eig_dev = max(abs(s.score) for s in scores)
        report("symmetry-identical-models",
               pbest_dev <= 1e-6 and eig_dev <= 1e-6,
               f"pbest dev {pbest_dev:.2e}, max |EIG| {eig_dev:.2e} (limits 1e-6)")

    def test_model_permutation_equivariance(self):
        rng = np.random.default_rng(8)
        h, d, c = 4, 60, 3
        scores = rng.uniform(0.05, 1.0, size=(h, d, c))
        labels = rng.integers(0, c, size=d)
        perm = np.array([2, 0, 3, 1])

        task = task_from_scores([f"m{k}" for k in range(h)],
                                [f"x{i}" for i in range(d)], c, scores,
                                oracle_labels=labels)
        task_p = task_from_scores([f"m{k}" for k in perm],
                                  [f"x{i}" for i in range(d)], c, scores[perm],
                                  oracle_labels=labels)

        state, state_p = consensus_state(task), consensus_state(task_p)
        marg, marg_p = (StepMarginals.from_state(task, state),
                        StepMarginals.from_state(task_p, state_p))
        pb = compute_pbest(state, marg.marginal, 1025).probs
        pb_p = compute_pbest(state_p, marg_p.marginal, 1025).probs
        pbest_dev = float(np.abs(pb_p - pb[perm]).max())

        eig = np.array([s.score for s in
                        eig_scores_memoized(state, task, marg, np.arange(d), 513)])
        eig_p = np.array([s.score for s in
                          eig_scores_memoized(state_p, task_p, marg_p, np.arange(d), 513)])
        eig_dev = float(np.abs(eig - eig_p).max())

        cfg = RunConfig(method=AcquisitionMethod("eig"), selector="pbest",
                        budget=10, grid_size=513, seeds=(0,))
        run = run_selection(task, cfg, 0)
        run_p = run_selection(task_p, cfg, 0)
        queries_equal = np.array_equal(run.queried_items, run_p.queried_items)

        report("symmetry-model-permutation",
               pbest_dev <= 1e-9 and eig_dev <= 1e-9 and queries_equal,
               f"pbest dev {pbest_dev:.2e}, EIG dev {eig_dev:.2e}, "
               f"query sequences equal: {queries_equal}")


class TestBruteForceEquivalence:
    def test_naive_loop_oracles(self):
        rng = np.random.default_rng(9)
        task = make_task(rng, 3, 50, 4)
        state = BeliefState(rng.uniform(0.5, 50.0, size=(3, 4, 4)))
        m = mean_confusions(state)
        h, d, c = 3, 50, 4
        preds = task.predictions.astype(np.float64)

        summary = consensus(task)
        emp = np.zeros((h, c, c))
        for k in range(h):
            for i in range(d):
                for cp in range(c):
                    emp[k, summary.consensus_labels[i], cp] += preds[k, i, cp]
        emp_dev = float(np.abs(empirical_confusions(task, summary) - emp).max())

        marg_oracle = np.zeros(c)
        post_oracle = np.zeros((d, c))
        for i in range(d):
            for k in range(h):
                for cp in range(c):
                    for cc in range(c):
                        post_oracle[i, cc] += preds[k, i, cp] * m[k, cp, cc]
        post_oracle /= h
        marg_oracle = post_oracle.mean(axis=0)
        marg_dev = float(np.abs(class_marginal(task, state).pi - marg_oracle).max())
        post_dev = max(
            float(np.abs(item_class_posterior(task, state, i) - post_oracle[i]).max())
            for i in range(d))

        counts = np.zeros(h)
        for k in range(h):
            for i in range(d):
                counts[k] += int(np.argmax(preds[k, i]) == task.oracle_labels[i])
        best_oracle = int(np.argmax(counts))
        best, acc = true_best(task)
        best_ok = best == best_oracle and np.allclose(acc, counts / d, atol=1e-6)

        ok = (emp_dev <= 1e-6 and marg_dev <= 1e-6 and post_dev <= 1e-6 and best_ok)
        report("brute-force-equivalence", ok,
               f"empirical {emp_dev:.2e}, marginal {marg_dev:.2e}, "
               f"posterior {post_dev:.2e} (limits 1e-6), true-best match: {best_ok}")


class TestStateHygiene:
    def test_scoring_never_mutates_beliefs(self):
        rng = np.random.default_rng(10)
        task = make_task(rng, 3, 40, 3)
        state = consensus_state(task)
        marginals = StepMarginals.from_state(task, state)

        digest = hashlib.sha256(state.theta.tobytes()).hexdigest()
        memoized = eig_scores_memoized(state, task, marginals, np.arange(40), 1025)
        plain = [eig_score(state, task, marginals, i, 1025) for i in range(40)]
        digest_after = hashlib.sha256(state.theta.tobytes()).hexdigest()

        max_diff = max(abs(s.score - p) for s, p in zip(memoized, plain))
        ok = digest == digest_after and max_diff <= 1e-12
        report("state-hygiene", ok,
               f"theta hash unchanged: {digest == digest_after}, "
               f"memoized-vs-plain max diff {max_diff:.2e} (limit 1e-12)")


def _convergence_task(c: int, j: int):
    """One benchmark pool: 10 models, 2000 items, best-vs-second gap >= 3 points."""
    rng = np.random.default_rng(500 + j)
    best = 0.70 + 0.02 * (j % 8)
    gap = 0.045 + 0.01 * (j % 4)
    accs = np.empty(10)
    accs[0] = best
    accs[1:] = best - gap - 0.015 * np.arange(9)
    accs = accs[rng.permutation(10)]
    for attempt in range(5):
        spec = SyntheticSpec(10, 2000, c, confusions_from_accuracies(accs, c),
                             np.full(c, 1.0 / c), sharpness=20.0,
                             seed=7000 + j * 10 + attempt)
        task = generate_synthetic(spec)
        _, emp = true_best(task)
        top2 = np.sort(emp)[-2:]
        if (top2[1] - top2[0]) * 100.0 >= 3.0:
            return task
    raise RuntimeError(f"could not realize a >=3 point gap for task {j}")


class TestSyntheticConvergence:
    def test_twenty_generated_tasks(self):
        # The eig+pbest configuration is deterministic (zero seed variance,
        # asserted below in the determinism criterion), so its five-seed mean
        # equals a single run; the stochastic random-sampling baseline uses
        # all five seeds. Grid 257 keeps the suite inside the runtime budget;
        # quadrature error at that size is orders below the decision margins.
        t0 = time.perf_counter()
        eig_cfg = RunConfig(method=AcquisitionMethod("eig"), selector="pbest",
                            budget=100, grid_size=257, seeds=(0,))
        rand_cfg = RunConfig(method=AcquisitionMethod("random"),
                             selector="empirical_risk", budget=100,
                             grid_size=257, seeds=tuple(range(5)))
        near_optimal = 0
        beats_random = 0
        class_counts = [2] * 7 + [5] * 7 + [20] * 6
        for j, c in enumerate(class_counts):
            task = _convergence_task(c, j)
            best, accs = true_best(task)
            eig_run = run_selection(task, eig_cfg, seed=0)
            final_gap = (accs[best] - accs[eig_run.chosen_models[-1]]) * 100.0
            if final_gap <= 1.0:
                near_optimal += 1
            random_final = np.mean([
                run_selection(task, rand_cfg, seed=s).cumulative_regret[-1]
                for s in range(5)])
            if eig_run.cumulative_regret[-1] < random_final:
                beats_random += 1
        elapsed = time.perf_counter() - t0
        ok = (near_optimal >= 16 and beats_random >= 14 and elapsed < 600.0)
        report("synthetic-convergence", ok,
               f"near-optimal by step 100 on {near_optimal}/20 (need >=16), "
               f"beats random baseline on {beats_random}/20 (need >=14), "
               f"{elapsed:.0f}s (limit 600s)")


class TestDeterminism:
    def test_eig_pbest_runs_have_zero_seed_variance(self):
        rng = np.random.default_rng(11)
        task = make_task(rng, 4, 80, 3)
        cfg = RunConfig(method=AcquisitionMethod("eig"), selector="pbest",
                        budget=15, grid_size=513, seeds=(0, 1, 2))
        runs = [run_selection(task, cfg, seed) for seed in (0, 1, 2)]
        same_queries = all(np.array_equal(runs[0].queried_items, r.queried_items)
                           for r in runs[1:])
        same_choices = all(np.array_equal(runs[0].chosen_models, r.chosen_models)
                           for r in runs[1:])
        regret_std = float(np.std([r.cumulative_regret[-1] for r in runs]))
        ok = same_queries and same_choices and regret_std == 0.0
        report("determinism", ok,
               f"identical queries: {same_queries}, identical choices: {same_choices}, "
               f"final cum-regret std {regret_std}")


BENCH_DIR = os.environ.get("AMSEL_BENCHMARK_DIR")


@pytest.mark.skipif(not BENCH_DIR, reason="AMSEL_BENCHMARK_DIR not set (opt-in data test)")
class TestPublishedBenchmarks:
    """Opt-in reproduction against converted public prediction sets.

    Expects ``$AMSEL_BENCHMARK_DIR/{qqp,cifar10-low}/manifest.json`` in this
    package's manifest format. Targets are cumulative regret at step 100 of
    4.8 (qqp) and 58.7 (cifar10-low), matched within 20 percent.
    """

    @pytest.mark.parametrize("name,target", [("qqp", 4.8), ("cifar10-low", 58.7)])
    def test_cumulative_regret_at_100(self, name, target):
        manifest = Path(BENCH_DIR) / name / "manifest.json"
        if not manifest.is_file():
            pytest.skip(f"{manifest} not present")
        task = load_benchmark(manifest)
        cfg = RunConfig(method=AcquisitionMethod("eig"), selector="pbest",
                        budget=100, grid_size=2049, seeds=(0,))
        run = run_selection(task, cfg, seed=0)
        final = float(run.cumulative_regret[-1])
        ok = abs(final - target) <= 0.2 * target
        report(f"published-{name}", ok,
               f"cumulative regret at 100 = {final:.1f}, target {target} +/- 20%")
