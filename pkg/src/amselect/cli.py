"""Command-line entry point: simulations, unsupervised selection, synthetic data,
validation, and the labeling service.

Exit codes: 0 success, 2 configuration/usage error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .acquisition import AcquisitionMethod
from .beliefs import DEFAULT_ETA, DEFAULT_ALPHA, DEFAULT_TEMPERATURE, PriorConfig
from .benchmark import (
    BenchmarkError,
    SyntheticSpec,
    confusions_from_accuracies,
    generate_synthetic,
    load_benchmark,
    save_benchmark,
    validate,
)
from .harness import (
    RunConfig,
    aggregate,
    export_report,
    run_selection,
    true_best,
    unsupervised_pbest,
)
from .pbest import DEFAULT_GRID_SIZE, select_model

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


class ConfigError(Exception):
    pass


def _add_prior_flags(parser):
    parser.add_argument("--prior", choices=["consensus", "diagonal", "uniform"],
                        default="consensus", help="prior construction mode")
    parser.add_argument("--alpha", type=float, default=DEFAULT_ALPHA,
                        help="consensus blend weight")
    parser.add_argument("--temp", type=float, default=DEFAULT_TEMPERATURE,
                        help="prior temperature (pseudo-count scale)")
    parser.add_argument("--grid", type=int, default=DEFAULT_GRID_SIZE,
                        help="quadrature grid size")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amselect",
        description="Active model selection over a pool of candidate classifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate selection runs against oracle labels")
    run.add_argument("--manifest", required=True, help="benchmark manifest (labels required)")
    run.add_argument("--method", choices=["eig", "random", "uncertainty"], default="eig")
    run.add_argument("--selector", choices=["pbest", "risk"], default="pbest")
    run.add_argument("--budget", type=int, default=100, help="labels per run")
    run.add_argument("--seeds", type=int, default=5, help="number of seeded runs (seeds 0..N-1)")
    run.add_argument("--seed-list", type=int, nargs="+", default=None,
                     help="explicit seeds (overrides --seeds)")
    _add_prior_flags(run)
    run.add_argument("--eta", type=float, default=DEFAULT_ETA, help="belief update rate")
    run.add_argument("--freeze-marginal", action="store_true",
                     help="compute the class marginal once at initialization")
    run.add_argument("--subsample", type=int, default=None,
                     help="cap on scored candidates per step (eig only)")
    run.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    run.add_argument("--out", required=True, help="report output directory")
    run.add_argument("--name", default="report", help="report file basename")

    unsup = sub.add_parser("unsupervised", help="rank models from consensus priors alone")
    unsup.add_argument("--manifest", required=True)
    _add_prior_flags(unsup)
    unsup.add_argument("--out", default=None, help="optional JSON output path")

    synth = sub.add_parser("synth", help="generate a synthetic labeled benchmark")
    synth.add_argument("--models", type=int, default=10)
    synth.add_argument("--items", type=int, default=2000)
    synth.add_argument("--classes", type=int, default=5)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--sharpness", type=float, default=50.0,
                       help="peakedness of emitted soft scores")
    synth.add_argument("--accuracy-profile", default=None,
                       help="JSON file: {\"accuracies\": [...], \"class_prevalence\"?, "
                            "\"off_diagonal\"?}")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--name", default="synthetic", help="benchmark basename")

    val = sub.add_parser("validate", help="report prediction-tensor diagnostics")
    val.add_argument("--manifest", required=True)

    serve = sub.add_parser("serve", help="run the labeling session service")
    serve.add_argument("--addr", default="127.0.0.1:8000", help="HOST:PORT to bind")
    serve.add_argument("--data", required=True, help="session persistence directory")
    serve.add_argument("--ui-dir", default=None, help="static UI bundle directory")

    return parser


def _run_one(args_tuple):
    manifest, config, seed = args_tuple
    task = load_benchmark(manifest)
    return run_selection(task, config, seed)


def cmd_run(args) -> int:
    if args.budget < 1:
        raise ConfigError("--budget must be at least 1")
    if args.seed_list is not None:
        seeds = tuple(args.seed_list)
    else:
        if args.seeds < 1:
            raise ConfigError("--seeds must be at least 1")
        seeds = tuple(range(args.seeds))
    selector = "empirical_risk" if args.selector == "risk" else args.selector
    try:
        config = RunConfig(
            method=AcquisitionMethod(kind=args.method),
            selector=selector,
            budget=args.budget,
            prior=PriorConfig(alpha=args.alpha, temperature=args.temp, mode=args.prior),
            grid_size=args.grid,
            seeds=seeds,
            freeze_marginal=args.freeze_marginal,
            eta=args.eta,
            subsample=args.subsample,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    task = load_benchmark(args.manifest)
    if task.oracle_labels is None:
        raise BenchmarkError("run requires a manifest with oracle labels")
    if config.budget > task.num_items:
        raise ConfigError(f"budget {config.budget} exceeds pool size {task.num_items}")

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            runs = list(pool.map(_run_one, [(args.manifest, config, s) for s in seeds]))
    else:
        runs = [run_selection(task, config, seed) for seed in seeds]

    summary = aggregate(runs, task, config=config)
    csv_path, json_path = export_report(summary, args.out, name=args.name)
    print(f"wrote {csv_path} and {json_path}")
    print(f"mean cumulative regret at step {config.budget}: "
          f"{summary.mean_cum_regret[-1]:.3f} points "
          f"(success rate {summary.success_rate[-1]:.2f})")
    return EXIT_OK


def cmd_unsupervised(args) -> int:
    task = load_benchmark(args.manifest)
    prior = PriorConfig(alpha=args.alpha, temperature=args.temp, mode=args.prior)
    pbest = unsupervised_pbest(task, prior, grid_size=args.grid)
    chosen = select_model(pbest)
    doc = {
        "chosen_model": task.model_ids[chosen],
        "chosen_index": chosen,
        "pbest": [float(v) for v in pbest.probs],
        "model_ids": list(task.model_ids),
    }
    if task.oracle_labels is not None:
        best, accuracies = true_best(task)
        doc["regret_at_0"] = float((accuracies[best] - accuracies[chosen]) * 100.0)
        doc["best_model"] = task.model_ids[best]
    print(task.model_ids[chosen])
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.models < 2 or args.items < 1 or args.classes < 2:
        raise ConfigError("need --models >= 2, --items >= 1, --classes >= 2")
    prevalence = np.full(args.classes, 1.0 / args.classes)
    off_diagonal = "uniform"
    if args.accuracy_profile:
        path = Path(args.accuracy_profile)
        if not path.is_file():
            raise BenchmarkError(f"accuracy profile not found: {path}")
        profile = json.loads(path.read_text())
        accuracies = profile.get("accuracies")
        if not accuracies or len(accuracies) != args.models:
            raise BenchmarkError("accuracy profile must list one accuracy per model")
        if profile.get("class_prevalence") is not None:
            prevalence = np.asarray(profile["class_prevalence"], dtype=float)
        off_diagonal = profile.get("off_diagonal", "uniform")
    else:
        accuracies = np.linspace(0.5, 0.9, args.models)

    confusions = confusions_from_accuracies(accuracies, args.classes, off_diagonal)
    spec = SyntheticSpec(
        num_models=args.models,
        num_items=args.items,
        num_classes=args.classes,
        true_confusions=confusions,
        class_prevalence=prevalence,
        sharpness=args.sharpness,
        seed=args.seed,
    )
    task = generate_synthetic(spec)
    manifest_path = save_benchmark(task, args.out, name=args.name)
    print(f"wrote {manifest_path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    task = load_benchmark(args.manifest)
    report = validate(task)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_serve(args) -> int:
    import os

    import uvicorn

    from .service import create_app

    host, _, port = args.addr.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"--addr must be HOST:PORT, got {args.addr!r}")
    token = os.environ.get("AMSELECT_TOKEN") or None
    app = create_app(args.data, token=token, ui_dir=args.ui_dir)
    try:
        uvicorn.run(app, host=host, port=int(port), log_level="info")
    except OSError as exc:  # port in use, bad interface
        raise ConfigError(f"cannot bind {args.addr}: {exc}") from exc
    return EXIT_OK


_COMMANDS = {
    "run": cmd_run,
    "unsupervised": cmd_unsupervised,
    "synth": cmd_synth,
    "validate": cmd_validate,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BenchmarkError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
