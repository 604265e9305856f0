"""Benchmark tasks: prediction tensors for a pool of models plus optional oracle labels.

A task bundles the soft (or one-hot) prediction vectors of ``H`` candidate
models on ``D`` items over ``C`` classes, as an ``(H, D, C)`` float32 tensor,
together with opaque model/item identifiers. Tasks load from a small JSON
manifest that points at either a raw little-endian float32 dump or a CSV of
per-(model, item) score rows.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

__all__ = [
    "BenchmarkError",
    "BenchmarkTask",
    "SyntheticSpec",
    "ValidationReport",
    "normalize_predictions",
    "task_from_scores",
    "load_benchmark",
    "save_benchmark",
    "hard_predictions",
    "generate_synthetic",
    "confusions_from_accuracies",
    "validate",
]

# Rows whose sum is already within this tolerance of 1 are kept verbatim, so
# saving and re-loading a normalized task is a bit-exact round trip.
NORM_SKIP_TOL = 1e-6

# Post-load guarantee on every prediction row.
ROW_SUM_TOL = 1e-4


class BenchmarkError(Exception):
    """Malformed benchmark data: bad manifest, shape mismatch, bad values."""


def normalize_predictions(scores) -> np.ndarray:
    """Rescale each score row to sum to 1 and return a float32 tensor.

    Rows already summing to 1 within ``NORM_SKIP_TOL`` pass through with
    their bits unchanged (one-hot rows in particular). Negative, non-finite,
    or all-zero rows are rejected rather than clamped.
    """
    arr = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise BenchmarkError("prediction scores contain NaN or infinity")
    if np.any(arr < 0.0):
        raise BenchmarkError("prediction scores must be non-negative")
    sums = arr.sum(axis=-1)
    if np.any(sums <= 0.0):
        raise BenchmarkError("prediction rows must have positive total mass")
    off = np.abs(sums - 1.0) > NORM_SKIP_TOL
    if np.any(off):
        arr = arr.copy()
        arr[off] /= sums[off][..., None]
    return arr.astype(np.float32)


@dataclass(frozen=True, eq=False)
class BenchmarkTask:
    """Predictions of ``H`` models on ``D`` items over ``C`` classes.

    Instances are immutable after construction; the prediction tensor is
    marked read-only and may be shared freely across threads.
    """

    model_ids: tuple
    item_ids: tuple
    num_classes: int
    predictions: np.ndarray
    oracle_labels: np.ndarray | None = None
    item_uris: tuple | None = None
    class_names: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "model_ids", tuple(self.model_ids))
        object.__setattr__(self, "item_ids", tuple(self.item_ids))
        preds = np.ascontiguousarray(self.predictions, dtype=np.float32)
        object.__setattr__(self, "predictions", preds)

        h, d, c = len(self.model_ids), len(self.item_ids), self.num_classes
        if h < 2:
            raise BenchmarkError("need at least 2 candidate models")
        if d < 1:
            raise BenchmarkError("need at least 1 item")
        if c < 2:
            raise BenchmarkError("need at least 2 classes")
        if len(set(self.model_ids)) != h:
            raise BenchmarkError("model_ids must be unique")
        if len(set(self.item_ids)) != d:
            raise BenchmarkError("item_ids must be unique")
        if preds.shape != (h, d, c):
            raise BenchmarkError(
                f"prediction tensor shape {preds.shape} does not match "
                f"manifest ({h} models, {d} items, {c} classes)"
            )
        if not np.all(np.isfinite(preds)):
            raise BenchmarkError("prediction scores contain NaN or infinity")
        if np.any(preds < 0.0):
            raise BenchmarkError("prediction scores must be non-negative")

        if self.oracle_labels is not None:
            labels = np.asarray(self.oracle_labels, dtype=np.int64)
            if labels.shape != (d,):
                raise BenchmarkError("oracle labels must have one entry per item")
            if np.any(labels < 0) or np.any(labels >= c):
                raise BenchmarkError(f"oracle label index out of range [0, {c})")
            labels.setflags(write=False)
            object.__setattr__(self, "oracle_labels", labels)

        if self.item_uris is not None:
            uris = tuple(self.item_uris)
            if len(uris) != d:
                raise BenchmarkError("item_uris must have one entry per item")
            object.__setattr__(self, "item_uris", uris)
        if self.class_names is not None:
            names = tuple(self.class_names)
            if len(names) != c:
                raise BenchmarkError("class_names must have one entry per class")
            object.__setattr__(self, "class_names", names)

        preds.setflags(write=False)

    @property
    def num_models(self) -> int:
        return len(self.model_ids)

    @property
    def num_items(self) -> int:
        return len(self.item_ids)

    @cached_property
    def hard(self) -> np.ndarray:
        """Argmax class per (model, item); ties resolve to the lowest index."""
        out = np.argmax(self.predictions, axis=2)
        out.setflags(write=False)
        return out


def task_from_scores(model_ids, item_ids, num_classes, scores,
                     oracle_labels=None, item_uris=None, class_names=None) -> BenchmarkTask:
    """Build a task from raw score rows, normalizing them on the way in."""
    return BenchmarkTask(
        model_ids=tuple(model_ids),
        item_ids=tuple(item_ids),
        num_classes=int(num_classes),
        predictions=normalize_predictions(scores),
        oracle_labels=oracle_labels,
        item_uris=item_uris,
        class_names=class_names,
    )


def hard_predictions(task: BenchmarkTask) -> np.ndarray:
    """Class predictions as an ``(H, D)`` index matrix (lowest-index ties)."""
    return task.hard


# ---------------------------------------------------------------------------
# Manifest I/O
# ---------------------------------------------------------------------------

_FORMATS = ("f32le", "csv")


def _read_labels_csv(path: Path, item_ids, num_classes) -> np.ndarray:
    by_id = {item: i for i, item in enumerate(item_ids)}
    labels = np.full(len(item_ids), -1, dtype=np.int64)
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            if row[0] == "item_id":  # optional header
                continue
            if len(row) != 2:
                raise BenchmarkError(f"labels file {path}: expected item_id,class_index rows")
            item, raw = row
            if item not in by_id:
                raise BenchmarkError(f"labels file {path}: unknown item id {item!r}")
            cls = int(raw)
            if not 0 <= cls < num_classes:
                raise BenchmarkError(
                    f"labels file {path}: class index {cls} out of range [0, {num_classes})"
                )
            labels[by_id[item]] = cls
    if np.any(labels < 0):
        missing = [item_ids[i] for i in np.nonzero(labels < 0)[0][:5]]
        raise BenchmarkError(f"labels file {path}: missing labels for items {missing}")
    return labels


def _read_predictions_csv(path: Path, model_ids, item_ids, num_classes) -> np.ndarray:
    model_idx = {m: i for i, m in enumerate(model_ids)}
    item_idx = {x: i for i, x in enumerate(item_ids)}
    scores = np.full((len(model_ids), len(item_ids), num_classes), np.nan, dtype=np.float64)
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0] == "model_id":
                continue
            if len(row) != 2 + num_classes:
                raise BenchmarkError(
                    f"predictions file {path}: expected model_id,item_id and "
                    f"{num_classes} scores per row, got {len(row)} fields"
                )
            model, item = row[0], row[1]
            if model not in model_idx:
                raise BenchmarkError(f"predictions file {path}: unknown model id {model!r}")
            if item not in item_idx:
                raise BenchmarkError(f"predictions file {path}: unknown item id {item!r}")
            scores[model_idx[model], item_idx[item]] = [float(v) for v in row[2:]]
    if np.any(np.isnan(scores)):
        raise BenchmarkError(f"predictions file {path}: missing (model, item) rows")
    return scores


def load_benchmark(manifest_path) -> BenchmarkTask:
    """Load a task from a JSON manifest.

    The manifest names the models, items, and class count, and points at a
    predictions file in either ``f32le`` (raw little-endian float32, index
    order model/item/class) or ``csv`` format, plus an optional labels CSV.
    Soft score rows are rescaled to sum to 1; one-hot rows pass through.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise BenchmarkError(f"manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise BenchmarkError(f"manifest {manifest_path} is not valid JSON: {exc}") from exc

    for key in ("model_ids", "item_ids", "num_classes", "predictions_file", "predictions_format"):
        if key not in manifest:
            raise BenchmarkError(f"manifest {manifest_path} missing field {key!r}")

    model_ids = [str(m) for m in manifest["model_ids"]]
    item_ids = [str(x) for x in manifest["item_ids"]]
    num_classes = int(manifest["num_classes"])
    fmt = manifest["predictions_format"]
    if fmt not in _FORMATS:
        raise BenchmarkError(f"unknown predictions_format {fmt!r}; expected one of {_FORMATS}")

    base = manifest_path.parent
    pred_path = base / manifest["predictions_file"]
    if not pred_path.is_file():
        raise BenchmarkError(f"predictions file not found: {pred_path}")

    h, d, c = len(model_ids), len(item_ids), num_classes
    if fmt == "f32le":
        raw = pred_path.read_bytes()
        expected = h * d * c * 4
        if len(raw) != expected:
            raise BenchmarkError(
                f"predictions file {pred_path} holds {len(raw)} bytes; manifest "
                f"shape ({h}, {d}, {c}) requires {expected}"
            )
        scores = np.frombuffer(raw, dtype="<f4").reshape(h, d, c)
    else:
        scores = _read_predictions_csv(pred_path, model_ids, item_ids, num_classes)

    labels = None
    if manifest.get("labels_file"):
        label_path = base / manifest["labels_file"]
        if not label_path.is_file():
            raise BenchmarkError(f"labels file not found: {label_path}")
        labels = _read_labels_csv(label_path, item_ids, num_classes)

    item_uris = manifest.get("item_uris")
    class_names = manifest.get("class_names")
    return task_from_scores(model_ids, item_ids, num_classes, scores,
                            oracle_labels=labels, item_uris=item_uris,
                            class_names=class_names)


def save_benchmark(task: BenchmarkTask, out_dir, name: str = "benchmark") -> Path:
    """Write a task as manifest + f32le tensor (+ labels CSV); returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pred_name = f"{name}.predictions.f32"
    (out_dir / pred_name).write_bytes(
        np.ascontiguousarray(task.predictions, dtype="<f4").tobytes()
    )
    manifest = {
        "model_ids": list(task.model_ids),
        "item_ids": list(task.item_ids),
        "num_classes": task.num_classes,
        "predictions_file": pred_name,
        "predictions_format": "f32le",
    }
    if task.oracle_labels is not None:
        labels_name = f"{name}.labels.csv"
        with open(out_dir / labels_name, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["item_id", "class_index"])
            for item, cls in zip(task.item_ids, task.oracle_labels):
                writer.writerow([item, int(cls)])
        manifest["labels_file"] = labels_name
    if task.item_uris is not None:
        manifest["item_uris"] = list(task.item_uris)
    if task.class_names is not None:
        manifest["class_names"] = list(task.class_names)
    manifest_path = out_dir / f"{name}.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path


# ---------------------------------------------------------------------------
# Synthetic tasks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator spec: per-model true confusion matrices plus emission knobs.

    ``sharpness`` interpolates the emitted soft scores between uniform
    (sharpness=1) and one-hot (sharpness -> inf): the drawn class receives
    mass sharpness/(sharpness + C - 1), every other class 1/(sharpness + C - 1).
    """

    num_models: int
    num_items: int
    num_classes: int
    true_confusions: np.ndarray
    class_prevalence: np.ndarray
    sharpness: float = 50.0
    seed: int = 0

    def __post_init__(self):
        conf = np.asarray(self.true_confusions, dtype=np.float64)
        prev = np.asarray(self.class_prevalence, dtype=np.float64)
        h, d, c = self.num_models, self.num_items, self.num_classes
        if h < 2 or d < 1 or c < 2:
            raise BenchmarkError("synthetic spec needs >=2 models, >=1 item, >=2 classes")
        if conf.shape != (h, c, c):
            raise BenchmarkError(f"true_confusions must have shape ({h}, {c}, {c})")
        if np.any(conf < 0.0) or np.any(np.abs(conf.sum(axis=2) - 1.0) > 1e-9):
            raise BenchmarkError("each true confusion row must be a distribution (sum 1 within 1e-9)")
        if prev.shape != (c,) or np.any(prev < 0.0) or abs(prev.sum() - 1.0) > 1e-9:
            raise BenchmarkError("class_prevalence must be a length-C distribution (sum 1 within 1e-9)")
        if not self.sharpness > 0.0:
            raise BenchmarkError("sharpness must be positive")
        conf.setflags(write=False)
        prev.setflags(write=False)
        object.__setattr__(self, "true_confusions", conf)
        object.__setattr__(self, "class_prevalence", prev)


def confusions_from_accuracies(accuracies, num_classes, off_diagonal="uniform") -> np.ndarray:
    """Diagonal-accuracy confusion matrices; error mass spread off-diagonal.

    ``off_diagonal="uniform"`` spreads errors evenly; ``"banded"`` puts all
    error mass on the next class (mod C), which yields far fewer distinct
    prediction profiles across a model pool.
    """
    acc = np.asarray(accuracies, dtype=np.float64)
    if np.any(acc < 0.0) or np.any(acc > 1.0):
        raise BenchmarkError("accuracies must lie in [0, 1]")
    h, c = len(acc), int(num_classes)
    conf = np.zeros((h, c, c))
    for k in range(h):
        if off_diagonal == "uniform":
            conf[k] = (1.0 - acc[k]) / (c - 1)
            np.fill_diagonal(conf[k], acc[k])
        elif off_diagonal == "banded":
            np.fill_diagonal(conf[k], acc[k])
            for cls in range(c):
                conf[k, cls, (cls + 1) % c] = 1.0 - acc[k]
        else:
            raise BenchmarkError(f"unknown off_diagonal mode {off_diagonal!r}")
    return conf


def generate_synthetic(spec: SyntheticSpec) -> BenchmarkTask:
    """Sample a labeled task from the generator spec; pure function of the spec.

    Per item, a true label is drawn from the class prevalence; per model, a
    predicted class is drawn from that model's confusion row for the true
    label, and a peaked soft score vector is emitted for it.
    """
    rng = np.random.default_rng(spec.seed)
    h, d, c = spec.num_models, spec.num_items, spec.num_classes
    labels = rng.choice(c, size=d, p=spec.class_prevalence)

    base = 1.0 / (spec.sharpness + c - 1.0)
    hot = spec.sharpness * base
    preds = np.full((h, d, c), base, dtype=np.float64)
    for k in range(h):
        row_cdf = np.cumsum(spec.true_confusions[k][labels], axis=1)
        u = rng.random(d)
        drawn = np.minimum((row_cdf < u[:, None]).sum(axis=1), c - 1)
        preds[k, np.arange(d), drawn] = hot

    model_ids = [f"model-{k:03d}" for k in range(h)]
    item_ids = [f"item-{i:05d}" for i in range(d)]
    return task_from_scores(model_ids, item_ids, c, preds, oracle_labels=labels)


# ---------------------------------------------------------------------------
# Validation report
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    """Read-only diagnostics for a task; never mutates the input."""

    num_models: int
    num_items: int
    num_classes: int
    violation_count: int
    violations: list = field(default_factory=list)
    hard_models: list = field(default_factory=list)
    soft_models: list = field(default_factory=list)
    argmax_class_counts: list = field(default_factory=list)
    uncovered_classes: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.violation_count == 0

    def to_dict(self) -> dict:
        return {
            "num_models": self.num_models,
            "num_items": self.num_items,
            "num_classes": self.num_classes,
            "violation_count": self.violation_count,
            "violations": self.violations,
            "hard_models": self.hard_models,
            "soft_models": self.soft_models,
            "argmax_class_counts": self.argmax_class_counts,
            "uncovered_classes": self.uncovered_classes,
            "warnings": self.warnings,
            "ok": self.ok,
        }


def validate(task: BenchmarkTask, max_reported: int = 50) -> ValidationReport:
    """Report normalization violations, hard/soft predictors, and class coverage."""
    sums = task.predictions.sum(axis=2, dtype=np.float64)
    bad = np.abs(sums - 1.0) > ROW_SUM_TOL
    bad_idx = np.argwhere(bad)
    violations = [
        {"model": task.model_ids[k], "item": task.item_ids[i], "row_sum": float(sums[k, i])}
        for k, i in bad_idx[:max_reported]
    ]

    one_hot_rows = (np.count_nonzero(task.predictions, axis=2) == 1)
    hard_models, soft_models = [], []
    for k, model in enumerate(task.model_ids):
        (hard_models if bool(one_hot_rows[k].all()) else soft_models).append(model)

    counts = np.bincount(task.hard.ravel(), minlength=task.num_classes)
    uncovered = [int(cls) for cls in np.nonzero(counts == 0)[0]]

    warnings = []
    for model in hard_models:
        warnings.append(f"model {model!r} is a hard predictor (every row one-hot)")
    for cls in uncovered:
        warnings.append(f"class {cls} never appears as any model's argmax")

    return ValidationReport(
        num_models=task.num_models,
        num_items=task.num_items,
        num_classes=task.num_classes,
        violation_count=int(bad.sum()),
        violations=violations,
        hard_models=hard_models,
        soft_models=soft_models,
        argmax_class_counts=[int(v) for v in counts],
        uncovered_classes=uncovered,
        warnings=warnings,
    )
