"""Dirichlet beliefs over per-model confusion matrices.

Each model ``k`` carries a ``(C, C)`` matrix of positive Dirichlet
concentrations: row ``c`` parameterizes the belief over how the model
distributes its predictions when the true class is ``c``. Priors are built
by blending a diagonal-favoring base matrix with empirical confusion counts
accumulated against the cross-model consensus labels, and labels update one
cell per model by a (possibly fractional) pseudo-count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .benchmark import BenchmarkTask

__all__ = [
    "PriorConfig",
    "ConsensusSummary",
    "BeliefState",
    "BeliefSnapshot",
    "consensus",
    "empirical_confusions",
    "build_prior",
    "apply_label",
    "snapshot",
    "restore",
    "mean_confusions",
    "save_beliefs",
    "load_beliefs",
]

PRIOR_MODES = ("uniform", "diagonal", "consensus")

DEFAULT_ALPHA = 0.1
DEFAULT_TEMPERATURE = 0.5
DEFAULT_ETA = 0.01


@dataclass(frozen=True)
class PriorConfig:
    """Prior construction knobs: blend weight, temperature, and mode."""

    alpha: float = DEFAULT_ALPHA
    temperature: float = DEFAULT_TEMPERATURE
    mode: str = "consensus"

    def __post_init__(self):
        if self.alpha < 0.0:
            raise ValueError("alpha must be non-negative")
        if not self.temperature > 0.0:
            raise ValueError("temperature must be positive")
        if self.mode not in PRIOR_MODES:
            raise ValueError(f"mode must be one of {PRIOR_MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class ConsensusSummary:
    """Summed scores across the model pool and the resulting consensus labels."""

    consensus_labels: np.ndarray  # (D,) class indices
    score_sums: np.ndarray        # (D, C)


class BeliefState:
    """Mutable concentration tensor ``theta`` of shape (H, C, C), all entries > 0.

    A state is owned by a single run or session; share read-only copies if
    several workers need to score against it concurrently.
    """

    __slots__ = ("theta", "eta", "origin")

    def __init__(self, theta: np.ndarray, eta: float = DEFAULT_ETA, origin: str = "consensus"):
        theta = np.ascontiguousarray(theta, dtype=np.float64)
        if theta.ndim != 3 or theta.shape[1] != theta.shape[2]:
            raise ValueError("theta must have shape (num_models, C, C)")
        if not np.all(theta > 0.0):
            raise ValueError("all Dirichlet concentrations must be strictly positive")
        if not eta > 0.0:
            raise ValueError("eta must be positive")
        self.theta = theta
        self.eta = float(eta)
        self.origin = origin

    @property
    def num_models(self) -> int:
        return self.theta.shape[0]

    @property
    def num_classes(self) -> int:
        return self.theta.shape[1]

    def clone(self) -> "BeliefState":
        return BeliefState(self.theta.copy(), eta=self.eta, origin=self.origin)


@dataclass(frozen=True)
class BeliefSnapshot:
    """Opaque revert token; restores the exact bits captured at snapshot time."""

    theta: np.ndarray
    eta: float
    origin: str


def consensus(task: BenchmarkTask) -> ConsensusSummary:
    """Sum prediction scores across models; argmax per item is the consensus label."""
    sums = task.predictions.sum(axis=0, dtype=np.float64)  # (D, C)
    labels = np.argmax(sums, axis=1)
    return ConsensusSummary(consensus_labels=labels, score_sums=sums)


def empirical_confusions(task: BenchmarkTask, summary: ConsensusSummary) -> np.ndarray:
    """Accumulate each model's score mass into rows indexed by consensus label.

    Returns the ``(H, C, C)`` tensor with entry (k, c, c') holding the total
    score model k assigned to class c' over items whose consensus label is c.
    """
    c = task.num_classes
    onehot = np.zeros((task.num_items, c))
    onehot[np.arange(task.num_items), summary.consensus_labels] = 1.0
    return np.einsum("ic,kip->kcp", onehot, task.predictions, dtype=np.float64)


def _base_matrix(num_classes: int, mode: str) -> np.ndarray:
    if mode == "uniform":
        return np.ones((num_classes, num_classes))
    # Diagonal base: 1 on the diagonal, 1/(C-1) elsewhere, so each row places
    # half its relative mass on the correct class. For C=2 this equals uniform.
    base = np.full((num_classes, num_classes), 1.0 / (num_classes - 1))
    np.fill_diagonal(base, 1.0)
    return base


def build_prior(empirical: np.ndarray, config: PriorConfig, eta: float = DEFAULT_ETA) -> BeliefState:
    """Turn empirical confusion mass into tempered Dirichlet priors.

    theta[k, c, c'] = (base[c, c'] + alpha * empirical[k, c, c']) / temperature,
    where uniform/diagonal modes drop the empirical term entirely and differ
    only in the base matrix.
    """
    empirical = np.asarray(empirical, dtype=np.float64)
    if empirical.ndim != 3 or empirical.shape[1] != empirical.shape[2]:
        raise ValueError("empirical tensor must have shape (num_models, C, C)")
    num_classes = empirical.shape[1]
    base = _base_matrix(num_classes, config.mode)
    alpha = config.alpha if config.mode == "consensus" else 0.0
    theta = (base[None, :, :] + alpha * empirical) / config.temperature
    return BeliefState(theta, eta=eta, origin=config.mode)


def apply_label(state: BeliefState, task: BenchmarkTask, item: int, true_class: int,
                scale: float = 1.0) -> BeliefState:
    """Credit every model's (true_class, predicted-class) cell by ``scale * eta``.

    Mutates ``state`` in place and returns it. Revert by snapshot/restore,
    not by subtracting: floating-point subtraction is not an exact inverse.
    """
    if not 0 <= item < task.num_items:
        raise IndexError(f"item index {item} out of range [0, {task.num_items})")
    if not 0 <= true_class < task.num_classes:
        raise IndexError(f"class index {true_class} out of range [0, {task.num_classes})")
    predicted = task.hard[:, item]
    state.theta[np.arange(state.num_models), true_class, predicted] += scale * state.eta
    return state


def snapshot(state: BeliefState) -> BeliefSnapshot:
    """Capture the current belief bits for a later exact restore."""
    return BeliefSnapshot(theta=state.theta.copy(), eta=state.eta, origin=state.origin)


def restore(state: BeliefState, token: BeliefSnapshot) -> BeliefState:
    """Rewind ``state`` to the snapshot; tokens from another shape are stale."""
    if token.theta.shape != state.theta.shape:
        raise ValueError(
            f"stale snapshot: token shape {token.theta.shape} does not match "
            f"state shape {state.theta.shape}"
        )
    np.copyto(state.theta, token.theta)
    state.eta = token.eta
    state.origin = token.origin
    return state


def mean_confusions(state: BeliefState) -> np.ndarray:
    """Posterior-mean confusion matrices: each theta row normalized to sum 1."""
    return state.theta / state.theta.sum(axis=2, keepdims=True)


# ---------------------------------------------------------------------------
# Serialization (f32le tensor + JSON sidecar)
# ---------------------------------------------------------------------------


def save_beliefs(state: BeliefState, path_base) -> tuple[Path, Path]:
    """Write ``<base>.f32`` (little-endian float32 tensor) and ``<base>.json``.

    The float32 interchange format is lossy for float64 states; callers that
    need exact recovery should rebuild from the prior and an update log.
    """
    path_base = Path(path_base)
    tensor_path = path_base.with_suffix(".f32")
    meta_path = path_base.with_suffix(".json")
    tensor_path.write_bytes(np.ascontiguousarray(state.theta, dtype="<f4").tobytes())
    meta_path.write_text(json.dumps({
        "shape": list(state.theta.shape),
        "eta": state.eta,
        "origin": state.origin,
    }, indent=2, sort_keys=True) + "\n")
    return tensor_path, meta_path


def load_beliefs(path_base) -> BeliefState:
    path_base = Path(path_base)
    meta = json.loads(path_base.with_suffix(".json").read_text())
    shape = tuple(meta["shape"])
    raw = path_base.with_suffix(".f32").read_bytes()
    expected = int(np.prod(shape)) * 4
    if len(raw) != expected:
        raise ValueError(f"belief tensor holds {len(raw)} bytes, sidecar shape needs {expected}")
    theta = np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float64)
    return BeliefState(theta, eta=float(meta["eta"]), origin=meta["origin"])
