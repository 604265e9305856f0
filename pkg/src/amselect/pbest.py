"""Probability that each candidate model is the best one in the pool.

Each model's unknown accuracy is represented as a mixture of Beta
distributions: one component per class, read off the model's Dirichlet
concentration rows (diagonal entry against the rest of the row), weighted by
the estimated class prevalence. The probability that a model's accuracy draw
exceeds everyone else's is the integral of its mixture PDF times the product
of all other models' mixture CDFs, evaluated with a trapezoidal rule on a
uniform grid over [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, betaln

from .beliefs import BeliefState, mean_confusions
from .benchmark import BenchmarkTask

__all__ = [
    "DEFAULT_GRID_SIZE",
    "ClassMarginal",
    "StepMarginals",
    "BetaMixture",
    "PBest",
    "class_marginal",
    "item_class_posterior",
    "item_class_posteriors",
    "diagonal_betas",
    "beta_mixture_pdf_cdf",
    "pbest_from_mixture",
    "compute_pbest",
    "pbest_monte_carlo",
    "mean_accuracy",
    "select_model",
]

DEFAULT_GRID_SIZE = 2049

# Beta PDFs diverge at 0 or 1 when a concentration is below 1; endpoint nodes
# are evaluated at these clipped abscissae instead.
PDF_EPS = 1e-9

# Keep per-chunk scratch arrays for mixture accumulation under ~32 MB.
_CHUNK_ELEMS = 4_000_000


@dataclass(frozen=True)
class ClassMarginal:
    """Estimated prevalence of each true class under current beliefs."""

    pi: np.ndarray  # (C,) simplex vector

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=np.float64)
        if pi.ndim != 1 or np.any(pi < 0.0) or abs(pi.sum() - 1.0) > 1e-6:
            raise ValueError("class marginal must be a simplex vector (sum 1 within 1e-6)")
        pi.setflags(write=False)
        object.__setattr__(self, "pi", pi)


@dataclass(frozen=True)
class BetaMixture:
    """Per-model Beta(a, b) components with shared class weights."""

    a: np.ndarray        # (H, C) positive
    b: np.ndarray        # (H, C) positive
    weights: np.ndarray  # (C,) simplex


@dataclass(frozen=True)
class PBest:
    """Distribution over models; renormalized after quadrature.

    ``raw_total`` is the pre-normalization probability mass, which should be
    close to 1 when the quadrature resolves all mixture components.
    """

    probs: np.ndarray
    grid_size: int
    raw_total: float


def item_class_posteriors(task: BenchmarkTask, state: BeliefState) -> np.ndarray:
    """Per-item class posteriors under current beliefs, shape (D, C).

    Row i holds (1/H) sum_k sum_c' predictions[k,i,c'] * M[k,c',c] with M the
    posterior-mean confusion matrices.
    """
    m = mean_confusions(state)
    post = np.einsum("kip,kpc->ic", task.predictions, m, dtype=np.float64)
    post /= task.num_models
    return post


def item_class_posterior(task: BenchmarkTask, state: BeliefState, item: int) -> np.ndarray:
    """Class posterior for a single item (same contraction, one row)."""
    if not 0 <= item < task.num_items:
        raise IndexError(f"item index {item} out of range [0, {task.num_items})")
    m = mean_confusions(state)
    row = np.einsum("kp,kpc->c", task.predictions[:, item, :], m, dtype=np.float64)
    return row / task.num_models


def class_marginal(task: BenchmarkTask, state: BeliefState) -> ClassMarginal:
    """Marginal class prevalence: the per-item posteriors averaged over items."""
    return ClassMarginal(pi=item_class_posteriors(task, state).mean(axis=0))


class StepMarginals:
    """Class marginal plus per-item posteriors captured from one belief state.

    EIG scoring uses one of these per selection step: hypothetical updates
    reuse the captured marginal rather than re-deriving it per hypothesis.
    """

    __slots__ = ("marginal", "pi_given_item")

    def __init__(self, marginal: ClassMarginal, pi_given_item: np.ndarray):
        self.marginal = marginal
        self.pi_given_item = pi_given_item

    @property
    def pi(self) -> np.ndarray:
        return self.marginal.pi

    @classmethod
    def from_state(cls, task: BenchmarkTask, state: BeliefState) -> "StepMarginals":
        post = item_class_posteriors(task, state)
        return cls(ClassMarginal(pi=post.mean(axis=0)), post)


def diagonal_betas(state: BeliefState) -> tuple[np.ndarray, np.ndarray]:
    """Beta parameters of each row's diagonal marginal: raw concentrations.

    a[k, c] is the diagonal concentration of row c; b[k, c] is the rest of
    the row's mass.
    """
    a = np.einsum("kcc->kc", state.theta).copy()
    b = state.theta.sum(axis=2) - a
    return a, b


def _grid(grid_size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Uniform nodes, clipped abscissae, and interior trapezoidal weights.

    The weights cover [x_1, x_{G-2}] only: the two boundary panels are
    integrated in closed form from CDF mass (see ``pbest_from_mixture``), so
    the weight vector zeroes the endpoint nodes and halves their neighbors.
    """
    if grid_size < 3:
        raise ValueError("grid_size must be at least 3")
    x = np.linspace(0.0, 1.0, grid_size)
    xe = np.clip(x, PDF_EPS, 1.0 - PDF_EPS)
    dx = 1.0 / (grid_size - 1)
    w = np.full(grid_size, dx)
    w[0] = w[-1] = 0.0
    if grid_size > 3:
        w[1] = w[-2] = dx / 2.0
    else:
        w[1] = 0.0
    return x, xe, w


def _beta_pdf_cdf(a: np.ndarray, b: np.ndarray, xe: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """PDF and CDF of Beta(a, b) on the grid; inputs (..., ) -> (..., G).

    The PDF is evaluated in log space so large concentrations cannot
    overflow; the CDF is the regularized incomplete beta function.
    """
    a = a[..., None]
    b = b[..., None]
    logx = np.log(xe)
    log1mx = np.log1p(-xe)
    logpdf = (a - 1.0) * logx + (b - 1.0) * log1mx - betaln(a, b)
    pdf = np.exp(logpdf)
    cdf = betainc(a, b, xe)
    return pdf, cdf


def beta_mixture_pdf_cdf(mix: BetaMixture, xe: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mixture PDF and CDF per model on the grid, shape (H, G) each.

    Accumulates class components in chunks so large class counts do not
    materialize an (H, C, G) tensor.
    """
    a = np.asarray(mix.a, dtype=np.float64)
    b = np.asarray(mix.b, dtype=np.float64)
    weights = np.asarray(mix.weights, dtype=np.float64)
    num_models, num_classes = a.shape
    grid_n = xe.shape[0]
    pdf_mix = np.zeros((num_models, grid_n))
    cdf_mix = np.zeros((num_models, grid_n))
    step = max(1, _CHUNK_ELEMS // max(1, num_models * grid_n))
    for lo in range(0, num_classes, step):
        hi = min(num_classes, lo + step)
        pdf, cdf = _beta_pdf_cdf(a[:, lo:hi], b[:, lo:hi], xe)
        pdf_mix += np.einsum("c,kcg->kg", weights[lo:hi], pdf)
        cdf_mix += np.einsum("c,kcg->kg", weights[lo:hi], cdf)
    return pdf_mix, cdf_mix


def _product_of_others(cdf_mix: np.ndarray) -> np.ndarray:
    """prod_{l != k} F_l per grid node, via prefix/suffix running products."""
    num_models = cdf_mix.shape[0]
    pref = np.ones_like(cdf_mix)
    suff = np.ones_like(cdf_mix)
    if num_models > 1:
        np.cumprod(cdf_mix[:-1], axis=0, out=pref[1:])
        suff[:-1] = np.cumprod(cdf_mix[:0:-1], axis=0)[::-1]
    return pref * suff


def _boundary_mass(cdf_mix: np.ndarray, others: np.ndarray) -> np.ndarray:
    """Closed-form contribution of the two boundary panels.

    Within [0, x_1] and [x_{G-2}, 1] the smooth competitor product is
    trapezoid-interpolated while the (possibly endpoint-singular) mixture
    density integrates exactly to a CDF difference; the product of CDFs is 0
    at x=0 and 1 at x=1.
    """
    low = 0.5 * others[:, 1] * cdf_mix[:, 1]
    high = 0.5 * (others[:, -2] + 1.0) * (1.0 - cdf_mix[:, -2])
    return low + high


def pbest_from_mixture(mix: BetaMixture, grid_size: int = DEFAULT_GRID_SIZE) -> PBest:
    """Max-draw integral over the Beta mixtures.

    Interior nodes use the trapezoidal rule on the integrand; the boundary
    panels use exact mixture-CDF mass so that concentrations below 1 (whose
    PDFs diverge at 0 or 1) cannot poison the quadrature.
    """
    if mix.a.shape[0] < 2:
        raise ValueError("need at least 2 models to compare")
    _, xe, w = _grid(grid_size)
    pdf_mix, cdf_mix = beta_mixture_pdf_cdf(mix, xe)
    others = _product_of_others(cdf_mix)
    # einsum, not BLAS @: the batched matrix-vector kernel reduces rows in an
    # alignment-dependent order, breaking exact exchangeability of identical
    # models.
    raw = np.einsum("kg,g->k", pdf_mix * others, w)
    raw += _boundary_mass(cdf_mix, others)
    total = float(raw.sum())
    if not total > 0.0:
        raise ValueError("quadrature produced zero total mass; check mixture parameters")
    return PBest(probs=raw / total, grid_size=grid_size, raw_total=total)


def compute_pbest(state: BeliefState, marginal: ClassMarginal,
                  grid_size: int = DEFAULT_GRID_SIZE) -> PBest:
    """P(model k draws the highest accuracy) from the current beliefs."""
    a, b = diagonal_betas(state)
    return pbest_from_mixture(BetaMixture(a=a, b=b, weights=marginal.pi), grid_size)


def pbest_monte_carlo(mix: BetaMixture, n_samples: int = 500_000, seed: int = 0,
                      chunk: int = 100_000) -> np.ndarray:
    """Sampling estimate of the max-draw probabilities (oracle for the integral).

    Draws a class per model from the weights, an accuracy from that class's
    Beta, and counts argmax frequencies. Independent of the quadrature path.
    """
    rng = np.random.default_rng(seed)
    num_models, num_classes = mix.a.shape
    wins = np.zeros(num_models, dtype=np.int64)
    remaining = n_samples
    model_idx = np.arange(num_models)
    while remaining > 0:
        n = min(chunk, remaining)
        cls = rng.choice(num_classes, size=(n, num_models), p=mix.weights)
        a = mix.a[model_idx[None, :], cls]
        b = mix.b[model_idx[None, :], cls]
        draws = rng.beta(a, b)
        wins += np.bincount(np.argmax(draws, axis=1), minlength=num_models)
        remaining -= n
    return wins / n_samples


def mean_accuracy(state: BeliefState, marginal: ClassMarginal) -> np.ndarray:
    """Point-estimate accuracy per model: prevalence-weighted diagonal of M."""
    m = mean_confusions(state)
    return np.einsum("c,kcc->k", marginal.pi, m)


def select_model(pbest: PBest) -> int:
    """Argmax model index; ties resolve to the lowest index."""
    return int(np.argmax(pbest.probs))
