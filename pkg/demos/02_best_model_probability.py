"""How the best-model distribution is computed, and how well the quadrature holds up.

Each model's unknown accuracy is a mixture of Beta distributions (one per
class, weighted by estimated prevalence); the probability a model is best is
the chance its accuracy draw beats everyone else's. This script checks the
trapezoidal integral against a closed form and a Monte-Carlo simulation.
"""

import numpy as np

from amselect import BetaMixture, pbest_from_mixture, pbest_monte_carlo

# --- closed form -----------------------------------------------------------
# Beta(2,1) against Beta(1,1): P(X1 > X2) = integral of 2x * x = 2/3.
mix = BetaMixture(a=np.array([[2.0], [1.0]]),
                  b=np.array([[1.0], [1.0]]),
                  weights=np.array([1.0]))
pb = pbest_from_mixture(mix, grid_size=2049)
print("Beta(2,1) vs Beta(1,1):", np.round(pb.probs, 6), "(exact: 2/3, 1/3)")
print()

# --- against Monte Carlo ----------------------------------------------------
rng = np.random.default_rng(3)
mix = BetaMixture(
    a=rng.uniform(0.5, 50.0, size=(4, 3)),
    b=rng.uniform(0.5, 50.0, size=(4, 3)),
    weights=rng.dirichlet(np.ones(3)),
)
quad = pbest_from_mixture(mix, grid_size=2049)
mc = pbest_monte_carlo(mix, n_samples=500_000, seed=11)
print("model   quadrature   500k-sample simulation")
for k in range(4):
    print(f"{k:5d}   {quad.probs[k]:10.4f}   {mc[k]:10.4f}")
print(f"total variation distance: {0.5 * np.abs(quad.probs - mc).sum():.5f}")
print(f"pre-normalization quadrature mass: {quad.raw_total:.8f} (exact value is 1)")
print()

# --- grid refinement --------------------------------------------------------
print("grid size vs drift from the finest grid:")
reference = pbest_from_mixture(mix, grid_size=8193).probs
for grid in (65, 257, 1025, 4097):
    probs = pbest_from_mixture(mix, grid_size=grid).probs
    print(f"  {grid:5d} nodes: max deviation {np.abs(probs - reference).max():.2e}")
