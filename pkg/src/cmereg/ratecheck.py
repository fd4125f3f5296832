"""Finite-alphabet oracles and empirical convergence-rate experiments.

With delta kernels on both sides the output RKHS is the simplex coordinate
space, the best embedding of x is the conditional probability row p(.|x),
and the surrogate risk can be evaluated exactly by enumerating the joint
alphabet. That turns asymptotic risk statements into checkable finite
computations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import EmbeddingModel, TrainingSet, alpha_batch, fit
from .errors import InputError, UnsupportedConfigurationError
from .kernels import KernelSpec

_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteDistribution:
    x_symbols: tuple
    y_symbols: tuple
    px: np.ndarray  # marginal over x_symbols
    pyx: np.ndarray  # row-stochastic, pyx[i, j] = p(y_j | x_i)

    def __post_init__(self):
        px = np.asarray(self.px, dtype=float)
        pyx = np.asarray(self.pyx, dtype=float)
        object.__setattr__(self, "px", px)
        object.__setattr__(self, "pyx", pyx)
        if px.shape != (len(self.x_symbols),):
            raise InputError("px must have one entry per x symbol")
        if pyx.shape != (len(self.x_symbols), len(self.y_symbols)):
            raise InputError("pyx must be |X| x |Y|")
        if np.any(px < 0) or np.any(pyx < 0):
            raise InputError("probabilities must be nonnegative")
        if abs(px.sum() - 1.0) > _TOL:
            raise InputError("px must sum to 1")
        if np.any(np.abs(pyx.sum(axis=1) - 1.0) > _TOL):
            raise InputError("every pyx row must sum to 1")


@dataclass(frozen=True)
class RateResult:
    n: int
    excess: float
    seed: int
    lambda_used: float


def sample(dist: DiscreteDistribution, n: int, seed: int) -> TrainingSet:
    """Draw n i.i.d. pairs; deterministic per seed."""
    if n < 1:
        raise InputError("n must be >= 1")
    rng = np.random.default_rng(seed)
    xi = rng.choice(len(dist.x_symbols), size=n, p=dist.px)
    cum = np.cumsum(dist.pyx, axis=1)
    u = rng.random(n)
    yi = (u[:, None] > cum[xi]).sum(axis=1)
    xs = [dist.x_symbols[i] for i in xi]
    ys = [dist.y_symbols[j] for j in yi]
    return TrainingSet(xs, ys)


def true_embedding(dist: DiscreteDistribution) -> np.ndarray:
    """Table mu*(x)(y) = p(y|x): the conditional probability rows verbatim."""
    return dist.pyx.copy()


def irreducible_risk(dist: DiscreteDistribution) -> float:
    """Surrogate risk of the true embedding: sum_x px (1 - sum_y p(y|x)^2)."""
    return float(np.sum(dist.px * (1.0 - np.sum(dist.pyx**2, axis=1))))


def _require_delta(model: EmbeddingModel):
    if model.kspec.variant != "delta" or model.lspec.variant != "delta":
        raise UnsupportedConfigurationError("exact risk evaluation needs delta kernels on both sides")


def conditional_table(dist: DiscreteDistribution, model: EmbeddingModel) -> np.ndarray:
    """Model-predicted coefficient on each y symbol, per x symbol: row x is the
    predicted vector mu_hat(x) in simplex coordinates."""
    _require_delta(model)
    A = alpha_batch(model, list(dist.x_symbols))  # (|X|, n)
    table = np.zeros((len(dist.x_symbols), len(dist.y_symbols)))
    yindex = {s: j for j, s in enumerate(dist.y_symbols)}
    for i, y in enumerate(model.train.ys):
        table[:, yindex[y]] += A[:, i]
    return table


def exact_surrogate_risk(dist: DiscreteDistribution, predictor) -> float:
    """Exact surrogate risk of a predictor by enumeration of the joint alphabet.

    `predictor` is either a delta-kernel EmbeddingModel or a table of shape
    (|X|, |Y|) giving the predicted vector per x symbol.
    """
    if isinstance(predictor, EmbeddingModel):
        table = conditional_table(dist, predictor)
    else:
        table = np.asarray(predictor, dtype=float)
        if table.shape != dist.pyx.shape:
            raise InputError("predictor table must be |X| x |Y|")
    sq = np.sum(table**2, axis=1)
    cross = np.sum(dist.pyx * table, axis=1)
    return float(np.sum(dist.px * (sq - 2.0 * cross + 1.0)))


def rate_experiment(
    dist: DiscreteDistribution, n_grid, seeds, schedule=(1.0, 0.5)
) -> list[RateResult]:
    """Fit delta-kernel models at each (n, seed) with lambda_n = a * n^(-beta)
    and record the exact excess surrogate risk."""
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise InputError("n_grid must be strictly ascending")
    seeds = list(seeds)
    if not seeds:
        raise InputError("seeds must be nonempty")
    a, beta = schedule
    base = irreducible_risk(dist)
    dspec = KernelSpec("delta")
    results = []
    for n in n_grid:
        lam = a * n ** (-beta)
        for seed in seeds:
            model = fit(sample(dist, n, seed), dspec, dspec, lam)
            excess = exact_surrogate_risk(dist, model) - base
            results.append(RateResult(n=n, excess=max(excess, 0.0), seed=seed, lambda_used=lam))
    return results


def rate_slope(results) -> float:
    """Least-squares slope of log mean excess against log n."""
    by_n = {}
    for r in results:
        by_n.setdefault(r.n, []).append(r.excess)
    if len(by_n) < 3:
        raise InputError("need at least 3 distinct n values")
    ns = np.array(sorted(by_n))
    means = np.array([np.mean(by_n[n]) for n in ns])
    return float(np.polyfit(np.log(ns), np.log(means), 1)[0])
