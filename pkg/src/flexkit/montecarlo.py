"""Monte Carlo estimation of the stochastic flexibility index.

The stochastic flexibility index SF is the probability that a feasible
recourse exists under the Gaussian parameter distribution.  It is estimated
the plain way: draw realizations, evaluate the feasibility function at every
one of them, count.  No variance reduction is applied, so the cost contrast
with the deterministic index computation is a property of the method, not of
implementation tricks.

Sampling is organized in fixed chunks of 1024 draws, each chunk on its own
substream keyed by (seed, chunk index).  Counts are then independent of
execution order, so a parallel driver would reproduce the serial result
bit for bit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import stats
from .flexindex import psi
from .model import SystemModel

__all__ = ["McEstimate", "estimate_sf", "estimate_alpha", "CHUNK"]

CHUNK = 1024
_FEAS_TOL = 1e-9  # LP-residual scale


@dataclass(frozen=True)
class McEstimate:
    """Binomial point estimate with its standard error and 95% interval."""

    estimate: float
    stderr: float
    ci95: tuple[float, float]
    n_samples: int
    seed: int
    elapsed: float

    @staticmethod
    def from_count(hits: int, n: int, seed: int, elapsed: float) -> "McEstimate":
        p = hits / n
        se = float(np.sqrt(p * (1.0 - p) / n))
        lo = max(0.0, p - 1.96 * se)
        hi = min(1.0, p + 1.96 * se)
        return McEstimate(
            estimate=p, stderr=se, ci95=(lo, hi), n_samples=n, seed=seed, elapsed=elapsed
        )


def _chunked_draws(model: SystemModel, n_samples: int, seed: int):
    chol = model.uncertainty.chol
    mean = model.theta_bar
    done = 0
    chunk_idx = 0
    while done < n_samples:
        take = min(CHUNK, n_samples - done)
        rng = stats.worker_rng(seed, chunk_idx)
        yield stats.sample_gaussian_batch(mean, chol, rng, take)
        done += take
        chunk_idx += 1


def estimate_sf(model: SystemModel, n_samples: int, seed: int) -> McEstimate:
    """Fraction of N(mean, V) draws with a feasible recourse (psi <= 1e-9)."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    t0 = time.perf_counter()
    hits = 0
    for batch in _chunked_draws(model, n_samples, seed):
        for theta in batch:
            if psi(model, theta).u <= _FEAS_TOL:
                hits += 1
    return McEstimate.from_count(hits, n_samples, seed, time.perf_counter() - t0)


def estimate_alpha(model: SystemModel, delta_star: float, n_samples: int, seed: int) -> McEstimate:
    """Fraction of draws inside the ellipsoid of squared Mahalanobis radius
    delta_star; converges to the chi-squared confidence level."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if delta_star < 0:
        raise ValueError("delta_star must be nonnegative")
    t0 = time.perf_counter()
    chol = model.uncertainty.chol
    mean = model.theta_bar
    hits = 0
    for batch in _chunked_draws(model, n_samples, seed):
        half = scipy.linalg.solve_triangular(
            chol, (batch - mean).T, lower=True, check_finite=False
        )
        q = np.sum(half * half, axis=0)
        hits += int(np.sum(q <= delta_star))
    return McEstimate.from_count(hits, n_samples, seed, time.perf_counter() - t0)
