"""Adaptive choice among estimators of unknown quality, in one dimension.

Each estimator j comes with an estimate and a radius. The set at level j is
the intersection of the confidence intervals of all estimators at least as
pessimistic as j. The decision minimizes the worst relative regret over the
levels, which for the absolute-distance cost is a weighted one-center
problem on the line.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class EstimatorFamily:
    estimates: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        est = np.asarray(self.estimates, dtype=float).reshape(-1)
        rad = np.asarray(self.radii, dtype=float).reshape(-1)
        if est.size == 0 or est.shape != rad.shape:
            raise ValueError("need equally many estimates and radii")
        if np.any(rad <= 0) or np.any(np.diff(rad) < 0):
            raise ValueError("radii must be positive and nondecreasing")
        object.__setattr__(self, "estimates", est)
        object.__setattr__(self, "radii", rad)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, float]]) -> "EstimatorFamily":
        est, rad = zip(*pairs)
        return cls(np.array(est), np.array(rad))

    def __len__(self) -> int:
        return self.estimates.size


@dataclass(frozen=True)
class NestedIntervalSets:
    lo: np.ndarray
    hi: np.ndarray

    @property
    def empty(self) -> np.ndarray:
        return self.lo > self.hi

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def half_widths(self) -> np.ndarray:
        return 0.5 * (self.hi - self.lo)

    def level(self, j: int) -> tuple[float, float] | None:
        return None if self.empty[j] else (float(self.lo[j]), float(self.hi[j]))


def build_nested_sets(fam: EstimatorFamily) -> NestedIntervalSets:
    lo = fam.estimates - fam.radii
    hi = fam.estimates + fam.radii
    # suffix intersections: level j keeps every constraint with index >= j
    return NestedIntervalSets(np.maximum.accumulate(lo[::-1])[::-1], np.minimum.accumulate(hi[::-1])[::-1])


def _relative_regret(x: float, c: np.ndarray, r: np.ndarray) -> float:
    # worst distance to an interval is |x - c| + r; the oracle pays r
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(r > 0, np.abs(x - c) / np.where(r > 0, r, 1.0),
                          np.where(np.abs(x - c) > 1e-12 * (1.0 + np.abs(c)), np.inf, 0.0))
    return float(np.max(ratios))


def solve_adaptive_garo(sets: NestedIntervalSets) -> tuple[float, float]:
    keep = ~sets.empty
    if not np.any(keep):
        raise ValueError("every level is empty: no parameter is consistent with all estimators")
    c = sets.centers[keep]
    r = sets.half_widths[keep]
    pinned = r == 0
    if np.any(pinned):
        x = float(c[pinned][0])
        return x, _relative_regret(x, c, r)
    # the optimum of max_j |x - c_j| / r_j sits at a center or where an
    # increasing and a decreasing branch cross
    cands = set(c.tolist())
    for i, j in combinations(range(c.size), 2):
        if c[i] != c[j]:
            cands.add(float((c[i] * r[j] + c[j] * r[i]) / (r[i] + r[j])))
    best_x, best_val = None, math.inf
    for x in sorted(cands):
        val = _relative_regret(x, c, r)
        if val < best_val:
            best_x, best_val = x, val
    return best_x, best_val


def lepskii_alpha_bound_check(sets: NestedIntervalSets) -> bool:
    return solve_adaptive_garo(sets)[1] <= 1.0 + 1e-9


def lepskii_radius(kappa, n_samples: int, delta: float, levels: int) -> np.ndarray:
    """kappa * sqrt(2 log(2 (J+1) / delta) / N), J+1 = ``levels``."""
    return np.asarray(kappa, dtype=float) * math.sqrt(2.0 * math.log(2.0 * levels / delta) / n_samples)


@dataclass
class LepskiiTrial:
    x: float
    alpha: float
    error: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.error <= self.bound


def lepskii_trial(rng: np.random.Generator, kappas: np.ndarray, sigma: float, n_samples: int,
                  delta: float, truth: float = 0.0) -> LepskiiTrial:
    """One simulated family: estimator j averages its own N Gaussian draws.

    Estimators whose scale kappa_j is at least the true noise level are
    valid; the bound is twice the radius of the first valid one.
    """
    radii = lepskii_radius(kappas, n_samples, delta, len(kappas))
    means = truth + sigma * rng.standard_normal((len(kappas), n_samples)).mean(axis=1)
    sets = build_nested_sets(EstimatorFamily(means, radii))
    first_valid = int(np.searchsorted(kappas, sigma))
    x, alpha = solve_adaptive_garo(sets)
    return LepskiiTrial(x, alpha, abs(x - truth), 2.0 * radii[first_valid])


def simulate_lepskii(trials: int = 500, n_samples: int = 200, levels: int = 7, beta: float = 2.0,
                     kappa0: float = 0.25, sigma: float = 1.0, delta: float = 0.1,
                     seed: int = 0) -> list[LepskiiTrial]:
    kappas = kappa0 * beta ** np.arange(levels)
    if sigma > kappas[-1]:
        raise ValueError("true noise level beyond the largest grid value")
    streams = np.random.SeedSequence(seed).spawn(trials)
    return [lepskii_trial(np.random.default_rng(s), kappas, sigma, n_samples, delta) for s in streams]
