"""Minimum-knapsack instances and cost-data generators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import ortho_group

from ..robust import LinearDecisionProblem

VARIANTS = ("gaussian", "inverse", "heavytail")


def derive_seed(*key: int) -> int:
    """A 64-bit seed from an integer key, stable across platforms."""
    lo, hi = np.random.SeedSequence(list(key)).generate_state(2, np.uint32)
    return int(hi) << 32 | int(lo)


@dataclass(frozen=True)
class KnapsackInstanceSpec:
    n: int
    seed: int
    a_lo: float = 25.0
    a_hi: float = 100.0
    capacity_share: float = 0.4
    x_max: float = 100.0


def generate_instance(spec: KnapsackInstanceSpec) -> LinearDecisionProblem:
    if spec.n < 1:
        raise ValueError("dimension must be positive")
    rng = np.random.default_rng(spec.seed)
    a = rng.uniform(spec.a_lo, spec.a_hi, spec.n)
    b = spec.capacity_share * a.sum()
    return LinearDecisionProblem(a[None, :], [b], np.zeros(spec.n), np.full(spec.n, spec.x_max))


@dataclass(frozen=True)
class DataModelSpec:
    variant: str
    n: int
    m: int
    seed: int
    split: float = 0.8

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown data variant {self.variant!r}")
        if self.m < 2 or not 0 < self.split < 1:
            raise ValueError("need m >= 2 and a split in (0, 1)")


def _correlated_gaussian(rng: np.random.Generator, n: int, m: int, inverse: bool):
    mu = rng.uniform(0.0, 50.0, n)
    top = 50.0 - mu if inverse else mu / 2.0
    sd = rng.uniform(0.0, top)
    basis = ortho_group.rvs(n, random_state=rng) if n > 1 else np.ones((1, 1))
    # covariance sum_i sd_i^2 u_i u_i^T with u_i the columns of basis
    samples = mu + (rng.standard_normal((m, n)) * sd) @ basis.T
    return samples, mu, (basis * sd**2) @ basis.T


def sample_data(spec: DataModelSpec) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(spec.seed)
    if spec.variant == "heavytail":
        u = 1.0 - rng.random((spec.m, spec.n))  # in (0, 1]
        samples = u ** (-1.0 / 1.5) + 1.0
    else:
        samples, _, _ = _correlated_gaussian(rng, spec.n, spec.m, spec.variant == "inverse")
    cut = int(round(spec.split * spec.m))
    return samples[:cut], samples[cut:]


def data_moments(spec: DataModelSpec) -> tuple[np.ndarray, np.ndarray]:
    """True mean and covariance of a Gaussian variant (same stream as sample_data)."""
    if spec.variant == "heavytail":
        raise ValueError("heavy-tailed data has no finite covariance")
    rng = np.random.default_rng(spec.seed)
    _, mu, cov = _correlated_gaussian(rng, spec.n, spec.m, spec.variant == "inverse")
    return mu, cov
