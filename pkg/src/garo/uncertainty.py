"""Parametrized uncertainty-set families and their worst-case costs.

Every family is nested in its radius: a larger radius never shrinks the set.

Conventions
-----------
``NormBall(p0, norm)`` is ``{p : ||p - p0|| <= gamma}``; its worst-case cost
uses the dual norm. ``Ellipsoid(p0, sigma)`` bounds the *squared*
Mahalanobis distance by ``gamma``, so the worst-case cost grows like
``sqrt(gamma)``. ``KLBall`` bounds ``KL(P0, P)`` by ``gamma**2``.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

MIN_EIGENVALUE = 1e-4

DUAL_NORM = {"l1": np.inf, "linf": 1, "l2": 2}


def _digest(*arrays) -> str:
    h = hashlib.sha1()
    for a in arrays:
        a = np.ascontiguousarray(np.asarray(a, dtype=float))
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not gamma >= 0.0:
        raise ValueError(f"radius must be nonnegative, got {gamma}")
    return gamma


@dataclass(frozen=True)
class GammaInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo < 0 or self.hi < self.lo:
            raise ValueError(f"invalid radius interval [{self.lo}, {self.hi}]")

    def grid(self, size: int) -> np.ndarray:
        if size == 1:
            return np.array([self.lo])
        return np.linspace(self.lo, self.hi, size)

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True, eq=False)
class NormBall:
    p0: np.ndarray
    norm: str = "l2"

    def __post_init__(self):
        object.__setattr__(self, "p0", np.asarray(self.p0, dtype=float))
        norm = self.norm.lower()
        if norm not in DUAL_NORM:
            raise ValueError(f"unsupported norm {self.norm!r}")
        object.__setattr__(self, "norm", norm)

    @property
    def key(self) -> str:
        return f"norm:{self.norm}:{_digest(self.p0)}"

    @property
    def polyhedral(self) -> bool:
        return self.norm in ("l1", "linf")

    def dual_norm(self, x) -> float:
        return float(np.linalg.norm(np.asarray(x, dtype=float), DUAL_NORM[self.norm]))

    def worst_case(self, x, gamma: float) -> float:
        gamma = _check_gamma(gamma)
        x = np.asarray(x, dtype=float)
        return float(x @ self.p0 + gamma * self.dual_norm(x))

    def statistic(self, points) -> np.ndarray:
        diff = np.atleast_2d(points) - self.p0
        order = {"l1": 1, "l2": 2, "linf": np.inf}[self.norm]
        return np.linalg.norm(diff, ord=order, axis=1)


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """Squared Mahalanobis ball around ``p0`` with shape matrix ``sigma``."""

    p0: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        p0 = np.asarray(self.p0, dtype=float)
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        if sigma.shape != (p0.size, p0.size):
            raise ValueError("shape matrix does not match p0")
        if np.max(np.abs(sigma - sigma.T), initial=0.0) > 1e-10:
            raise ValueError("shape matrix must be symmetric")
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "sigma", sigma)
        # sigma = L L^T, so x^T sigma x = ||L^T x||^2
        object.__setattr__(self, "_chol", np.linalg.cholesky(sigma))
        object.__setattr__(self, "_inv", np.linalg.inv(sigma))

    @property
    def key(self) -> str:
        return f"ellipsoid:{_digest(self.p0, self.sigma)}"

    @property
    def chol_t(self) -> np.ndarray:
        return self._chol.T

    def spread(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(self._chol.T @ x))

    def worst_case(self, x, gamma: float) -> float:
        gamma = _check_gamma(gamma)
        x = np.asarray(x, dtype=float)
        return float(x @ self.p0 + math.sqrt(gamma) * self.spread(x))

    def statistic(self, points) -> np.ndarray:
        diff = np.atleast_2d(points) - self.p0
        return np.einsum("ij,jk,ik->i", diff, self._inv, diff)


@dataclass(frozen=True, eq=False)
class DiscreteScenarios:
    """A finite scenario list, optionally filtered by a metric ball.

    Without ``metric`` every point belongs to every set and the worst case
    is the plain maximum over the list.
    """

    points: np.ndarray
    metric: Union[Ellipsoid, NormBall, None] = None

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[0] == 0:
            raise ValueError("scenario list is empty")
        object.__setattr__(self, "points", pts)
        stats = np.zeros(len(pts)) if self.metric is None else self.metric.statistic(pts)
        object.__setattr__(self, "_stats", stats)

    @property
    def statistics(self) -> np.ndarray:
        return self._stats

    @property
    def key(self) -> str:
        return f"discrete:{_digest(self.points)}:{'' if self.metric is None else self.metric.key}"

    def active(self, gamma: float) -> np.ndarray:
        gamma = _check_gamma(gamma)
        return self.points[self._stats <= gamma]

    def worst_case(self, x, gamma: float) -> float:
        pts = self.active(gamma)
        if len(pts) == 0:
            raise ValueError(f"no scenario within radius {gamma}")
        return float(np.max(pts @ np.asarray(x, dtype=float)))


LossProvider = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True, eq=False)
class KLBall:
    """Distributions with KL(P0, P) <= gamma**2 over a finite support."""

    losses: LossProvider
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be a probability vector")
        object.__setattr__(self, "weights", w)

    def loss_table(self, x=None) -> np.ndarray:
        table = self.losses(x) if callable(self.losses) else self.losses
        table = np.asarray(table, dtype=float)
        if table.shape != self.weights.shape:
            raise ValueError("loss table and weights differ in length")
        return table

    def worst_case(self, x, gamma: float) -> float:
        gamma = _check_gamma(gamma)
        return kl_worst_case(self.loss_table(x), self.weights, gamma)

    def lipschitz(self, x=None) -> float:
        table = self.loss_table(x)
        return math.sqrt(2.0) * float(table.max() - table.min())


UncertaintyModel = Union[NormBall, Ellipsoid, DiscreteScenarios, KLBall]


def kl_worst_case(losses: np.ndarray, weights: np.ndarray, gamma: float) -> float:
    """sup of E_P[loss] over KL(P0, P) <= gamma**2, via its one-dimensional dual.

    The dual objective ``g(a) = a - exp(-gamma**2) * exp(sum w log(a - l))``
    is convex on ``a > max l``; its derivative is bisected to 1e-10.
    """
    losses = np.asarray(losses, dtype=float)
    w = np.asarray(weights, dtype=float)
    lmax, lmin = float(losses.max()), float(losses.min())
    spread = lmax - lmin
    if spread == 0.0:
        return lmax
    mean = float(w @ losses)
    if gamma == 0.0:
        return mean
    shrink = math.exp(-gamma * gamma)
    support = w > 0

    def geo(a: float) -> float:
        return math.exp(float(w[support] @ np.log(a - losses[support])))

    def deriv(a: float) -> float:
        return 1.0 - shrink * geo(a) * float(w[support] @ (1.0 / (a - losses[support])))

    def dual(a: float) -> float:
        return a - shrink * geo(a)

    left = lmax + 1e-12 * max(1.0, abs(lmax))
    if deriv(left) >= 0.0:
        # minimizer sits at the boundary; with no weight at the top loss the
        # geometric mean stays positive there
        with np.errstate(divide="ignore"):
            logs = np.log(lmax - losses[support])
        edge = lmax - shrink * math.exp(float(w[support] @ logs))
        return float(min(edge, lmax))
    right = lmax + 10.0 * spread + 1.0
    while deriv(right) < 0.0:
        # small radii push the minimizer far out; widen geometrically
        right = lmax + 2.0 * (right - lmax)
        if right - lmax > 1e300:
            return mean
    lo, hi = left, right
    while hi - lo > 1e-10 * max(1.0, hi - lmax):
        mid = 0.5 * (lo + hi)
        if deriv(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    value = dual(0.5 * (lo + hi))
    return float(min(max(value, mean), lmax))


def worst_case_cost(model: UncertaintyModel, x, gamma: float) -> float:
    return model.worst_case(x, gamma)


def regularize_covariance(sigma) -> np.ndarray:
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if np.max(np.abs(sigma - sigma.T), initial=0.0) > 1e-10:
        raise ValueError("covariance must be symmetric")
    if np.linalg.eigvalsh(sigma)[0] >= MIN_EIGENVALUE:
        return sigma.copy()
    return sigma + MIN_EIGENVALUE * np.eye(sigma.shape[0])


def nearest_rank(values, rho: float) -> float:
    """The ceil(rho*N)-th smallest value; 0 when no point is required."""
    values = np.sort(np.asarray(values, dtype=float))
    k = math.ceil(rho * len(values))
    return 0.0 if k == 0 else float(values[k - 1])


def calibrate_gamma(model: UncertaintyModel, data, rho: float) -> float:
    if not 0.0 <= rho < 1.0:
        raise ValueError("coverage fraction must lie in [0, 1)")
    if not isinstance(model, (Ellipsoid, NormBall)):
        raise TypeError(f"{type(model).__name__} has no per-point radius statistic")
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if data.shape[0] == 0:
        raise ValueError("no data to calibrate on")
    if data.shape[1] != model.p0.size and data.shape[0] == model.p0.size:
        data = data.T
    return nearest_rank(model.statistic(data), rho)


def filter_scenarios(points, model: Ellipsoid, gamma: float) -> np.ndarray:
    """Scenarios inside the squared-Mahalanobis ball of radius gamma."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return points[model.statistic(points) <= _check_gamma(gamma)]
