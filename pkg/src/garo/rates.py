"""Rate functions for the regret budget and their interval conjugates.

The conjugate over an interval [a, b] is max_{a<=g<=b} delta*g - phi(g).
Each rate also reports the maximizer, which separation routines need.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


def _best(delta: float, phi, candidates) -> tuple[float, float]:
    best_val, best_g = -math.inf, candidates[0]
    for g in candidates:
        val = delta * g - phi(g)
        if val > best_val:
            best_val, best_g = val, g
    return best_val, best_g


@dataclass(frozen=True)
class Constant:
    def __call__(self, gamma: float) -> float:
        return 1.0

    @property
    def concave(self) -> bool:
        return True

    def lipschitz(self, a: float, b: float) -> float:
        return 0.0

    def conjugate(self, a: float, b: float, delta: float) -> tuple[float, float]:
        return (delta * b - 1.0, b) if delta * b > delta * a else (delta * a - 1.0, a)


@dataclass(frozen=True)
class Power:
    """(1 + gamma)**q"""

    q: float

    def __post_init__(self):
        if self.q < 0:
            raise ValueError("exponent must be nonnegative")

    def __call__(self, gamma: float) -> float:
        return (1.0 + gamma) ** self.q

    @property
    def concave(self) -> bool:
        return self.q <= 1.0

    def lipschitz(self, a: float, b: float) -> float:
        if self.q == 0:
            return 0.0
        edge = b if self.q >= 1 else a
        return self.q * (1.0 + edge) ** (self.q - 1.0)

    def conjugate(self, a: float, b: float, delta: float) -> tuple[float, float]:
        cands = [a, b]
        q = self.q
        if q not in (0.0, 1.0) and delta > 0:
            # d/dg [delta g - (1+g)^q] = 0  <=>  (1+g)^(q-1) = delta/q
            # in logs: a huge stationary point simply clips to b
            log_g = math.log(delta / q) / (q - 1.0)
            g = math.exp(log_g) - 1.0 if log_g < 700.0 else math.inf
            cands.append(min(max(g, a), b))
        return _best(delta, self, cands)


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Piecewise-linear interpolation through (gamma, phi) knots."""

    gammas: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gammas, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.shape != v.shape or g.size == 0:
            raise ValueError("knots and values must be nonempty and equally long")
        if np.any(np.diff(g) <= 0):
            raise ValueError("knots must be strictly increasing")
        if np.any(v < 0) or np.any(np.diff(v) < -1e-12):
            raise ValueError("tabulated rate must be nonnegative and nondecreasing")
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "values", v)

    def __call__(self, gamma: float) -> float:
        if gamma < self.gammas[0] - 1e-12 or gamma > self.gammas[-1] + 1e-12:
            raise ValueError(f"radius {gamma} outside tabulated range")
        return float(np.interp(gamma, self.gammas, self.values))

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.gammas)

    @property
    def concave(self) -> bool:
        return bool(np.all(np.diff(self.slopes) <= 1e-12))

    def lipschitz(self, a: float, b: float) -> float:
        s = self.slopes
        return float(np.max(np.abs(s))) if s.size else 0.0

    def conjugate(self, a: float, b: float, delta: float) -> tuple[float, float]:
        inner = [g for g in self.gammas if a < g < b]
        return _best(delta, self, [a, *inner, b])


@dataclass(frozen=True, eq=False)
class OracleCost:
    """Relative rate: phi is the oracle robust cost itself.

    ``oracle`` maps a radius to v*_wc. Oracle costs are concave in the
    radius for norm-ball and ellipsoidal families, so the conjugate over an
    interval is attained at its ends (plus any listed knots).
    """

    oracle: Callable[[float], float]
    knots: tuple = ()
    slope_bound: float | None = None
    is_concave: bool = True

    @classmethod
    def from_path(cls, path) -> "OracleCost":
        slope = max(abs(s.slope) for s in path.segments)
        return cls(path.value, tuple(float(g) for g in path.breakpoints), slope, True)

    def __call__(self, gamma: float) -> float:
        return float(self.oracle(gamma))

    @property
    def concave(self) -> bool:
        return self.is_concave

    def lipschitz(self, a: float, b: float) -> float:
        if self.slope_bound is None:
            raise ValueError("no slope bound attached to this oracle rate")
        return self.slope_bound

    def conjugate(self, a: float, b: float, delta: float) -> tuple[float, float]:
        inner = [g for g in self.knots if a < g < b]
        return _best(delta, self, [a, *inner, b])


RateFunction = Constant | Power | Tabulated | OracleCost


def rate_eval(phi, gamma: float) -> float:
    return float(phi(gamma))


def interval_conjugate(phi, interval, delta: float) -> float:
    a, b = interval
    if a > b:
        raise ValueError("empty interval")
    return phi.conjugate(float(a), float(b), float(delta))[0]


def perspective_argmax(phi, interval, delta: float, alpha: float) -> tuple[float, float]:
    """(alpha * phi*(delta/alpha), maximizer), with the recession value at alpha = 0."""
    a, b = map(float, interval)
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if alpha == 0:
        return (delta * b, b) if delta * b > delta * a else (delta * a, a)
    val, g = phi.conjugate(a, b, delta / alpha)
    return alpha * val, g


def perspective_conjugate(phi, interval, delta: float, alpha: float) -> float:
    return perspective_argmax(phi, interval, delta, alpha)[0]
