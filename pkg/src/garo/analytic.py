"""Closed-form instances used as exact references.

Half-line location problem: prediction at 0, the truth anywhere on
[0, inf), decision mu >= 0 with regret (mu - gamma)**2 against the budget
alpha * (1 + gamma)**q.

Uncertain least squares: ||A x - b|| + gamma ||x|| is affine in gamma, so
a concave budget only binds at the two ends of the radius interval.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .conic import ConicProgram, solve_or_raise
from .rates import Constant


def weber_adversarial_regret(mu: float, gamma: float) -> float:
    return (mu - gamma) ** 2


def _worst_ratio(mu: float, q: float) -> tuple[float, float]:
    """sup over gamma >= 0 of (mu - gamma)^2 / (1 + gamma)^q and its argmax.

    d/dgamma vanishes where 2 (gamma - mu)(1 + gamma) = q (gamma - mu)^2,
    i.e. gamma = (q mu + 2) / (q - 2) for gamma > mu. The other candidate is
    the left end gamma = 0.
    """
    g = (q * mu + 2.0) / (q - 2.0)
    interior = (g - mu) ** 2 / (1.0 + g) ** q
    at_zero = mu * mu
    return (interior, g) if interior > at_zero else (at_zero, 0.0)


def weber_garo(q: float):
    """Optimal decision(s) and budget factor for the half-line instance.

    Returns ``((0.0, 1.0), 1.0)`` for q = 2, where every mu in [0, 1] is
    optimal, and ``(mu, alpha)`` for q > 2.
    """
    if q < 2:
        raise ValueError("the absolute budget is infeasible for q < 2")
    if q == 2:
        return (0.0, 1.0), 1.0
    const = 4.0 * (q - 2.0) ** (q - 2.0) / q ** q

    def balance(mu: float) -> float:
        return mu * mu * (1.0 + mu) ** (q - 2.0) - const

    # increasing on [0, inf), negative at 0 and nonnegative at sqrt(const)
    mu = brentq(balance, 0.0, math.sqrt(const), xtol=1e-15, rtol=1e-15)
    alpha, _ = _worst_ratio(mu, q)
    return mu, alpha


def _ls_program(A0: np.ndarray, b: np.ndarray, extra: int):
    m, n = A0.shape
    # variables [x, s_fit, s_norm, extras]
    nv = n + 2 + extra
    prog = ConicProgram(nv, np.zeros(nv))
    sel = np.zeros((n, nv))
    sel[:, :n] = np.eye(n)
    fit = np.zeros((m, nv))
    fit[:, :n] = A0
    e = np.eye(nv)
    prog.add_soc(fit, -b, e[n], 0.0)
    prog.add_soc(sel, np.zeros(n), e[n + 1], 0.0)
    return prog


def regularized_ls(A0, b, gamma: float) -> tuple[np.ndarray, float]:
    """min ||A0 x - b|| + gamma ||x||."""
    A0 = np.atleast_2d(np.asarray(A0, dtype=float))
    b = np.asarray(b, dtype=float)
    n = A0.shape[1]
    prog = _ls_program(A0, b, 0)
    prog.objective[n] = 1.0
    prog.objective[n + 1] = gamma
    out = solve_or_raise(prog, f"regularized least squares at {gamma}")
    x = out.primal[:n]
    return x, float(np.linalg.norm(A0 @ x - b) + gamma * np.linalg.norm(x))


def regression_worst_case(A0, b, x, gamma: float) -> float:
    return float(np.linalg.norm(np.asarray(A0) @ x - b) + gamma * np.linalg.norm(x))


def regression_two_point(A0, b, gamma_max: float, rate=None) -> tuple[np.ndarray, float]:
    rate = rate if rate is not None else Constant()
    A0 = np.atleast_2d(np.asarray(A0, dtype=float))
    b = np.asarray(b, dtype=float)
    n = A0.shape[1]
    v0 = regularized_ls(A0, b, 0.0)[1]
    v1 = regularized_ls(A0, b, gamma_max)[1]
    prog = _ls_program(A0, b, 1)
    a = n + 2
    prog.objective[a] = 1.0
    prog.lower[a] = 0.0
    row0 = np.zeros(prog.num_vars)
    row0[n], row0[a] = 1.0, -rate(0.0)
    prog.add_linear(row0, "<=", v0)
    row1 = np.zeros(prog.num_vars)
    row1[n], row1[n + 1], row1[a] = 1.0, gamma_max, -rate(gamma_max)
    prog.add_linear(row1, "<=", v1)
    out = solve_or_raise(prog, "two-point regression problem")
    x = out.primal[:n]
    regrets = [regression_worst_case(A0, b, x, 0.0) - v0, regression_worst_case(A0, b, x, gamma_max) - v1]
    phis = [rate(0.0), rate(gamma_max)]
    alpha = max([0.0] + [r / p for r, p in zip(regrets, phis) if p > 0])
    return x, alpha
