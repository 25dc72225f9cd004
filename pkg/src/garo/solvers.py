"""Regret-budget solvers: discretized, two-point and constraint generation.

All three minimize alpha subject to A(x, gamma) <= alpha * phi(gamma), where
A is the adversarial regret, over a finite set of radii that is either given
(discretized), the two interval ends (two-point), or grown by a separation
oracle (constraint generation).
"""
from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .conic import TOL_FEAS, TOL_OBJ, SolverError, Status, solve
from .rates import Constant, OracleCost, Power, Tabulated, perspective_argmax
from .robust import (LinearDecisionProblem, OraclePath, RobustOracle, trace_oracle_path,
                     worst_case_form)
from .uncertainty import DiscreteScenarios, Ellipsoid, GammaInterval, NormBall

log = logging.getLogger(__name__)


@dataclass
class GaroSolution:
    x: np.ndarray
    alpha: float
    grid: np.ndarray
    slacks: np.ndarray
    meta: dict = field(default_factory=dict)
    log: list = field(default_factory=list)


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, last: GaroSolution, violation: float):
        super().__init__(message)
        self.last = last
        self.violation = violation


def _as_interval(interval) -> GammaInterval:
    return interval if isinstance(interval, GammaInterval) else GammaInterval(*map(float, interval))


def solve_garo_discretized(prob: LinearDecisionProblem, model, grid, rate, oracle=None) -> GaroSolution:
    start = time.perf_counter()
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size == 0 or np.any(np.diff(grid) < 0) or grid[0] < 0:
        raise ValueError("grid must be nonempty, sorted and nonnegative")
    oracle = oracle if oracle is not None else RobustOracle(prob, model)
    vstar = np.array([oracle.value(g) for g in grid])
    phis = np.array([rate(g) for g in grid])
    if np.any(phis < 0):
        raise ValueError("rate function must be nonnegative")

    form = worst_case_form(prob, model, extra=1)
    prog = form.prog
    a = form.extra_index(0)
    prog.objective = np.zeros(prog.num_vars)
    prog.objective[a] = 1.0
    prog.lower[a] = 0.0
    for g, v, phi in zip(grid, vstar, phis):
        for coef, const in form.rows(g):
            row = coef.copy()
            row[a] -= phi
            prog.add_linear(row, "<=", v - const)
    out = solve(prog)
    if out.status is Status.INFEASIBLE:
        raise SolverError(out.status, "no decision meets the zero-budget radii exactly")
    if not out.ok:
        raise SolverError(out.status, "discretized master problem")
    x = out.primal[: prob.n]
    regrets = np.array([model.worst_case(x, g) for g in grid]) - vstar
    # certify alpha for the returned x exactly; differs from the solver's
    # value only by its tolerance
    pos = phis > 0
    alpha = max(0.0, float(np.max(regrets[pos] / phis[pos]))) if np.any(pos) else 0.0
    slacks = alpha * phis - regrets
    meta = {"method": "discretized", "runtime": time.perf_counter() - start,
            "solver_alpha": float(out.primal[a]), "oracle_values": vstar}
    return GaroSolution(x, alpha, grid, slacks, meta)


def _check_two_point(model, rate) -> None:
    if isinstance(model, Ellipsoid):
        raise TypeError("ellipsoidal worst-case cost is affine in sqrt(gamma), not gamma")
    if not isinstance(model, NormBall):
        raise TypeError("two-point reduction needs a worst-case cost affine in gamma")
    if isinstance(rate, Power) and rate.q > 1:
        raise ValueError("power rate with q > 1 is convex")
    if not rate.concave:
        raise ValueError("two-point reduction needs a concave rate")


def solve_garo_two_point(prob, model, interval, rate, oracle=None, audit_size: int = 100) -> GaroSolution:
    _check_two_point(model, rate)
    interval = _as_interval(interval)
    oracle = oracle if oracle is not None else RobustOracle(prob, model)
    ends = sorted({interval.lo, interval.hi})
    sol = solve_garo_discretized(prob, model, ends, rate, oracle)
    audit = interval.grid(audit_size)
    worst = max(oracle.regret(sol.x, g) - sol.alpha * rate(g) - TOL_FEAS * (1.0 + abs(oracle.value(g)))
                for g in audit)
    if worst > 0:
        raise RuntimeError(f"two-point solution violates the audit grid by {worst:.3g}")
    sol.meta.update(method="two_point", audit_max_violation=worst)
    return sol


def discretization_error_bound(delta: float, lip: float, rate_lip: float, alpha: float) -> float:
    return delta * (lip + alpha * rate_lip)


# --- separation ---------------------------------------------------------------

def _piyavskii(f: Callable[[float], float], a: float, b: float, lip: float, tol: float,
               max_evals: int = 20_000, cell_bound=None) -> tuple[float, float]:
    """Global max of an L-Lipschitz function on [a, b] by saw-tooth bounds.

    ``cell_bound(x0, f0, x1, f1)`` may return a second valid upper bound on a
    cell together with its maximizer; the smaller bound is kept and the next
    evaluation goes to its maximizer.
    """
    if b <= a:
        return a, f(a)
    fa, fb = f(a), f(b)
    best = (fa, a) if fa >= fb else (fb, b)
    heap = []

    def push(x0, f0, x1, f1):
        peak = 0.5 * (f0 + f1) + 0.5 * lip * (x1 - x0)
        split = min(max(0.5 * (x0 + x1) + (f1 - f0) / (2.0 * lip), x0), x1)
        if cell_bound is not None:
            other, where = cell_bound(x0, f0, x1, f1)
            if other < peak:
                peak, split = other, where
        if peak - best[0] > tol:
            heapq.heappush(heap, (-peak, x0, f0, x1, f1, split))

    push(a, fa, b, fb)
    evals = 2
    while heap and evals < max_evals:
        neg_peak, x0, f0, x1, f1, xm = heapq.heappop(heap)
        if -neg_peak - best[0] <= tol:
            heap.clear()
            break
        width = x1 - x0
        if width <= 1e-14 * (1.0 + abs(x1)):
            continue
        if xm - x0 <= 1e-3 * width or x1 - xm <= 1e-3 * width:
            # a bound peaking at an end point: bisect so the cell still shrinks
            xm = 0.5 * (x0 + x1)
        fm = f(xm)
        evals += 1
        if fm > best[0]:
            best = (fm, xm)
        push(x0, f0, xm, fm)
        push(xm, fm, x1, f1)
    if heap and -heap[0][0] - best[0] > tol:
        # typical when the maximum is attained on a whole flat stretch
        log.info("saw-tooth search stopped after %d evaluations, bound gap %.3g", evals,
                 -heap[0][0] - best[0])
    return best[1], best[0]


def _dominating(prob: LinearDecisionProblem) -> np.ndarray:
    return np.maximum(np.abs(prob.lo), np.abs(prob.hi))


def lipschitz_bound(prob, model, x, alpha: float, interval, rate) -> float:
    """A valid Lipschitz constant for the separation objective.

    For ellipsoids the constant refers to the square-root radius r.
    """
    interval = _as_interval(interval)
    big = _dominating(prob)
    if not np.all(np.isfinite(big)):
        raise ValueError("box bounds needed for a Lipschitz constant")
    if isinstance(model, NormBall):
        # both v_wc(x, .) and v*_wc have slopes in [0, max_X ||x||_*]
        lip = max(model.dual_norm(x), model.dual_norm(big))
        return lip + alpha * rate.lipschitz(interval.lo, interval.hi)
    if isinstance(model, Ellipsoid):
        scale = math.sqrt(float(np.linalg.eigvalsh(model.sigma)[-1]))
        lip = max(model.spread(x), scale * float(np.linalg.norm(big)))
        r_hi = math.sqrt(interval.hi)
        return lip + alpha * 2.0 * r_hi * rate.lipschitz(interval.lo, interval.hi)
    raise TypeError(f"no Lipschitz constant for {type(model).__name__}")


def _concavity_bound(model, x, alpha: float, rate, oracle, to_gamma):
    """Cell bound from concavity of gamma -> v*(gamma) and of v_wc(x, .).

    On a cell, v* lies above its chord and v_wc(x, .) below its tangent at
    the midpoint, so the violation is at most an affine function minus
    alpha * phi, maximized exactly through the rate conjugate.
    """
    c_x = float(model.p0 @ x)
    if isinstance(model, Ellipsoid):
        s_x = model.spread(x)

        def tangent(g):
            return c_x + s_x * math.sqrt(g), 0.5 * s_x / math.sqrt(g)
    else:
        s_x = model.dual_norm(x)

        def tangent(g):
            return c_x + s_x * g, s_x

    def bound(t0, f0, t1, f1):
        g0, g1 = to_gamma(t0), to_gamma(t1)
        if g1 <= g0:
            return math.inf, t0
        v0, v1 = oracle.value(g0), oracle.value(g1)
        chord = (v1 - v0) / (g1 - g0)
        gm = 0.5 * (g0 + g1)
        top, slope = tangent(gm)
        intercept = top - slope * gm - v0 + chord * g0
        val, g = perspective_argmax(rate, (g0, g1), slope - chord, alpha)
        g = min(max(g, g0), g1)
        return intercept + val, (math.sqrt(g) if isinstance(model, Ellipsoid) else g)

    return bound


def separate_lipschitz(prob, model, x, alpha: float, interval, rate, lipschitz: float,
                       oracle=None, tol: float = 1e-7, concavity: bool = True,
                       max_evals: int = 20_000) -> tuple[float, float]:
    """Most violated radius via Shubert-Piyavskii.

    Ellipsoidal models are searched in r = sqrt(gamma), where the worst-case
    cost is affine; ``lipschitz`` must then be a constant in r. With
    ``concavity`` each cell's saw-tooth bound is tightened by a chord bound on
    the robust value, which removes the slow crawl near smooth or flat maxima.
    """
    if lipschitz <= 0:
        raise ValueError("Lipschitz constant must be positive")
    interval = _as_interval(interval)
    oracle = oracle if oracle is not None else RobustOracle(prob, model)
    x = np.asarray(x, dtype=float)
    ellipsoid = isinstance(model, Ellipsoid)

    def to_gamma(t: float) -> float:
        return min(max(t * t, interval.lo), interval.hi) if ellipsoid else t

    def violation(t: float) -> float:
        g = to_gamma(t)
        return oracle.regret(x, g) - alpha * rate(g)

    cut = None
    if concavity and isinstance(model, (NormBall, Ellipsoid)):
        cut = _concavity_bound(model, x, alpha, rate, oracle, to_gamma)
    lo, hi = (math.sqrt(interval.lo), math.sqrt(interval.hi)) if ellipsoid else (interval.lo, interval.hi)
    t, v = _piyavskii(violation, lo, hi, lipschitz, tol, max_evals, cut)
    return to_gamma(t), v


def separate_parametric(prob, model, x, alpha: float, interval, rate,
                        path: OraclePath | None = None) -> tuple[float, float]:
    """Exact separation for polyhedral norm balls, one oracle segment at a time."""
    if not isinstance(model, NormBall) or not model.polyhedral:
        raise TypeError("parametric separation needs an l1 or linf norm ball")
    interval = _as_interval(interval)
    path = path if path is not None else trace_oracle_path(prob, model, interval)
    x = np.asarray(x, dtype=float)
    c_x, s_x = float(model.p0 @ x), model.dual_norm(x)
    best = (-math.inf, interval.lo)
    for seg in path.segments:
        lo, hi = max(seg.lo, interval.lo), min(seg.hi, interval.hi)
        if lo > hi:
            continue
        val, g = perspective_argmax(rate, (lo, hi), s_x - seg.slope, alpha)
        val += c_x - seg.intercept
        if val > best[0]:
            best = (val, g)
    return best[1], best[0]


def separate_discrete(prob, model: DiscreteScenarios, x, alpha: float, interval, rate,
                      oracle=None) -> tuple[float, float]:
    """Exact separation for scenario sets: regret only changes where a scenario enters."""
    interval = _as_interval(interval)
    oracle = oracle if oracle is not None else RobustOracle(prob, model)
    stats = model.statistics
    cands = sorted({interval.lo, *[float(s) for s in stats if interval.lo < s <= interval.hi]})
    best = (-math.inf, interval.lo)
    for g in cands:
        v = oracle.regret(x, g) - alpha * rate(g)
        if v > best[0]:
            best = (v, g)
    return best[1], best[0]


def default_separation(prob, model, interval, rate, oracle=None):
    interval = _as_interval(interval)
    oracle = oracle if oracle is not None else RobustOracle(prob, model)
    if isinstance(model, NormBall) and model.polyhedral:
        path = trace_oracle_path(prob, model, interval)
        return lambda x, alpha: separate_parametric(prob, model, x, alpha, interval, rate, path)
    if isinstance(model, DiscreteScenarios):
        return lambda x, alpha: separate_discrete(prob, model, x, alpha, interval, rate, oracle)

    def sep(x, alpha):
        lip = lipschitz_bound(prob, model, x, alpha, interval, rate)
        return separate_lipschitz(prob, model, x, alpha, interval, rate, lip, oracle)

    return sep


def solve_garo_constraint_generation(prob, model, interval, rate, eps: float = 1e-6,
                                     separation=None, max_iter: int = 500,
                                     oracle=None) -> GaroSolution:
    if eps <= 0:
        raise ValueError("tolerance must be positive")
    start = time.perf_counter()
    interval = _as_interval(interval)
    oracle = oracle if oracle is not None else RobustOracle(prob, model)
    separation = separation or default_separation(prob, model, interval, rate, oracle)
    cuts = sorted({interval.lo, interval.hi})
    log = []
    sol = None
    for it in range(1, max_iter + 1):
        sol = solve_garo_discretized(prob, model, cuts, rate, oracle)
        g, viol = separation(sol.x, sol.alpha)
        log.append({"iteration": it, "alpha": sol.alpha, "gamma": float(g), "violation": float(viol),
                    "cuts": len(cuts)})
        if viol < eps:
            break
        if any(abs(g - c) <= 1e-12 * (1.0 + abs(c)) for c in cuts):
            # master already holds this cut: what remains is solver noise
            break
        cuts = sorted(cuts + [float(g)])
    else:
        raise ConvergenceError(f"no eps-feasible point after {max_iter} iterations", sol, viol)
    phi_min = rate(interval.lo)
    sol.meta.update(method="constraint_generation", iterations=len(log), final_violation=float(viol),
                    gap_bound=eps / phi_min if phi_min > 0 else math.inf,
                    runtime=time.perf_counter() - start)
    sol.log = log
    return sol
