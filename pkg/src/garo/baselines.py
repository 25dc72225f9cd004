"""Comparison methods: robust, scenario-robust, satisficing and scenario regret."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .conic import ConicProgram, SolverError, Status, solve, solve_or_raise
from .robust import LinearDecisionProblem, RobustOracle, robust_oracle, worst_case_form

log = logging.getLogger(__name__)


def solve_ro(prob, model, gamma: float) -> tuple[np.ndarray, float]:
    return robust_oracle(prob, model, gamma)


def _scenario_array(scenarios) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(scenarios, dtype=float))
    if pts.size == 0 or pts.shape[0] == 0:
        raise ValueError("scenario list is empty")
    return pts


def solve_ro_discrete(prob: LinearDecisionProblem, scenarios) -> tuple[np.ndarray, float]:
    pts = _scenario_array(scenarios)
    n = prob.n
    prog = prob.program(extra=1)
    prog.objective[n] = 1.0
    for p in np.unique(pts, axis=0):
        prog.add_linear(np.concatenate([p, [-1.0]]), "<=", 0.0)
    out = solve_or_raise(prog, "scenario-robust problem")
    x = out.primal[:n]
    return x, float(np.max(pts @ x))


@dataclass
class SatConfig:
    beta: float
    grid: np.ndarray

    def __post_init__(self):
        if self.beta < 1:
            raise ValueError("target factor must be at least 1")
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.size == 0 or np.any(np.diff(self.grid) < 0):
            raise ValueError("grid must be nonempty and sorted")


@dataclass
class SatResult:
    x: np.ndarray
    alpha: float
    target: float
    trivial: bool = False


def satisficing_precheck(oracle: RobustOracle, cfg: SatConfig) -> tuple[float, bool]:
    """Target value and whether it is already met robustly at the largest radius."""
    v0 = oracle.value(cfg.grid[0])
    target = cfg.beta * v0
    if target < v0 - 1e-12 * (1.0 + abs(v0)):
        raise SolverError(Status.INFEASIBLE, f"target {target:.6g} below the nominal optimum {v0:.6g}")
    vmax = oracle.value(cfg.grid[-1])
    trivial = target > vmax
    if trivial:
        log.warning("satisficing target %.6g exceeds the robust cost %.6g at the largest radius", target, vmax)
    return target, trivial


def solve_satisficing(prob, model, cfg: SatConfig, oracle=None) -> SatResult:
    oracle = oracle if oracle is not None else RobustOracle(prob, model)
    target, trivial = satisficing_precheck(oracle, cfg)
    form = worst_case_form(prob, model, extra=1)
    prog = form.prog
    a = form.extra_index(0)
    prog.objective = np.zeros(prog.num_vars)
    prog.objective[a] = 1.0
    prog.lower[a] = 0.0
    for g in cfg.grid:
        for coef, const in form.rows(g):
            row = coef.copy()
            row[a] -= g
            prog.add_linear(row, "<=", target - const)
    out = solve(prog)
    if not out.ok:
        raise SolverError(out.status, "satisficing problem")
    x = out.primal[: prob.n]
    excess = np.array([model.worst_case(x, g) for g in cfg.grid]) - target
    pos = cfg.grid > 0
    alpha = max(0.0, float(np.max(excess[pos] / cfg.grid[pos]))) if np.any(pos) else 0.0
    return SatResult(x, alpha, target, trivial)


class NominalCache:
    """min_{x in X} x.p per scenario, reused across nested scenario sets."""

    def __init__(self, prob: LinearDecisionProblem):
        self.prob = prob
        self._values: dict[bytes, float] = {}

    def __call__(self, p) -> float:
        p = np.asarray(p, dtype=float)
        key = p.tobytes()
        if key not in self._values:
            prog = self.prob.program()
            prog.objective = p.copy()
            out = solve(prog)
            if out.status is Status.UNBOUNDED:
                raise SolverError(out.status, "nominal problem unbounded; the region should be bounded")
            if not out.ok:
                raise SolverError(out.status, "nominal problem")
            self._values[key] = out.objective_value
        return self._values[key]


def solve_regret_discrete(prob: LinearDecisionProblem, scenarios, cache: NominalCache | None = None
                          ) -> tuple[np.ndarray, float]:
    pts = np.unique(_scenario_array(scenarios), axis=0)
    cache = cache if cache is not None else NominalCache(prob)
    best = np.array([cache(p) for p in pts])
    n = prob.n
    prog = prob.program(extra=1)
    prog.objective[n] = 1.0
    for p, m in zip(pts, best):
        prog.add_linear(np.concatenate([p, [-1.0]]), "<=", m)
    out = solve_or_raise(prog, "scenario regret problem")
    x = out.primal[:n]
    return x, max(0.0, float(np.max(pts @ x - best)))
