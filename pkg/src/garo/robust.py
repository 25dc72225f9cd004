"""Robust oracles, adversarial regret and the oracle-path tracer."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .conic import (TOL_FEAS, ConicProgram, ParametricSegment, SolverError, Status, solve,
                    solve_lp_parametric, solve_or_raise)
from .uncertainty import (DiscreteScenarios, Ellipsoid, GammaInterval, NormBall, UncertaintyModel,
                          _check_gamma)


@dataclass(eq=False)
class LinearDecisionProblem:
    """min x.p over X = {x : A x >= b, lo <= x <= hi}."""

    A: np.ndarray
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    check: bool = True

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = self.A.shape[1]
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.lo = np.broadcast_to(np.asarray(self.lo, dtype=float), (n,)).copy()
        self.hi = np.broadcast_to(np.asarray(self.hi, dtype=float), (n,)).copy()
        if self.b.size != self.A.shape[0]:
            raise ValueError("rhs length differs from number of rows")
        if self.check:
            self._check_region()

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @classmethod
    def simplex(cls, n: int) -> "LinearDecisionProblem":
        # x >= 0, sum x = 1 written as two inequalities
        ones = np.ones((1, n))
        return cls(np.vstack([ones, -ones]), [1.0, -1.0], np.zeros(n), np.ones(n))

    def program(self, extra: int = 0) -> ConicProgram:
        nv = self.n + extra
        prog = ConicProgram(nv, np.zeros(nv),
                            lower=np.concatenate([self.lo, np.full(extra, -np.inf)]),
                            upper=np.concatenate([self.hi, np.full(extra, np.inf)]))
        for row, rhs in zip(self.A, self.b):
            prog.add_linear(np.concatenate([row, np.zeros(extra)]), ">=", rhs)
        return prog

    def residual(self, x) -> float:
        x = np.asarray(x, dtype=float)
        viol = [0.0]
        if len(self.b):
            viol.append(float(np.max((self.b - self.A @ x) / (1.0 + np.abs(self.b)))))
        with np.errstate(invalid="ignore"):
            viol.append(float(np.max(np.nan_to_num((self.lo - x) / (1.0 + np.abs(self.lo)), nan=0.0))))
            viol.append(float(np.max(np.nan_to_num((x - self.hi) / (1.0 + np.abs(self.hi)), nan=0.0))))
        return max(viol)

    def contains(self, x, tol: float = TOL_FEAS) -> bool:
        return self.residual(x) <= tol

    def nominal(self, p) -> tuple[np.ndarray, float]:
        prog = self.program()
        prog.objective = np.asarray(p, dtype=float)
        out = solve_or_raise(prog, "nominal problem")
        return out.primal, out.objective_value

    def _check_region(self) -> None:
        if np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi)):
            out = solve(self.program())
            if out.status is Status.INFEASIBLE:
                raise ValueError("feasible region is empty")
            if not out.ok:
                raise SolverError(out.status, "feasibility check")
            return
        for i in range(self.n):
            for sign in (1.0, -1.0):
                prog = self.program()
                prog.objective[i] = sign
                out = solve(prog)
                if out.status is Status.INFEASIBLE:
                    raise ValueError("feasible region is empty")
                if out.status is Status.UNBOUNDED:
                    raise ValueError(f"feasible region unbounded along coordinate {i}")


@dataclass
class WorstCaseForm:
    """Conic description of x -> v_wc(x, gamma) inside a program.

    Variables are laid out as [x, extras, spread, aux]. ``rows(gamma)``
    gives affine pieces (coef, const) whose maximum is v_wc.
    """

    prog: ConicProgram
    n: int
    n_extra: int
    rows: Callable[[float], list]

    def extra_index(self, k: int) -> int:
        return self.n + k


def worst_case_form(prob: LinearDecisionProblem, model: UncertaintyModel, extra: int = 0) -> WorstCaseForm:
    n = prob.n
    if isinstance(model, DiscreteScenarios):
        prog = prob.program(extra)
        nv = prog.num_vars

        def rows(gamma: float) -> list:
            pts = model.active(gamma)
            if len(pts) == 0:
                raise ValueError(f"no scenario within radius {gamma}")
            return [(np.concatenate([p, np.zeros(nv - n)]), 0.0) for p in pts]

        return WorstCaseForm(prog, n, extra, rows)

    if isinstance(model, NormBall):
        aux = {"l2": 0, "linf": n, "l1": 0}[model.norm]
    elif isinstance(model, Ellipsoid):
        aux = 0
    else:
        raise TypeError(f"{type(model).__name__} has no conic worst-case form")
    prog = prob.program(extra + 1 + aux)
    nv = prog.num_vars
    s = n + extra

    def unit(i: int) -> np.ndarray:
        e = np.zeros(nv)
        e[i] = 1.0
        return e

    xsel = np.zeros((n, nv))
    xsel[:, :n] = np.eye(n)
    if isinstance(model, Ellipsoid):
        prog.add_soc(model.chol_t @ xsel, np.zeros(n), unit(s), 0.0)
        scale = math.sqrt
    else:
        scale = float
        if model.norm == "l2":
            prog.add_soc(xsel, np.zeros(n), unit(s), 0.0)
        elif model.norm == "l1":
            # dual norm is max |x_i|
            for i in range(n):
                prog.add_linear(unit(s) - unit(i), ">=", 0.0)
                prog.add_linear(unit(s) + unit(i), ">=", 0.0)
        else:
            # dual norm is sum |x_i|
            u0 = s + 1
            for i in range(n):
                prog.add_linear(unit(u0 + i) - unit(i), ">=", 0.0)
                prog.add_linear(unit(u0 + i) + unit(i), ">=", 0.0)
            prog.add_linear(unit(s) - sum(unit(u0 + i) for i in range(n)), ">=", 0.0)
    p0 = np.concatenate([model.p0, np.zeros(nv - n)])

    def rows(gamma: float) -> list:
        return [(p0 + scale(_check_gamma(gamma)) * unit(s), 0.0)]

    return WorstCaseForm(prog, n, extra, rows)


def robust_oracle(prob: LinearDecisionProblem, model: UncertaintyModel, gamma: float) -> tuple[np.ndarray, float]:
    """Minimize the worst-case cost over X for one radius.

    The returned value is the worst-case cost re-evaluated at the returned
    point, so ``adversarial_regret(x_rob, gamma)`` is exactly zero.
    """
    gamma = _check_gamma(gamma)
    form = worst_case_form(prob, model, extra=1)
    prog = form.prog
    z = form.extra_index(0)
    prog.objective = np.zeros(prog.num_vars)
    prog.objective[z] = 1.0
    for coef, const in form.rows(gamma):
        row = coef.copy()
        row[z] -= 1.0
        prog.add_linear(row, "<=", -const)
    out = solve(prog)
    if not out.ok:
        raise SolverError(out.status, f"robust oracle at radius {gamma}")
    x = out.primal[: prob.n]
    return x, model.worst_case(x, gamma)


class RobustOracle:
    """Cached v*_wc(gamma) for one (problem, model) pair."""

    def __init__(self, prob: LinearDecisionProblem, model: UncertaintyModel):
        self.prob = prob
        self.model = model
        self._cache: dict[float, tuple[np.ndarray, float]] = {}

    def solve(self, gamma: float) -> tuple[np.ndarray, float]:
        gamma = float(gamma)
        if gamma not in self._cache:
            self._cache[gamma] = robust_oracle(self.prob, self.model, gamma)
        return self._cache[gamma]

    def value(self, gamma: float) -> float:
        return self.solve(gamma)[1]

    def __call__(self, gamma: float) -> float:
        return self.value(gamma)

    def regret(self, x, gamma: float) -> float:
        return self.model.worst_case(x, gamma) - self.value(gamma)


def adversarial_regret(prob: LinearDecisionProblem, model: UncertaintyModel, x, gamma: float,
                       oracle: RobustOracle | None = None) -> float:
    if not prob.contains(x):
        raise ValueError("decision is not feasible")
    oracle = oracle or RobustOracle(prob, model)
    return oracle.regret(x, gamma)


@dataclass
class OraclePath:
    """Piecewise-affine, concave gamma -> v*_wc(gamma) with segment vertices."""

    segments: list[ParametricSegment]
    interval: GammaInterval
    model: NormBall = field(repr=False)

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array([s.lo for s in self.segments[1:]])

    @property
    def knots(self) -> np.ndarray:
        return np.array([self.segments[0].lo] + [s.hi for s in self.segments])

    def segment(self, gamma: float) -> ParametricSegment:
        if gamma < self.interval.lo - 1e-12 or gamma > self.interval.hi + 1e-12:
            raise ValueError(f"radius {gamma} outside the traced interval")
        for seg in self.segments:
            if gamma <= seg.hi:
                return seg
        return self.segments[-1]

    def value(self, gamma: float) -> float:
        return self.segment(gamma).value(gamma)

    def __call__(self, gamma: float) -> float:
        return self.value(gamma)

    def vertex(self, gamma: float) -> np.ndarray:
        return self.segment(gamma).vertex

    def solve(self, gamma: float) -> tuple[np.ndarray, float]:
        seg = self.segment(gamma)
        return seg.vertex, seg.value(gamma)


def trace_oracle_path(prob: LinearDecisionProblem, model: NormBall, interval: GammaInterval) -> OraclePath:
    if not isinstance(model, NormBall) or not model.polyhedral:
        raise TypeError("oracle path needs an l1 or linf norm ball")
    form = worst_case_form(prob, model)
    prog = form.prog
    n = prob.n
    base = np.zeros(prog.num_vars)
    base[:n] = model.p0
    direction = np.zeros(prog.num_vars)
    direction[n] = 1.0
    prog.objective = base
    raw = solve_lp_parametric(prog, direction, (interval.lo, interval.hi))
    segments = []
    for seg in raw:
        x = seg.vertex[:n]
        segments.append(ParametricSegment(seg.lo, seg.hi, x, float(model.p0 @ x), model.dual_norm(x)))
    return OraclePath(segments, interval, model)
