"""Linear and second-order-cone programs behind one small interface.

Pure LPs go to HiGHS (dual simplex, via scipy) so that optimal points are
vertices; anything with a cone row goes to Clarabel.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import clarabel
import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

TOL_FEAS = 1e-8
TOL_OBJ = 1e-7
BREAKPOINT_TOL = 1e-9
MAX_ITER = 10_000
MAX_DEPTH = 60

_RELATIONS = ("<=", "==", ">=")


class Status(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    NUMERICAL_FAILURE = "NumericalFailure"


class SolverError(RuntimeError):
    """A solve did not return an optimal point."""

    def __init__(self, status: Status, context: str = ""):
        self.status = status
        super().__init__(f"{status.value}{': ' + context if context else ''}")


@dataclass
class SocConstraint:
    """||A v + b||_2 <= c.v + d"""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float


@dataclass
class ConicProgram:
    num_vars: int
    objective: np.ndarray
    linear: list = field(default_factory=list)
    soc: list = field(default_factory=list)
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        if self.lower is None:
            self.lower = np.full(self.num_vars, -np.inf)
        if self.upper is None:
            self.upper = np.full(self.num_vars, np.inf)
        self.lower = np.asarray(self.lower, dtype=float).copy()
        self.upper = np.asarray(self.upper, dtype=float).copy()

    def add_linear(self, row, relation: str, rhs: float) -> None:
        if relation not in _RELATIONS:
            raise ValueError(f"unknown relation {relation!r}")
        self.linear.append((np.asarray(row, dtype=float), relation, float(rhs)))

    def add_soc(self, A, b, c, d: float) -> None:
        A = np.atleast_2d(np.asarray(A, dtype=float))
        self.soc.append(SocConstraint(A, np.asarray(b, dtype=float), np.asarray(c, dtype=float), float(d)))

    @property
    def is_lp(self) -> bool:
        return not self.soc

    def validate(self) -> None:
        n = self.num_vars
        if self.objective.shape != (n,):
            raise ValueError("objective length differs from num_vars")
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("bounds length differs from num_vars")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")
        for row, _, _ in self.linear:
            if row.shape != (n,):
                raise ValueError("linear row length differs from num_vars")
        for cone in self.soc:
            if cone.A.shape[1] != n or cone.c.shape != (n,) or cone.b.shape != (cone.A.shape[0],):
                raise ValueError("cone row shapes inconsistent with num_vars")

    def residual(self, v: np.ndarray) -> float:
        """Largest constraint violation at v, scaled by 1 + |rhs|."""
        worst = 0.0
        for row, rel, rhs in self.linear:
            lhs = row @ v
            if rel == "<=":
                viol = lhs - rhs
            elif rel == ">=":
                viol = rhs - lhs
            else:
                viol = abs(lhs - rhs)
            worst = max(worst, viol / (1.0 + abs(rhs)))
        lo_viol = np.where(np.isfinite(self.lower), self.lower - v, 0.0) / (1.0 + np.abs(np.nan_to_num(self.lower)))
        hi_viol = np.where(np.isfinite(self.upper), v - self.upper, 0.0) / (1.0 + np.abs(np.nan_to_num(self.upper)))
        worst = max(worst, float(np.max(lo_viol, initial=0.0)), float(np.max(hi_viol, initial=0.0)))
        for cone in self.soc:
            lhs = np.linalg.norm(cone.A @ v + cone.b)
            rhs = cone.c @ v + cone.d
            worst = max(worst, (lhs - rhs) / (1.0 + abs(rhs)))
        return float(worst)


@dataclass
class SolveOutcome:
    status: Status
    primal: np.ndarray
    objective_value: float
    residuals: float
    dual_objective: float | None = None
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


def format_program(prog: ConicProgram) -> str:
    """Plain-text dump, one constraint per line."""
    fmt = lambda a: " ".join(repr(float(t)) for t in np.ravel(a))
    lines = [f"vars {prog.num_vars}", f"min {fmt(prog.objective)}"]
    for row, rel, rhs in prog.linear:
        lines.append(f"lin {fmt(row)} {rel} {rhs!r}")
    for cone in prog.soc:
        lines.append(f"soc A=[{';'.join(fmt(r) for r in cone.A)}] b=[{fmt(cone.b)}] c=[{fmt(cone.c)}] d={cone.d!r}")
    lines.append(f"lo {fmt(prog.lower)}")
    lines.append(f"hi {fmt(prog.upper)}")
    return "\n".join(lines) + "\n"


def solve(prog: ConicProgram, dump: str | os.PathLike | None = None, max_iter: int = MAX_ITER) -> SolveOutcome:
    prog.validate()
    dump = dump or os.environ.get("GARO_DUMP_PROGRAM")
    if dump:
        Path(dump).write_text(format_program(prog))
    if prog.is_lp:
        return _solve_highs(prog, max_iter)
    return _solve_clarabel(prog, max_iter)


def _split_linear(prog: ConicProgram):
    n = prog.num_vars
    ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
    for row, rel, rhs in prog.linear:
        if rel == "<=":
            ub_rows.append(row); ub_rhs.append(rhs)
        elif rel == ">=":
            ub_rows.append(-row); ub_rhs.append(-rhs)
        else:
            eq_rows.append(row); eq_rhs.append(rhs)
    A_ub = np.array(ub_rows).reshape(-1, n)
    A_eq = np.array(eq_rows).reshape(-1, n)
    return A_ub, np.array(ub_rhs), A_eq, np.array(eq_rhs)


def _solve_highs(prog: ConicProgram, max_iter: int) -> SolveOutcome:
    n = prog.num_vars
    A_ub, b_ub, A_eq, b_eq = _split_linear(prog)
    bounds = [(None if not np.isfinite(lo) else lo, None if not np.isfinite(hi) else hi)
              for lo, hi in zip(prog.lower, prog.upper)]
    res = linprog(
        prog.objective,
        A_ub=A_ub if len(b_ub) else None, b_ub=b_ub if len(b_ub) else None,
        A_eq=A_eq if len(b_eq) else None, b_eq=b_eq if len(b_eq) else None,
        bounds=bounds, method="highs-ds", options={"maxiter": max_iter, "presolve": True,
                                                   "primal_feasibility_tolerance": 1e-10,
                                                   "dual_feasibility_tolerance": 1e-10},
    )
    nan = np.full(n, np.nan)
    if res.status == 2:
        return SolveOutcome(Status.INFEASIBLE, nan, np.inf, np.inf)
    if res.status == 3:
        return SolveOutcome(Status.UNBOUNDED, nan, -np.inf, np.inf)
    if res.status != 0 or res.x is None:
        return SolveOutcome(Status.NUMERICAL_FAILURE, nan, np.nan, np.inf, iterations=int(res.nit))
    x = np.asarray(res.x, dtype=float)
    dual = 0.0
    if len(b_ub):
        dual += float(res.ineqlin.marginals @ b_ub)
    if len(b_eq):
        dual += float(res.eqlin.marginals @ b_eq)
    lo = np.nan_to_num(prog.lower, posinf=0.0, neginf=0.0)
    hi = np.nan_to_num(prog.upper, posinf=0.0, neginf=0.0)
    dual += float(res.lower.marginals @ lo + res.upper.marginals @ hi)
    resid = prog.residual(x)
    status = Status.OPTIMAL if resid <= TOL_FEAS else Status.NUMERICAL_FAILURE
    return SolveOutcome(status, x, float(prog.objective @ x), resid, dual, int(res.nit))


def _solve_clarabel(prog: ConicProgram, max_iter: int) -> SolveOutcome:
    n = prog.num_vars
    blocks_A, blocks_b, cones = [], [], []
    A_ub, b_ub, A_eq, b_eq = _split_linear(prog)
    if len(b_eq):
        blocks_A.append(A_eq); blocks_b.append(b_eq); cones.append(clarabel.ZeroConeT(len(b_eq)))
    nonneg_A = [A_ub]
    nonneg_b = [b_ub]
    eye = np.eye(n)
    fin_hi = np.isfinite(prog.upper)
    fin_lo = np.isfinite(prog.lower)
    nonneg_A += [eye[fin_hi], -eye[fin_lo]]
    nonneg_b += [prog.upper[fin_hi], -prog.lower[fin_lo]]
    A_nn = np.vstack(nonneg_A)
    if A_nn.shape[0]:
        blocks_A.append(A_nn); blocks_b.append(np.concatenate(nonneg_b))
        cones.append(clarabel.NonnegativeConeT(A_nn.shape[0]))
    for cone in prog.soc:
        blocks_A.append(np.vstack([-cone.c[None, :], -cone.A]))
        blocks_b.append(np.concatenate([[cone.d], cone.b]))
        cones.append(clarabel.SecondOrderConeT(cone.A.shape[0] + 1))
    A = sp.csc_matrix(np.vstack(blocks_A))
    b = np.concatenate(blocks_b)
    nan = np.full(n, np.nan)
    out = None
    # tight tolerances first, then the solver's stock ones; a run that stalls
    # is still accepted when its iterate certifies itself
    for tol, kt in ((1e-10, 1e-8), (1e-8, 1e-6)):
        settings = clarabel.DefaultSettings()
        settings.verbose = False
        settings.max_iter = max_iter
        settings.tol_gap_abs = settings.tol_gap_rel = settings.tol_feas = tol
        settings.tol_ktratio = kt
        settings.max_threads = 1
        sol = clarabel.DefaultSolver(sp.csc_matrix((n, n)), prog.objective, A, b, cones, settings).solve()
        status = str(sol.status)
        if status in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
            return SolveOutcome(Status.INFEASIBLE, nan, np.inf, np.inf, iterations=sol.iterations)
        if status in ("DualInfeasible", "AlmostDualInfeasible"):
            return SolveOutcome(Status.UNBOUNDED, nan, -np.inf, np.inf, iterations=sol.iterations)
        x = np.asarray(sol.x, dtype=float)
        if not np.all(np.isfinite(x)):
            out = SolveOutcome(Status.NUMERICAL_FAILURE, nan, np.nan, np.inf, iterations=sol.iterations)
            continue
        primal, dual = float(prog.objective @ x), float(sol.obj_val_dual)
        resid = prog.residual(x)
        gap_ok = status in ("Solved", "AlmostSolved") or abs(primal - dual) <= 1e-8 * (1.0 + abs(primal))
        ok = resid <= TOL_FEAS and gap_ok
        out = SolveOutcome(Status.OPTIMAL if ok else Status.NUMERICAL_FAILURE, x, primal,
                           resid, dual, sol.iterations)
        if ok:
            break
    return out


def solve_or_raise(prog: ConicProgram, context: str = "") -> SolveOutcome:
    out = solve(prog)
    if not out.ok:
        raise SolverError(out.status, context)
    return out


@dataclass(frozen=True)
class ParametricSegment:
    lo: float
    hi: float
    vertex: np.ndarray
    intercept: float
    slope: float

    def value(self, gamma: float) -> float:
        return self.intercept + self.slope * gamma


def _with_objective(prog: ConicProgram, objective: np.ndarray) -> ConicProgram:
    return ConicProgram(prog.num_vars, objective, list(prog.linear), list(prog.soc), prog.lower, prog.upper)


def solve_lp_parametric(prog: ConicProgram, direction, gamma_range) -> list[ParametricSegment]:
    """Value function of min (c + g d).v over g in [lo, hi], as affine pieces.

    Endpoints are solved lexicographically (optimal face, then extreme slope
    on it) so that each piece carries the vertex that is optimal on its
    whole interval. Interior splits happen where the two endpoint lines
    cross; a crossing that is itself optimal is a breakpoint.
    """
    if not prog.is_lp:
        raise ValueError("parametric solve needs a pure LP")
    d = np.asarray(direction, dtype=float)
    base = prog.objective
    lo, hi = map(float, gamma_range)
    if lo > hi:
        raise ValueError("empty parameter range")

    def optimum(g: float) -> SolveOutcome:
        out = solve(_with_objective(prog, base + g * d))
        if out.status is Status.UNBOUNDED:
            raise SolverError(Status.UNBOUNDED, f"parametric LP unbounded at {g}")
        if not out.ok:
            raise SolverError(out.status, f"parametric LP at {g}")
        return out

    def extreme(g: float, sign: float) -> np.ndarray:
        # among optimal points at g, minimize sign * d.v (+1: optimal just right of g)
        first = optimum(g)
        if not np.any(d):
            return first.primal
        c = base + g * d
        tie = _with_objective(prog, sign * d)
        tie.add_linear(c, "<=", first.objective_value + 1e-11 * (1.0 + abs(first.objective_value)))
        out = solve(tie)
        return out.primal if out.ok else first.primal

    def line(v: np.ndarray) -> tuple[float, float]:
        return float(base @ v), float(d @ v)

    segments: list[tuple[float, float, np.ndarray]] = []

    def recurse(a: float, b: float, va: np.ndarray, vb: np.ndarray, depth: int) -> None:
        ia, sa = line(va)
        ib, sb = line(vb)
        scale = 1.0 + abs(ia) + abs(ib)
        if abs(ia - ib) <= BREAKPOINT_TOL * scale and abs(sa - sb) <= BREAKPOINT_TOL * scale:
            segments.append((a, b, va))
            return
        if depth >= MAX_DEPTH or b - a <= BREAKPOINT_TOL * (1.0 + abs(a)):
            segments.append((a, b, va))
            return
        g = (ib - ia) / (sa - sb) if sa - sb > BREAKPOINT_TOL * scale else 0.5 * (a + b)
        # a line that is exact at both ends of [a, b] is exact on all of it
        if g <= a:
            segments.append((a, b, vb))
            return
        if g >= b:
            segments.append((a, b, va))
            return
        vg = optimum(g)
        if vg.objective_value >= ia + sa * g - BREAKPOINT_TOL * scale:
            segments.append((a, g, va))
            segments.append((g, b, vb))
            return
        left_of_g = extreme(g, -1.0)
        right_of_g = extreme(g, +1.0)
        recurse(a, g, va, left_of_g, depth + 1)
        recurse(g, b, right_of_g, vb, depth + 1)

    if hi == lo:
        v = optimum(lo).primal
        i, s = line(v)
        return [ParametricSegment(lo, hi, v, i, s)]
    recurse(lo, hi, extreme(lo, +1.0), extreme(hi, -1.0), 0)

    merged: list[ParametricSegment] = []
    for a, b, v in sorted(segments, key=lambda s: s[0]):
        i, s = line(v)
        if merged:
            prev = merged[-1]
            scale = 1.0 + abs(prev.intercept) + abs(i)
            if abs(prev.intercept - i) <= BREAKPOINT_TOL * scale and abs(prev.slope - s) <= BREAKPOINT_TOL * scale:
                merged[-1] = ParametricSegment(prev.lo, b, prev.vertex, prev.intercept, prev.slope)
                continue
            if b - a <= BREAKPOINT_TOL:
                continue
        merged.append(ParametricSegment(a, b, v, i, s))
    return merged
