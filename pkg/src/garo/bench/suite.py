"""The knapsack benchmark: calibrate, solve every method, evaluate on test data."""
from __future__ import annotations

import logging
import math
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from ..baselines import NominalCache, SatConfig, solve_regret_discrete, solve_ro_discrete, solve_satisficing
from ..rates import Power
from ..robust import RobustOracle
from ..solvers import solve_garo_discretized
from ..uncertainty import Ellipsoid, calibrate_gamma, filter_scenarios, nearest_rank, regularize_covariance
from .instances import DataModelSpec, KnapsackInstanceSpec, derive_seed, generate_instance, sample_data

log = logging.getLogger(__name__)

METHODS = ("RO", "RO_d", "SAT", "REG", "GARO")
COVERAGE = 0.99
CURVE_POINTS = 100


def _grid(lo: float, hi: float, step: float) -> tuple:
    return tuple(float(round(v, 10)) for v in np.arange(lo, hi + step / 2, step))


@dataclass(frozen=True)
class MethodGrid:
    ro: tuple = _grid(0.0, 0.08, 0.02)
    ro_d: tuple = _grid(0.1, 0.5, 0.1)
    sat: tuple = _grid(1.2, 2.0, 0.2)
    reg: tuple = _grid(0.1, 0.5, 0.1)
    garo: tuple = _grid(0.0, 2.0, 0.5)
    grid_size: int = 100
    methods: tuple = METHODS

    def params(self, method: str) -> tuple:
        return {"RO": self.ro, "RO_d": self.ro_d, "SAT": self.sat, "REG": self.reg, "GARO": self.garo}[method]


@dataclass(frozen=True)
class SuiteConfig:
    n: int = 20
    m: int = 1000
    instances: int = 3
    datasets: int = 3
    variant: str = "gaussian"
    seed: int = 0
    methods: MethodGrid = MethodGrid()
    workers: int | None = None

    @classmethod
    def full_scale(cls, **kw) -> "SuiteConfig":
        base = dict(n=50, m=5000, instances=5, datasets=5)
        base.update(kw)
        return cls(**base)


@dataclass(frozen=True)
class ReportRow:
    instance: int
    data: int
    method: str
    param: float
    mean: float
    worst: float
    q90: float
    runtime_s: float

    @property
    def key(self):
        return (self.instance, self.data, self.method, self.param)


@dataclass(frozen=True)
class CurveSample:
    method: str
    param: float
    gamma_norm: float
    bound: float

    @property
    def key(self):
        return (self.method, self.param, self.gamma_norm)


@dataclass
class ExperimentReport:
    rows: list = field(default_factory=list)
    curves: list = field(default_factory=list)
    cells: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def sort(self) -> "ExperimentReport":
        self.rows.sort(key=lambda r: r.key)
        self.curves.sort(key=lambda c: c.key)
        self.cells.sort(key=lambda c: (c.instance, c.data))
        return self


@dataclass
class CellData:
    instance: int
    data: int
    prob: object
    train: np.ndarray
    test: np.ndarray
    model: Ellipsoid
    gamma_max: float


@dataclass
class CellResult:
    instance: int
    data: int
    gamma_max: float
    rows: list = field(default_factory=list)
    bounds: dict = field(default_factory=dict)
    garo_alpha: dict = field(default_factory=dict)
    garo_audit: dict = field(default_factory=dict)
    garo_x: dict = field(default_factory=dict)
    sat_bridge: dict = field(default_factory=dict)
    oracle_grid: np.ndarray | None = None
    failures: list = field(default_factory=list)


def prepare_cell(cfg: SuiteConfig, i: int, j: int) -> CellData:
    prob = generate_instance(KnapsackInstanceSpec(cfg.n, derive_seed(cfg.seed, i)))
    train, test = sample_data(DataModelSpec(cfg.variant, cfg.n, cfg.m, derive_seed(cfg.seed, i, j)))
    p0 = train.mean(axis=0)
    sigma = regularize_covariance(np.cov(train, rowvar=False).reshape(cfg.n, cfg.n))
    model = Ellipsoid(p0, sigma)
    return CellData(i, j, prob, train, test, model, calibrate_gamma(model, train, COVERAGE))


def evaluate(x: np.ndarray, test: np.ndarray) -> tuple[float, float, float]:
    obj = test @ x
    return float(obj.mean()), float(obj.max()), nearest_rank(obj, 0.9)


def _scenarios(cell: CellData, gamma: float) -> np.ndarray:
    pts = filter_scenarios(cell.train, cell.model, gamma)
    # an empty set means only the prediction itself is trusted
    return pts if len(pts) else cell.model.p0[None, :]


def bridge_gap(model, oracle: RobustOracle, x: np.ndarray, grid: np.ndarray) -> tuple[float, float]:
    """Smallest relative regret of x over the grid, then refined between the neighbours of the best point."""

    def rel(g: float) -> float:
        v = oracle.value(g)
        return abs(model.worst_case(x, g) - v) / (1.0 + abs(v))

    gaps = np.array([rel(g) for g in grid])
    k = int(np.argmin(gaps))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    refined = float(gaps[k])
    if hi > lo:
        out = minimize_scalar(rel, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10 * (1 + hi)})
        refined = min(refined, float(out.fun))
    return float(gaps[k]), refined


def run_cell(cfg: SuiteConfig, i: int, j: int, curve_gammas: np.ndarray) -> CellResult:
    cell = prepare_cell(cfg, i, j)
    grid_methods = cfg.methods
    res = CellResult(i, j, cell.gamma_max)
    oracle = RobustOracle(cell.prob, cell.model)
    grid = np.linspace(0.0, cell.gamma_max, grid_methods.grid_size)
    t0 = time.perf_counter()
    vgrid = np.array([oracle.value(g) for g in grid])
    precompute = time.perf_counter() - t0
    res.oracle_grid = vgrid
    nominal_cache = NominalCache(cell.prob)

    def record(method, param, x, elapsed):
        res.rows.append(ReportRow(i, j, method, float(param), *evaluate(x, cell.test), elapsed))

    for method in grid_methods.methods:
        for param in grid_methods.params(method):
            try:
                t0 = time.perf_counter()
                if method == "RO":
                    gamma = param * cell.gamma_max
                    x, value = oracle.solve(gamma)
                    record(method, param, x, time.perf_counter() - t0)
                    res.bounds[(method, param)] = np.where(curve_gammas <= gamma + 1e-12, value, np.inf)
                elif method == "RO_d":
                    x, _ = solve_ro_discrete(cell.prob, _scenarios(cell, param * cell.gamma_max))
                    record(method, param, x, time.perf_counter() - t0)
                elif method == "REG":
                    x, _ = solve_regret_discrete(cell.prob, _scenarios(cell, param * cell.gamma_max), nominal_cache)
                    record(method, param, x, time.perf_counter() - t0)
                elif method == "SAT":
                    sat = solve_satisficing(cell.prob, cell.model, SatConfig(param, grid), oracle)
                    record(method, param, sat.x, time.perf_counter() - t0 + precompute)
                    res.bounds[(method, param)] = sat.target + sat.alpha * curve_gammas
                    res.sat_bridge[param] = bridge_gap(cell.model, oracle, sat.x, grid)
                elif method == "GARO":
                    sol = solve_garo_discretized(cell.prob, cell.model, grid, Power(param), oracle)
                    record(method, param, sol.x, time.perf_counter() - t0 + precompute)
                    res.garo_alpha[param] = sol.alpha
                    res.garo_x[param] = sol.x
                    res.garo_audit[param] = float(-np.min(sol.slacks))
                    curve_v = np.array([oracle.value(g) for g in curve_gammas])
                    res.bounds[(method, param)] = curve_v + sol.alpha * (1.0 + curve_gammas) ** param
            except Exception as exc:  # one failed method must not sink the sweep
                log.error("cell (%d, %d) %s(%s) failed: %s", i, j, method, param, exc)
                res.failures.append((i, j, method, param, repr(exc)))
    return res


def _run_cell_safe(args):
    cfg, i, j, curve_gammas = args
    try:
        return run_cell(cfg, i, j, curve_gammas)
    except Exception as exc:
        log.error("cell (%d, %d) failed: %s", i, j, exc)
        res = CellResult(i, j, math.nan)
        res.failures.append((i, j, "*", math.nan, traceback.format_exc()))
        return res


def worker_count(cfg: SuiteConfig) -> int:
    if cfg.workers:
        return cfg.workers
    env = os.environ.get("GARO_THREADS")
    return max(1, int(env)) if env else 1


def run_suite(cfg: SuiteConfig) -> ExperimentReport:
    cells = [(i, j) for i in range(cfg.instances) for j in range(cfg.datasets)]
    if not cells:
        raise ValueError("empty benchmark grid")
    # curves share one normalized axis: 1.0 is the largest calibrated radius
    gamma_top = max(prepare_cell(cfg, i, j).gamma_max for i, j in cells)
    norm = np.linspace(0.0, 1.0, CURVE_POINTS)
    curve_gammas = norm * gamma_top
    jobs = [(cfg, i, j, curve_gammas) for i, j in cells]
    workers = worker_count(cfg)
    if workers == 1:
        results = [_run_cell_safe(job) for job in jobs]
    else:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_cell_safe, jobs))

    report = ExperimentReport()
    for res in results:
        report.rows.extend(res.rows)
        report.failures.extend(res.failures)
        report.cells.append(res)
    keys = sorted({k for res in results for k in res.bounds})
    for method, param in keys:
        stacked = np.array([res.bounds[(method, param)] for res in results if (method, param) in res.bounds])
        avg = stacked.mean(axis=0)
        report.curves.extend(CurveSample(method, float(param), float(g), float(b)) for g, b in zip(norm, avg))
    return report.sort()
