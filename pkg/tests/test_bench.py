import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from garo.bench import MethodGrid, SuiteConfig, emit_csv, read_csv, run_suite
from garo.bench.instances import (DataModelSpec, KnapsackInstanceSpec, data_moments, derive_seed,
                                  generate_instance, sample_data)
from garo.bench.suite import ExperimentReport, evaluate, prepare_cell
from garo.robust import RobustOracle

SMALL = SuiteConfig(n=4, m=80, instances=2, datasets=1, seed=11,
                    methods=MethodGrid(garo=(0.0, 1.0, 2.0), sat=(1.2, 1.6), grid_size=20))


@pytest.fixture(scope="module")
def small_report():
    return run_suite(SMALL)


def _strip_runtime(report):
    return [(r.key, r.mean, r.worst, r.q90) for r in report.rows], [(c.key, c.bound) for c in report.curves]


@given(st.integers(1, 30), st.integers(0, 2**63 - 1))
def test_instance_rule(n, seed):
    spec = KnapsackInstanceSpec(n, seed)
    prob = generate_instance(spec)
    a = prob.A[0]
    assert np.all((a >= 25) & (a <= 100))
    assert prob.b[0] == pytest.approx(0.4 * a.sum(), abs=1e-9)
    assert np.all(prob.lo == 0) and np.all(prob.hi == 100)
    again = generate_instance(spec)
    assert np.array_equal(again.A, prob.A) and np.array_equal(again.b, prob.b)


def test_one_dimensional_instance_feasible():
    prob = generate_instance(KnapsackInstanceSpec(1, 5))
    assert prob.b[0] == pytest.approx(0.4 * prob.A[0, 0])
    assert prob.contains(np.array([100.0]))
    with pytest.raises(ValueError):
        generate_instance(KnapsackInstanceSpec(0, 5))


def test_gaussian_mean_within_three_sigma():
    spec = DataModelSpec("gaussian", 6, 5000, 21, split=0.999)
    train, _ = sample_data(spec)
    mu, cov = data_moments(spec)
    sd = np.sqrt(np.diag(cov))
    assert np.all(np.abs(train.mean(axis=0) - mu) <= 3 * sd / math.sqrt(len(train)) + 1e-12)


def test_inverse_variant_scale():
    spec = DataModelSpec("inverse", 5, 10, 3)
    mu, cov = data_moments(spec)
    # the per-direction variances are bounded by (50 - mu_i)^2 summed over directions
    assert np.trace(cov) <= np.sum((50 - mu) ** 2) + 1e-9


def test_heavy_tail_support_and_split():
    train, test = sample_data(DataModelSpec("heavytail", 5, 5000, 2))
    assert train.shape == (4000, 5) and test.shape == (1000, 5)
    assert min(train.min(), test.min()) >= 2.0
    with pytest.raises(ValueError):
        data_moments(DataModelSpec("heavytail", 5, 50, 2))


def test_data_spec_validation():
    with pytest.raises(ValueError):
        DataModelSpec("cauchy", 2, 10, 0)
    with pytest.raises(ValueError):
        DataModelSpec("gaussian", 2, 1, 0)
    with pytest.raises(ValueError):
        DataModelSpec("gaussian", 2, 10, 0, split=1.0)


def test_derived_seeds_are_stable_and_distinct():
    assert derive_seed(0, 1) == derive_seed(0, 1)
    assert len({derive_seed(0, i, j) for i in range(5) for j in range(5)}) == 25


def test_evaluate_statistics():
    test = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [10.0, 0.0]])
    mean, worst, q90 = evaluate(np.array([1.0, 5.0]), test)
    assert (mean, worst, q90) == (4.0, 10.0, 10.0)


def test_report_invariants(small_report):
    assert not small_report.failures
    assert small_report.rows
    for row in small_report.rows:
        assert row.q90 <= row.worst + 1e-12
        assert row.mean <= row.worst + 1e-12


def test_ro_zero_is_nominal(small_report):
    cell = prepare_cell(SMALL, 0, 0)
    x, _ = cell.prob.nominal(cell.model.p0)
    expected = evaluate(x, cell.test)
    row = next(r for r in small_report.rows if r.key[:3] == (0, 0, "RO") and r.param == 0.0)
    assert (row.mean, row.worst, row.q90) == pytest.approx(expected, rel=1e-7)


def test_garo_rows_pass_audit(small_report):
    for res in small_report.cells:
        for q, slack in res.garo_audit.items():
            assert slack <= 1e-6
        alphas = [res.garo_alpha[q] for q in sorted(res.garo_alpha)]
        assert all(b <= a + 1e-7 for a, b in zip(alphas, alphas[1:]))


def test_garo_audit_recomputed(small_report):
    from garo.rates import Power
    from garo.solvers import solve_garo_discretized
    cell = prepare_cell(SMALL, 1, 0)
    oracle = RobustOracle(cell.prob, cell.model)
    grid = np.linspace(0, cell.gamma_max, SMALL.methods.grid_size)
    sol = solve_garo_discretized(cell.prob, cell.model, grid, Power(1.0), oracle)
    for g in grid:
        assert oracle.regret(sol.x, g) <= sol.alpha * (1 + g) + 1e-6


def test_oracle_grid_nondecreasing(small_report):
    for res in small_report.cells:
        assert np.all(np.diff(res.oracle_grid) >= -1e-7 * (1 + np.abs(res.oracle_grid[1:])))


def test_curves_structure(small_report):
    curves = {}
    for c in small_report.curves:
        curves.setdefault((c.method, c.param), []).append(c)
    for (method, param), samples in curves.items():
        g = [s.gamma_norm for s in samples]
        assert g[0] == 0.0 and g[-1] == 1.0
        bounds = np.array([s.bound for s in samples])
        if method == "GARO" and param >= 0.5:
            assert np.all(np.isfinite(bounds))
        if method == "RO":
            assert np.isinf(bounds[-1])
            assert np.isfinite(bounds[0])


def test_suite_deterministic_across_workers(small_report):
    again = run_suite(replace(SMALL, workers=2))
    assert _strip_runtime(again) == _strip_runtime(small_report)


def test_suite_worker_env(monkeypatch):
    from garo.bench.suite import worker_count
    monkeypatch.setenv("GARO_THREADS", "3")
    assert worker_count(SMALL) == 3
    assert worker_count(replace(SMALL, workers=1)) == 1


def test_empty_grid_rejected():
    with pytest.raises(ValueError):
        run_suite(replace(SMALL, instances=0))


def test_csv_roundtrip(small_report, tmp_path):
    files = emit_csv(small_report, tmp_path)
    assert sorted(p.name for p in files) == ["guarantees.csv", "tradeoff.csv"]
    header = (tmp_path / "tradeoff.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header == "instance,data,method,param,mean,worst,q90,runtime_s"
    back = read_csv(tmp_path)
    assert back.rows == small_report.rows
    assert [(c.key, c.bound) for c in back.curves] == [(c.key, c.bound) for c in small_report.curves]


def test_empty_report_writes_headers(tmp_path):
    emit_csv(ExperimentReport(), tmp_path)
    assert (tmp_path / "guarantees.csv").read_text().strip() == "method,param,gamma_norm,bound"
    assert (tmp_path / "tradeoff.csv").read_text().strip() == "instance,data,method,param,mean,worst,q90,runtime_s"


def test_curves_only_output(small_report, tmp_path):
    files = emit_csv(small_report, tmp_path, curves_only=True)
    assert [p.name for p in files] == ["guarantees.csv"]
