"""Command line entry point: ``garo {solve,bench,curve,adaptive,weber}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .adaptive import simulate_lepskii
from .analytic import weber_garo
from .baselines import SatConfig, solve_regret_discrete, solve_ro_discrete, solve_satisficing
from .bench import MethodGrid, SuiteConfig, emit_csv, run_suite
from .bench.instances import VARIANTS, DataModelSpec, KnapsackInstanceSpec, generate_instance, sample_data
from .bench.suite import METHODS, COVERAGE
from .rates import Power
from .robust import LinearDecisionProblem, RobustOracle
from .solvers import solve_garo_discretized
from .uncertainty import Ellipsoid, calibrate_gamma, filter_scenarios, regularize_covariance

log = logging.getLogger("garo")

EXIT_OK, EXIT_CELL_FAILURE, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


def _parse_seeds(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    try:
        vals = [int(p) for p in parts]
    except ValueError:
        raise ConfigError(f"--seeds expects N or IxJ, got {text!r}")
    if len(vals) == 1:
        vals = vals * 2
    if len(vals) != 2 or min(vals) < 1:
        raise ConfigError(f"--seeds expects N or IxJ, got {text!r}")
    return vals[0], vals[1]


def _parse_methods(text: str | None) -> tuple:
    if not text:
        return METHODS
    lookup = {m.lower(): m for m in METHODS}
    chosen = []
    for name in text.split(","):
        key = name.strip().lower()
        if key not in lookup:
            raise ConfigError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")
        chosen.append(lookup[key])
    return tuple(chosen)


def _suite_config(args) -> SuiteConfig:
    if args.full_scale:
        cfg = SuiteConfig.full_scale(variant=args.data, seed=args.seed)
    else:
        cfg = SuiteConfig(variant=args.data, seed=args.seed)
    updates = {}
    if args.n is not None:
        updates["n"] = args.n
    if args.m is not None:
        updates["m"] = args.m
    if args.seeds is not None:
        updates["instances"], updates["datasets"] = _parse_seeds(args.seeds)
    grid = MethodGrid(methods=_parse_methods(args.methods))
    if args.grid_size is not None:
        if args.grid_size < 2:
            raise ConfigError("--grid-size must be at least 2")
        grid = replace(grid, grid_size=args.grid_size)
    updates["methods"] = grid
    cfg = replace(cfg, **updates)
    if cfg.n < 1 or cfg.m < 2:
        raise ConfigError("need --n >= 1 and --m >= 2")
    return cfg


def _run_bench(args, curves_only: bool) -> int:
    cfg = _suite_config(args)
    report = run_suite(cfg)
    files = emit_csv(report, args.out, curves_only=curves_only)
    for path in files:
        print(path)
    if report.failures:
        for fail in report.failures:
            log.error("failed cell: %s", fail)
        return EXIT_CELL_FAILURE
    return EXIT_OK


def _load_instance(path: Path):
    spec = json.loads(path.read_text())
    n = len(spec["a"][0]) if np.ndim(spec["a"]) == 2 else len(spec["a"])
    prob = LinearDecisionProblem(np.atleast_2d(spec["a"]), np.atleast_1d(spec["b"]),
                                 spec.get("lo", 0.0), spec.get("hi", 100.0))
    train = np.asarray(spec["train"], dtype=float) if "train" in spec else None
    if "p0" in spec:
        p0 = np.asarray(spec["p0"], dtype=float)
        sigma = np.asarray(spec.get("sigma", np.eye(n)), dtype=float)
    elif train is not None:
        p0 = train.mean(axis=0)
        sigma = np.cov(train, rowvar=False).reshape(n, n)
    else:
        raise ConfigError("instance needs either 'p0' or 'train'")
    model = Ellipsoid(p0, regularize_covariance(sigma))
    if "gamma_max" in spec:
        gmax = float(spec["gamma_max"])
    elif train is not None:
        gmax = calibrate_gamma(model, train, COVERAGE)
    else:
        raise ConfigError("instance needs 'gamma_max' when no training data is given")
    return prob, model, train, gmax


def _run_solve(args) -> int:
    if args.instance:
        prob, model, train, gmax = _load_instance(Path(args.instance))
    else:
        n = args.n or 20
        m = args.m or 1000
        prob = generate_instance(KnapsackInstanceSpec(n, args.seed))
        train, _ = sample_data(DataModelSpec(args.data, n, m, args.seed))
        model = Ellipsoid(train.mean(axis=0), regularize_covariance(np.cov(train, rowvar=False).reshape(n, n)))
        gmax = calibrate_gamma(model, train, COVERAGE)
    method = _parse_methods(args.method)[0]
    param = args.param
    grid = np.linspace(0.0, gmax, args.grid_size or 100)
    oracle = RobustOracle(prob, model)
    out = {"method": method, "param": param, "gamma_max": gmax}
    if method == "GARO":
        sol = solve_garo_discretized(prob, model, grid, Power(param), oracle)
        out.update(x=sol.x.tolist(), alpha=sol.alpha)
    elif method == "RO":
        x, v = oracle.solve(param * gmax)
        out.update(x=x.tolist(), value=v)
    elif method == "SAT":
        sat = solve_satisficing(prob, model, SatConfig(param, grid), oracle)
        out.update(x=sat.x.tolist(), alpha=sat.alpha, target=sat.target)
    else:
        if train is None:
            raise ConfigError(f"{method} needs training scenarios in the instance file")
        pts = filter_scenarios(train, model, param * gmax)
        pts = pts if len(pts) else model.p0[None, :]
        solver = solve_ro_discrete if method == "RO_d" else solve_regret_discrete
        x, v = solver(prob, pts)
        out.update(x=x.tolist(), value=v, scenarios=len(pts))
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _run_adaptive(args) -> int:
    trials = simulate_lepskii(trials=args.trials, n_samples=args.samples, seed=args.seed, delta=args.delta)
    hits = sum(t.holds for t in trials)
    print(f"trials={len(trials)} bound_holds={hits} fraction={hits / len(trials):.4f} "
          f"max_alpha={max(t.alpha for t in trials):.6f}")
    return EXIT_OK


def _run_weber(args) -> int:
    for q in args.q:
        mu, alpha = weber_garo(q)
        print(f"q={q:g} mu={mu} alpha={alpha!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="garo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def bench_flags(p):
        p.add_argument("--n", type=int)
        p.add_argument("--m", type=int)
        p.add_argument("--seeds", help="instances x datasets, e.g. 3x3 (or one number for both)")
        p.add_argument("--seed", type=int, default=0, help="master seed")
        p.add_argument("--data", choices=VARIANTS, default="gaussian")
        p.add_argument("--methods", help="comma list of " + ",".join(METHODS))
        p.add_argument("--grid-size", type=int)
        p.add_argument("--out", default="results")
        p.add_argument("--full-scale", action="store_true")

    bench_flags(sub.add_parser("bench", help="run the full method sweep and write both CSV files"))
    bench_flags(sub.add_parser("curve", help="write guarantee curves only"))

    p = sub.add_parser("solve", help="one method on one instance")
    p.add_argument("--instance", help="JSON with a, b[, lo, hi] and train or p0/sigma/gamma_max")
    p.add_argument("--method", default="GARO")
    p.add_argument("--param", type=float, default=1.0)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--data", choices=VARIANTS, default="gaussian")
    p.add_argument("--grid-size", type=int)

    p = sub.add_parser("adaptive", help="simulated check of the adaptive estimator bound")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("weber", help="closed-form half-line instance")
    p.add_argument("--q", type=float, nargs="+", default=[2.0, 3.0, 4.0, 6.0, 10.0])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command in ("bench", "curve"):
            return _run_bench(args, curves_only=args.command == "curve")
        if args.command == "solve":
            return _run_solve(args)
        if args.command == "adaptive":
            return _run_adaptive(args)
        return _run_weber(args)
    except (ConfigError, ValueError, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
