"""Guarantee curves of GARO(q), SAT(beta) and RO(theta) on the normalized radius axis.

Prints the averaged bound at a few radii; the full curves go to guarantees.csv.
"""
import argparse
from collections import defaultdict

from garo.bench import MethodGrid, SuiteConfig, emit_csv, run_suite


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/curves")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    cfg = SuiteConfig(seed=args.seed, methods=MethodGrid(methods=("RO", "SAT", "GARO")))
    report = run_suite(cfg)
    emit_csv(report, args.out, curves_only=True)

    curves = defaultdict(dict)
    for c in report.curves:
        curves[(c.method, c.param)][round(c.gamma_norm, 2)] = c.bound
    marks = (0.0, 0.25, 0.5, 0.75, 1.0)
    print(f"{'method':6s} {'param':>6s} " + " ".join(f"{m:>9.2f}" for m in marks))
    for (method, param), curve in sorted(curves.items()):
        cols = [curve.get(min(curve, key=lambda g: abs(g - m)), float("nan")) for m in marks]
        print(f"{method:6s} {param:6.2f} " + " ".join(f"{v:9.2f}" for v in cols))


if __name__ == "__main__":
    main()
