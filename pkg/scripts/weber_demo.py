"""Half-line location instance: closed-form GARO decisions against a brute-force grid."""
import numpy as np

from garo.analytic import weber_garo


def grid_solution(q: float, mus=np.linspace(0.0, 1.0, 4001), gammas=np.linspace(0.0, 50.0, 20001)):
    denom = (1.0 + gammas) ** q
    # the ratio tends to 1 as gamma grows when q = 2, to 0 when q > 2
    tail = 1.0 if q == 2 else 0.0
    worst = np.array([max(tail, np.max((m - gammas) ** 2 / denom)) for m in mus])
    best = worst.min()
    ties = mus[worst <= best + 1e-12]
    return (ties[0], ties[-1]) if len(ties) > 1 else ties[0], best


def main() -> None:
    print(f"{'q':>5s} {'mu (closed)':>14s} {'alpha (closed)':>15s} {'mu (grid)':>10s} {'alpha (grid)':>13s}")
    for q in (2.0, 3.0, 4.0, 6.0, 10.0):
        mu, alpha = weber_garo(q)
        gmu, galpha = grid_solution(q)
        shown = f"[{mu[0]:g}, {mu[1]:g}]" if isinstance(mu, tuple) else f"{mu:.10f}"
        gshown = f"[{gmu[0]:g}, {gmu[1]:g}]" if isinstance(gmu, tuple) else f"{gmu:.5f}"
        print(f"{q:5.1f} {shown:>14s} {alpha:15.10f} {gshown:>10s} {galpha:13.8f}")


if __name__ == "__main__":
    main()
