"""Objective-evaluation counts of the block solvers as the problem grows.

Prints greedy AP-selection counts versus M (with the fitted log-log
exponent), GP gradient cost versus L*N, and WOA cost versus population.
"""
import argparse

import numpy as np

from cfsleep.ap_select import greedy_select
from cfsleep.channel import realize
from cfsleep.config import ScenarioConfig, SolverParams
from cfsleep.ris_opt import gp_optimize, sum_rate_of_phases, woa_optimize
from cfsleep.system import System


def system_for(seed, **kw):
    cfg = ScenarioConfig(area_side=150.0, **kw)
    rng = np.random.default_rng(seed)
    _, real = realize(cfg, rng)
    system = System.from_rng(cfg, real, rng)
    return system, system.initial_state(rng=rng)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=3)
    args = ap.parse_args()

    Ms = np.arange(6, 15)
    counts = []
    for M in Ms:
        c = []
        for s in range(args.instances):
            system, state = system_for(s, num_aps=int(M), num_ues=2, num_ris=2, ris_rows=2,
                                       ris_cols=2)
            c.append(greedy_select(system, state, 3 * system.evaluate(state).ee).evaluations)
        counts.append(np.mean(c))
        print(f"greedy  M={M:<2} evaluations {counts[-1]:7.1f}  (bound M^2/2+M = {M * M / 2 + M:.0f})")
    print(f"greedy  fitted exponent {np.polyfit(np.log(Ms), np.log(counts), 1)[0]:.2f}")

    for L, rows, cols in ((1, 2, 2), (2, 2, 2), (2, 4, 4), (4, 4, 4)):
        system, state = system_for(0, num_aps=6, num_ues=3, num_ris=L, ris_rows=rows, ris_cols=cols)
        res = gp_optimize(lambda th: sum_rate_of_phases(system, state, th), state.theta,
                          SolverParams(gp_max_iters=2, gp_tol=1e-12))
        print(f"GP      LN={L * rows * cols:<3} gradient evaluations per iteration "
              f"{res.gradient_evaluations / max(res.iterations, 1):.0f}")

    system, state = system_for(0, num_aps=6, num_ues=3, num_ris=2, ris_rows=2, ris_cols=2)
    for pop in (10, 20, 30, 40):
        res = woa_optimize(lambda th: sum_rate_of_phases(system, state, th), state.theta,
                           SolverParams(woa_pop=pop, woa_iters=5), np.random.default_rng(0))
        print(f"WOA     N_pop={pop:<3} evaluations per iteration {res.evaluations / 6:.0f}")


if __name__ == "__main__":
    main()
