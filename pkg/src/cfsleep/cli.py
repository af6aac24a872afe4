"""Command line entry point: ``cfsleep run|solve|topology|aggregate``."""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .channel import RisPhase, dump_realization, realize
from .config import ScenarioConfig, load_config
from .harness import AGG_COLUMNS, SCHEMES, ExperimentSpec, emit_plot_data, read_raw, run_experiment
from .optimizer import dinkelbach_solve
from .scenario import dump_topology
from .system import InfeasibleError, System

log = logging.getLogger("cfsleep")


def _config(path) -> ScenarioConfig:
    return load_config(path) if path else ScenarioConfig()


def cmd_run(args) -> int:
    spec = ExperimentSpec(
        config=_config(args.config), config_path=args.config, axis=args.axis,
        values=tuple(args.values) if args.values else (0,), trials=args.trials,
        schemes=tuple(args.schemes), output_dir=args.out, master_seed=args.seed,
        mode=args.mode, workers=args.workers)
    results = run_experiment(spec)
    for row in emit_plot_data(results, spec.axis):
        print(f"{row['scheme']:<26} {spec.axis}={row['value']:<3} "
              f"mean EE {row['mean_ee'] / 1e6:9.4f} Mbit/J  (n={row['count']}, "
              f"infeasible={row['infeasible']})")
    log.info("wrote %s", args.out)
    return 0


def cmd_solve(args) -> int:
    cfg = _config(args.config)
    rng = np.random.default_rng(args.seed)
    _, real = realize(cfg, rng)
    system = System.from_rng(cfg, real, rng)
    theta = RisPhase.random(cfg.num_ris, cfg.num_elements, rng).angles
    try:
        res = dinkelbach_solve(system, system.initial_state(theta=theta), mode=args.mode,
                               rng=np.random.default_rng(args.seed + 1))
    except InfeasibleError as exc:
        print(f"infeasible: {exc}")
        return 1
    sys.stdout.write(res.trace.to_csv(args.trace))
    ev = res.evaluation
    print(f"EE {ev.ee / 1e6:.4f} Mbit/J, sum rate {ev.f / 1e6:.2f} Mbit/s, power {ev.g:.3f} W, "
          f"active APs {ev.state.num_active}/{system.M}")
    return 0


def cmd_topology(args) -> int:
    cfg = _config(args.config)
    topo, real = realize(cfg, np.random.default_rng(args.seed))
    dump_topology(topo, args.out)
    if args.channels:
        dump_realization(real, args.channels)
    return 0


def cmd_aggregate(args) -> int:
    rows = read_raw(args.raw)
    out = emit_plot_data(rows, args.axis, args.out)
    if args.out is None:
        print(",".join(AGG_COLUMNS))
        for r in out:
            print(",".join(str(r[c]) for c in AGG_COLUMNS))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cfsleep", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="Monte Carlo sweep over K, M or L with baselines")
    r.add_argument("--config", help="YAML scenario config")
    r.add_argument("--axis", choices=["K", "M", "L", "none"], default="none")
    r.add_argument("--values", type=int, nargs="*")
    r.add_argument("--trials", type=int, default=1)
    r.add_argument("--schemes", nargs="+", choices=SCHEMES, default=list(SCHEMES))
    r.add_argument("--mode", choices=["near_optimal", "low_complexity"], default="low_complexity",
                   help="RIS method of the optimised-RIS baseline")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed", type=int, default=0, help="master seed")
    r.add_argument("--workers", type=int, default=1)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("solve", help="solve one seeded instance and print the Dinkelbach trace")
    s.add_argument("--config")
    s.add_argument("--mode", choices=["near_optimal", "low_complexity"])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trace", help="also write the trace CSV here")
    s.set_defaults(func=cmd_solve)

    t = sub.add_parser("topology", help="dump a seeded topology (and optionally the channels)")
    t.add_argument("--config")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.add_argument("--channels", help="binary channel dump path")
    t.set_defaults(func=cmd_topology)

    a = sub.add_parser("aggregate", help="recompute per-axis aggregates from a raw CSV")
    a.add_argument("raw")
    a.add_argument("--axis")
    a.add_argument("--out")
    a.set_defaults(func=cmd_aggregate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
