"""EE versus number of UEs at desk scale (M=10, L=2, N=16), all schemes.

    python scripts/sweep_k.py --trials 30 --out results/sweep_k
"""
import argparse
from pathlib import Path

from cfsleep.harness import SCHEMES, ExperimentSpec, emit_plot_data, run_experiment

DESK = Path(__file__).resolve().parents[1] / "configs" / "desk.yaml"


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", default=str(DESK))
    ap.add_argument("--values", type=int, nargs="+", default=list(range(2, 9)))
    ap.add_argument("--trials", type=int, default=30)
    ap.add_argument("--near-optimal-at", type=int, nargs="*", default=[5],
                    help="K values at which the near-optimal mode also runs")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/sweep_k")
    args = ap.parse_args()
    spec = ExperimentSpec.from_config_file(
        args.config, axis="K", values=args.values, trials=args.trials, schemes=SCHEMES,
        restrict={"proposed-near-optimal": tuple(args.near_optimal_at)}, output_dir=args.out,
        master_seed=args.seed, workers=args.workers)
    for row in emit_plot_data(run_experiment(spec), "K"):
        print(f"{row['scheme']:<26} K={row['value']:<2} mean {row['mean_ee'] / 1e6:8.3f} "
              f"median {row['median_ee'] / 1e6:8.3f} Mbit/J (n={row['count']})")


if __name__ == "__main__":
    main()
