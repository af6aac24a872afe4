"""EE versus number of APs at desk scale (K=4, L=2, N=16): proposed vs all-active.

    python scripts/sweep_m.py --trials 30 --out results/sweep_m
"""
import argparse
from pathlib import Path

from cfsleep.config import load_config
from cfsleep.harness import ExperimentSpec, emit_plot_data, run_experiment

DESK = Path(__file__).resolve().parents[1] / "configs" / "desk.yaml"


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", default=str(DESK))
    ap.add_argument("--ues", type=int, default=4)
    ap.add_argument("--values", type=int, nargs="+", default=list(range(4, 15)))
    ap.add_argument("--trials", type=int, default=30)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/sweep_m")
    args = ap.parse_args()
    cfg = load_config(args.config).replace(num_ues=args.ues)
    spec = ExperimentSpec(config=cfg, config_path=args.config, axis="M", values=args.values,
                          trials=args.trials,
                          schemes=("proposed-low-complexity", "all-active-optimized-RIS"),
                          output_dir=args.out, master_seed=args.seed, workers=args.workers)
    for row in emit_plot_data(run_experiment(spec), "M"):
        print(f"{row['scheme']:<26} M={row['value']:<2} mean {row['mean_ee'] / 1e6:8.3f} "
              f"Mbit/J (stderr {row['stderr_ee'] / 1e6:.3f}, n={row['count']})")


if __name__ == "__main__":
    main()
