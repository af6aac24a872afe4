"""Recompute per-(scheme, value) EE aggregates from a raw CSV with the stdlib only.

Independent of the package code, so it doubles as a check on aggregate.csv:

    python scripts/recompute_aggregates.py results/raw.csv [results/aggregate.csv]
"""
import csv
import math
import statistics
import sys
from collections import defaultdict


def recompute(raw_path):
    groups = defaultdict(list)
    bad = defaultdict(int)
    with open(raw_path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["scheme"], int(row["value"]))
            if row["status"] == "ok":
                groups[key].append(float(row["ee"]))
            else:
                bad[key] += 1
                groups[key]
    out = {}
    for key, ee in groups.items():
        n = len(ee)
        out[key] = {
            "mean_ee": statistics.fmean(ee) if n else math.nan,
            "stderr_ee": statistics.stdev(ee) / math.sqrt(n) if n > 1 else math.nan,
            "median_ee": statistics.median(ee) if n else math.nan,
            "count": n,
            "infeasible": bad[key],
        }
    return out


def compare(raw_path, agg_path, rtol=1e-9):
    """Largest relative difference between recomputed and stored aggregates."""
    ref = recompute(raw_path)
    worst = 0.0
    with open(agg_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if len(rows) != len(ref):
        raise ValueError(f"{len(rows)} aggregate rows, expected {len(ref)}")
    for row in rows:
        exp = ref[(row["scheme"], int(row["value"]))]
        if int(row["count"]) != exp["count"] or int(row["infeasible"]) != exp["infeasible"]:
            raise ValueError(f"count mismatch for {row['scheme']} at {row['value']}")
        for col in ("mean_ee", "stderr_ee", "median_ee"):
            a, b = float(row[col]), exp[col]
            if math.isnan(a) and math.isnan(b):
                continue
            worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    return worst


def main(argv):
    if len(argv) == 2:
        print(f"largest relative difference: {compare(argv[0], argv[1]):.3e}")
        return 0
    for (scheme, value), agg in sorted(recompute(argv[0]).items()):
        print(scheme, value, agg)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
