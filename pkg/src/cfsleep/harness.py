"""Monte Carlo experiment runner: sweeps, paired baselines, CSV outputs.

Seeding rule
------------
Trial ``t`` at sweep value ``v`` draws its scenario (topology, channels,
pilot noise, starting RIS angles) from ``SeedSequence(master, spawn_key=(v, t))``.
Scheme ``s`` (its index in :data:`SCHEMES`) gets its own stream
``SeedSequence(master, spawn_key=(v, t, 1000 + s))`` for anything stochastic
inside the solver (WOA). Every scheme therefore sees the same channels.
"""
from __future__ import annotations

import csv
import math
import platform
import time
from dataclasses import asdict, dataclass, field
from multiprocessing import Pool
from pathlib import Path

import numpy as np
import scipy
import yaml

from .channel import RisPhase, realize
from .config import ScenarioConfig, load_config
from .optimizer import dinkelbach_solve
from .system import InfeasibleError, System

SCHEMES = (
    "proposed-near-optimal",
    "proposed-low-complexity",
    "no-RIS",
    "random-RIS",
    "all-active-optimized-RIS",
)

AXES = {"K": "num_ues", "M": "num_aps", "L": "num_ris", "none": None}

RAW_COLUMNS = ["scheme", "axis", "value", "trial", "status", "ee", "sum_rate", "power",
               "active_aps", "outer_iters", "evals_ap", "evals_power", "evals_ris", "seed"]
AGG_COLUMNS = ["scheme", "axis", "value", "mean_ee", "stderr_ee", "median_ee", "count",
               "infeasible"]


@dataclass
class ExperimentSpec:
    config: ScenarioConfig = field(default_factory=ScenarioConfig)
    axis: str = "none"
    values: tuple = (0,)
    trials: int = 1
    schemes: tuple = SCHEMES
    output_dir: str | None = None
    master_seed: int = 0
    mode: str = "low_complexity"  # RIS method for the optimised-RIS baseline
    workers: int = 1
    config_path: str | None = None
    # schemes run only at these sweep values (others at every value)
    restrict: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {sorted(AXES)}")
        if self.trials < 1:
            raise ValueError("trial count must be at least 1")
        self.values = tuple(int(v) for v in self.values)
        if self.axis != "none" and any(v <= 0 for v in self.values):
            raise ValueError("sweep values must be positive integers")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown:
            raise ValueError(f"unknown schemes {sorted(unknown)}")

    @classmethod
    def from_config_file(cls, path, **kwargs) -> "ExperimentSpec":
        return cls(config=load_config(path), config_path=str(path), **kwargs)

    def config_at(self, value: int) -> ScenarioConfig:
        key = AXES[self.axis]
        return self.config if key is None else self.config.replace(**{key: value})


@dataclass
class TrialResult:
    scheme: str
    axis: str
    value: int
    trial: int
    status: str
    ee: float
    sum_rate: float
    power: float
    active_aps: int
    outer_iters: int
    evals_ap: int
    evals_power: int
    evals_ris: int
    seed: int
    wall_time: float = 0.0

    def check_identity(self, rtol: float = 1e-12) -> bool:
        if self.status != "ok":
            return True
        return math.isclose(self.ee, self.sum_rate / self.power, rel_tol=rtol)


def trial_seed(master: int, value: int, trial: int, scheme: int | None = None) -> np.random.SeedSequence:
    key = (value, trial) if scheme is None else (value, trial, 1000 + scheme)
    return np.random.SeedSequence(master, spawn_key=key)


def _scheme_setup(name: str, system: System, theta0, mode: str):
    """(system, starting theta, solver kwargs) for one scheme."""
    if name == "proposed-near-optimal":
        return system, theta0, dict(mode="near_optimal")
    if name == "proposed-low-complexity":
        return system, theta0, dict(mode="low_complexity")
    if name == "no-RIS":
        return system.without_ris(), None, dict(mode=mode, blocks=("power",))
    if name == "random-RIS":
        return system, theta0, dict(mode=mode, blocks=("power",))
    if name == "all-active-optimized-RIS":
        return system, theta0, dict(mode=mode, blocks=("power", "ris"))
    raise ValueError(name)


def run_trial(spec: ExperimentSpec, value: int, trial: int) -> list[TrialResult]:
    cfg = spec.config_at(value)
    ss = trial_seed(spec.master_seed, value, trial)
    rng = np.random.default_rng(ss)
    _, real = realize(cfg, rng)
    base = System.from_rng(cfg, real, rng)
    theta0 = RisPhase.random(cfg.num_ris, cfg.num_elements, rng).angles
    seed_id = int(ss.generate_state(1)[0])
    out = []
    for idx, name in enumerate(SCHEMES):
        if name not in spec.schemes:
            continue
        allowed = spec.restrict.get(name)
        if allowed is not None and value not in allowed:
            continue
        sysm, theta, kw = _scheme_setup(name, System(base.cfg, base.real, base.pilot_noise),
                                        theta0, spec.mode)
        srng = np.random.default_rng(trial_seed(spec.master_seed, value, trial, idx))
        t0 = time.perf_counter()
        try:
            state = sysm.initial_state(theta=theta if theta is not None else np.zeros((0, 0)))
            res = dinkelbach_solve(sysm, state, rng=srng, **kw)
            ev = res.evaluation
            c = res.runner.counters
            row = TrialResult(name, spec.axis, value, trial, "ok", ev.ee, ev.f, ev.g,
                              ev.state.num_active, len(res.trace.records), c["ap"], c["power"],
                              c["ris"], seed_id)
        except InfeasibleError:
            nan = float("nan")
            row = TrialResult(name, spec.axis, value, trial, "infeasible", nan, nan, nan, 0, 0,
                              0, 0, 0, seed_id)
        row.wall_time = time.perf_counter() - t0
        out.append(row)
    return out


def _run_job(args):
    spec, value, trial = args
    return run_trial(spec, value, trial)


def _fmt(v):
    return repr(float(v)) if isinstance(v, float) else str(v)


def write_rows(rows, columns, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            d = asdict(r) if not isinstance(r, dict) else r
            w.writerow([_fmt(d[c]) for c in columns])


def read_raw(path) -> list[dict]:
    ints = {"value", "trial", "active_aps", "outer_iters", "evals_ap", "evals_power", "evals_ris",
            "seed"}
    floats = {"ee", "sum_rate", "power"}
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            for k in ints & rec.keys():
                rec[k] = int(rec[k])
            for k in floats & rec.keys():
                rec[k] = float(rec[k])
            rows.append(rec)
    return rows


def emit_plot_data(table, axis: str | None = None, path=None) -> list[dict]:
    """One row per (scheme, axis value): mean, standard error and median EE over ok trials."""
    rows = [asdict(r) if not isinstance(r, dict) else r for r in table]
    if not rows:
        raise ValueError("empty result table")
    axis = axis or rows[0]["axis"]
    groups: dict[tuple, list] = {}
    bad: dict[tuple, int] = {}
    order = []
    for r in rows:
        key = (r["scheme"], int(r["value"]))
        if key not in groups:
            groups[key] = []
            bad[key] = 0
            order.append(key)
        if r["status"] == "ok":
            groups[key].append(float(r["ee"]))
        else:
            bad[key] += 1
    out = []
    scheme_rank = {s: i for i, s in enumerate(SCHEMES)}
    for key in sorted(order, key=lambda k: (scheme_rank.get(k[0], len(SCHEMES)), k[0], k[1])):
        ee = np.array(groups[key])
        n = ee.size
        mean = float(ee.mean()) if n else float("nan")
        se = float(ee.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
        med = float(np.median(ee)) if n else float("nan")
        out.append(dict(scheme=key[0], axis=axis, value=key[1], mean_ee=mean, stderr_ee=se,
                        median_ee=med, count=n, infeasible=bad[key]))
    if path is not None:
        write_rows(out, AGG_COLUMNS, path)
    return out


def _manifest(spec: ExperimentSpec, results, elapsed) -> dict:
    cfg = spec.config.to_dict()
    return {
        "config_path": spec.config_path,
        "config": cfg,
        "axis": spec.axis,
        "values": list(spec.values),
        "trials": spec.trials,
        "schemes": list(spec.schemes),
        "restrict": {k: list(v) for k, v in spec.restrict.items()},
        "mode": spec.mode,
        "master_seed": spec.master_seed,
        "seed_rule": "SeedSequence(master, spawn_key=(value, trial)) for the scenario; "
                     "spawn_key=(value, trial, 1000 + scheme index) for the solver",
        "rows": len(results),
        "infeasible": sum(r.status != "ok" for r in results),
        "elapsed_s": round(elapsed, 3),
        "versions": {"python": platform.python_version(), "numpy": np.__version__,
                     "scipy": scipy.__version__},
    }


def run_experiment(spec: ExperimentSpec) -> list[TrialResult]:
    """Run every (value, trial, scheme) combination; write CSVs if an output dir is set.

    Files: ``raw.csv`` (no wall times, so reruns are byte-identical),
    ``timing.csv``, ``aggregate.csv`` and ``manifest.yaml``.
    """
    t0 = time.perf_counter()
    jobs = [(spec, v, t) for v in spec.values for t in range(spec.trials)]
    if spec.workers > 1:
        with Pool(spec.workers) as pool:
            chunks = pool.map(_run_job, jobs)
    else:
        chunks = [_run_job(j) for j in jobs]
    results = [r for chunk in chunks for r in chunk]
    for r in results:
        if not r.check_identity():
            raise AssertionError(f"EE identity fails for {r}")
    if spec.output_dir is not None:
        out = Path(spec.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_rows(results, RAW_COLUMNS, out / "raw.csv")
        write_rows(results, ["scheme", "value", "trial", "wall_time"], out / "timing.csv")
        emit_plot_data(results, spec.axis, out / "aggregate.csv")
        with open(out / "manifest.yaml", "w") as fh:
            yaml.safe_dump(_manifest(spec, results, time.perf_counter() - t0), fh, sort_keys=False)
    return results
