"""Protocol loop, seeding and batch runs with CSV/JSON artifacts.

A run is one (horizon, seed) pair. Its random streams come from
``SeedSequence(master_seed, spawn_key=(seed, horizon, component))``, so
adding seeds or horizons never changes the runs already in a sweep.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bandit import BANDITS
from .core import BidAskPair, FeedbackRecord
from .envs import EnvironmentSpec, best_expected_value, expected_utility_array, sample_trace
from .hindsight import cumulative_regret, fit_scaling_exponent, trajectory_rounds
from .learners import LEARNERS, M3, FixedPair, RandomPair

ENV, FPA, DP, BASELINE = range(4)
RUN_COLUMNS = ("t", "bid", "ask", "m", "v", "utility", "cum_utility", "prefix_benchmark", "regret")


def stream(master_seed: int, seed: int, horizon: int, component: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(seed, horizon, component))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class RunConfig:
    environment: EnvironmentSpec
    horizons: tuple[int, ...]
    seeds: tuple[int, ...]
    learner: str = "m3"
    bandit: str = "exp3"
    n_arms: int | None = None
    fixed_pair: tuple[float, float] = (0.5, 0.5)
    master_seed: int = 0
    output: str | None = None
    trajectory_points: int = 512
    workers: int = 1
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "horizons", tuple(int(h) for h in self.horizons))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "fixed_pair", tuple(float(x) for x in self.fixed_pair))
        self.validate()

    def validate(self):
        if not self.horizons:
            raise ValueError("no horizons given")
        if any(h < 1 for h in self.horizons):
            raise ValueError("horizons must be positive")
        if any(b <= a for a, b in zip(self.horizons, self.horizons[1:])):
            raise ValueError("horizons must be strictly increasing")
        if not self.seeds:
            raise ValueError("no seeds given")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        if self.learner not in LEARNERS:
            raise ValueError(f"unknown learner {self.learner!r}; choose from {LEARNERS}")
        if self.bandit not in BANDITS:
            raise ValueError(f"unknown bandit {self.bandit!r}; choose from {sorted(BANDITS)}")
        if self.n_arms is not None and self.n_arms < 2:
            raise ValueError("n_arms must be at least 2")
        BidAskPair(*self.fixed_pair)
        if self.trajectory_points < 1:
            raise ValueError("trajectory_points must be positive")
        if self.workers < 1:
            raise ValueError("workers must be positive")

    def to_dict(self) -> dict:
        return {
            "environment": self.environment.to_config() if self.environment.kind != "custom"
            or self.environment.trace_path else {"kind": "custom"},
            "horizons": list(self.horizons),
            "seeds": list(self.seeds),
            "learner": self.learner,
            "bandit": self.bandit,
            "n_arms": self.n_arms,
            "fixed_pair": list(self.fixed_pair),
            "master_seed": self.master_seed,
            "trajectory_points": self.trajectory_points,
        }


def make_learner(config: RunConfig, horizon: int, seed: int):
    if config.learner == "m3":
        return M3.build(
            horizon,
            stream(config.master_seed, seed, horizon, FPA),
            stream(config.master_seed, seed, horizon, DP),
            n_arms=config.n_arms,
            algorithm=config.bandit,
        )
    if config.learner == "fixed":
        return FixedPair(BidAskPair(*config.fixed_pair))
    return RandomPair(stream(config.master_seed, seed, horizon, BASELINE))


def run_protocol(learner, m, v):
    """Play the maker against a fixed trace.

    Each round the learner posts a pair, the taker trades against it, the
    position is closed at ``m_t`` and the learner sees the two trade
    indicators plus ``m_t``. Returns arrays ``(bid, ask, utility)``.
    """
    T = len(m)
    bids = [0.0] * T
    asks = [0.0] * T
    util = [0.0] * T
    act, update = learner.act, learner.update
    for t, (mt, vt) in enumerate(zip(np.asarray(m).tolist(), np.asarray(v).tolist())):
        pair = act()
        b, a = pair.bid, pair.ask
        bought = b >= vt
        sold = a < vt
        if bought:
            util[t] = mt - b
        elif sold:
            util[t] = a - mt
        update(FeedbackRecord(bought, sold, mt))
        bids[t] = b
        asks[t] = a
    return np.array(bids), np.array(asks), np.array(util)


@dataclass
class RunResult:
    horizon: int
    seed: int
    bid: np.ndarray
    ask: np.ndarray
    m: np.ndarray
    v: np.ndarray
    utility: np.ndarray
    report: object

    @property
    def regret(self) -> float:
        return self.report.regret

    def rows(self):
        tr = self.report.trajectory
        idx = np.asarray(tr["t"]) - 1
        for n, i in enumerate(idx):
            yield (int(i + 1), self.bid[i], self.ask[i], self.m[i], self.v[i], self.utility[i],
                   tr["cum_utility"][n], tr["prefix_benchmark"][n], tr["regret"][n])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(RUN_COLUMNS)
            for row in self.rows():
                w.writerow([row[0]] + [repr(float(x)) for x in row[1:]])


def _expected_best(spec: EnvironmentSpec):
    if spec.kind == "custom":
        return None
    return best_expected_value(spec)


def run_single(config: RunConfig, horizon: int, seed: int) -> RunResult:
    spec = config.environment.for_horizon(horizon)
    m, v = sample_trace(spec, horizon, stream(config.master_seed, seed, horizon, ENV))
    learner = make_learner(config, horizon, seed)
    bid, ask, util = run_protocol(learner, m, v)
    best = _expected_best(spec)
    exp_utils = None if best is None else expected_utility_array(spec, bid, ask)
    report = cumulative_regret(
        (m, v), util,
        expected_per_round=best,
        expected_utilities=exp_utils,
        max_points=config.trajectory_points,
    )
    return RunResult(horizon, seed, bid, ask, m, v, util, report)


def _run_job(args):
    config, horizon, seed = args
    return run_single(config, horizon, seed)


def _std(x):
    return float(np.std(x, ddof=1)) if len(x) > 1 else 0.0


def summarize(results, horizons) -> dict:
    """Per-horizon mean/std of realised and expected regret plus exponent fits."""
    rows = []
    for h in horizons:
        rs = [r for r in results if r.horizon == h]
        reg = [r.report.regret for r in rs]
        row = {
            "horizon": h,
            "mean_regret": math.fsum(reg) / len(reg),
            "std_regret": _std(reg),
            "n_seeds": len(reg),
        }
        exp = [r.report.expected_regret for r in rs]
        if all(e is not None for e in exp):
            row["mean_expected_regret"] = math.fsum(exp) / len(exp)
            row["std_expected_regret"] = _std(exp)
        rows.append(row)
    out = {"rows": rows, "exponent_fit": _fit(rows, "mean_regret")}
    if all("mean_expected_regret" in r for r in rows):
        out["exponent_fit_expected"] = _fit(rows, "mean_expected_regret")
    return out


def _fit(rows, key):
    if len(rows) < 3:
        return None
    try:
        return fit_scaling_exponent([r["horizon"] for r in rows], [r[key] for r in rows])
    except ValueError:
        return None


def run_file(horizon, seed) -> str:
    return f"T{horizon}_seed{seed}.csv"


def run_experiment(config: RunConfig, write: bool = True) -> dict:
    """Run every (horizon, seed) pair; write artifacts when ``config.output`` is set.

    Artifacts: ``runs/T{h}_seed{s}.csv`` (columns as ``RUN_COLUMNS``, one
    row per recorded round), ``summary.json`` and ``manifest.json``.
    """
    config.validate()
    out = Path(config.output) if (write and config.output) else None
    if out is not None:
        (out / "runs").mkdir(parents=True, exist_ok=True)
    jobs = [(config, h, s) for h in config.horizons for s in config.seeds]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(j) for j in jobs]

    summary = summarize(results, config.horizons)
    if out is not None:
        runs = []
        for r in results:
            name = run_file(r.horizon, r.seed)
            r.write_csv(out / "runs" / name)
            runs.append({
                "horizon": r.horizon,
                "seed": r.seed,
                "file": f"runs/{name}",
                "regret": r.report.regret,
                "benchmark_value": r.report.benchmark_value,
                "total_learner_utility": r.report.total_learner_utility,
                "witness": {"bid": r.report.witness.bid, "ask": r.report.witness.ask,
                            "ask_left_limit": r.report.witness.ask_left_limit},
                "expected_regret": r.report.expected_regret,
            })
        with open(out / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2)
        manifest = {
            "config": config.to_dict(),
            "seed_scheme": "SeedSequence(master_seed, spawn_key=(seed, horizon, component)); "
                           "components env=0 fpa=1 dp=2 baseline=3",
            "columns": list(RUN_COLUMNS),
            "runs": runs,
        }
        with open(out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2)
    summary["results"] = results
    return summary


def summary_from_csvs(directory) -> dict:
    """Recompute per-horizon regret statistics from the last row of each run CSV."""
    directory = Path(directory)
    with open(directory / "manifest.json") as fh:
        manifest = json.load(fh)
    by_h = {}
    for run in manifest["runs"]:
        with open(directory / run["file"], newline="") as fh:
            last = list(csv.DictReader(fh))[-1]
        by_h.setdefault(run["horizon"], []).append(float(last["regret"]))
    return {h: (math.fsum(r) / len(r), _std(r), len(r)) for h, r in sorted(by_h.items())}


__all__ = [
    "RUN_COLUMNS", "RunConfig", "RunResult", "make_learner", "run_experiment", "run_protocol",
    "run_single", "stream", "summarize", "summary_from_csvs", "trajectory_rounds",
]
