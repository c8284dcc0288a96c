"""Regret-rate sweep for M3 over T = 2^10 .. 2^17.

    python scripts/rate_sweep.py --env hard --seeds 20 --out runs/hard
    python scripts/rate_sweep.py --env smooth --market uniform --bandit tsallis

Prints per-horizon regret and the fitted log-log exponent; with ``--out``
the per-run CSVs, summary.json and manifest.json are written there.
"""
import argparse
import time

from m3lab.envs import EnvironmentSpec
from m3lab.experiment import RunConfig, run_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--env", choices=["hard", "smooth"], default="hard")
    ap.add_argument("--market", choices=["hard", "uniform"], default="hard")
    ap.add_argument("--bandit", choices=["exp3", "tsallis"], default="exp3")
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--min-exp", type=int, default=10)
    ap.add_argument("--max-exp", type=int, default=17)
    ap.add_argument("--master-seed", type=int, default=0)
    ap.add_argument("--points", type=int, default=1, help="trajectory rows per run")
    ap.add_argument("--out")
    args = ap.parse_args()

    env = EnvironmentSpec.hard_instance() if args.env == "hard" else EnvironmentSpec.smooth_iid("base", args.market)
    cfg = RunConfig(
        env,
        tuple(2**i for i in range(args.min_exp, args.max_exp + 1)),
        tuple(range(args.seeds)),
        bandit=args.bandit,
        master_seed=args.master_seed,
        output=args.out,
        trajectory_points=args.points,
    )
    t0 = time.perf_counter()
    summary = run_experiment(cfg)
    print(f"{'T':>8} {'mean':>10} {'std':>9} {'expected':>10} {'mean/T^(2/3)':>13}")
    for r in summary["rows"]:
        T = r["horizon"]
        print(f"{T:>8d} {r['mean_regret']:>10.1f} {r['std_regret']:>9.1f} "
              f"{r['mean_expected_regret']:>10.1f} {r['mean_regret'] / T ** (2 / 3):>13.3f}")
    print(f"exponent (realised regret) = {summary['exponent_fit']:.3f}")
    print(f"exponent (expected-utility regret) = {summary['exponent_fit_expected']:.3f}")
    print(f"elapsed {time.perf_counter() - t0:.0f}s")


if __name__ == "__main__":
    main()
