"""M3 against the two-point instance with (c, d) hidden in its grid gap.

The pair (p, p) with c < p < d earns 1/2 per round in expectation, while
every pair M3 can post has bid and ask outside (c, d) and earns nothing on
average, so its regret grows linearly.
"""
import argparse

import numpy as np

from m3lab.envs import EnvironmentSpec
from m3lab.experiment import RunConfig, run_experiment
from m3lab.learners import centered_pair, grid_gap_around_half


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--arms", type=int, default=22, help="grid size; arms - 1 must be odd")
    ap.add_argument("--horizon", type=int, default=10_000)
    ap.add_argument("--seeds", type=int, default=20)
    args = ap.parse_args()

    c, d = centered_pair(grid_gap_around_half(args.arms))
    env = EnvironmentSpec.unlearnable(c, d)
    seeds = tuple(range(args.seeds))
    print(f"grid of {args.arms} points, (c, d) = ({c:.6f}, {d:.6f})")
    for learner in ("m3", "random", "fixed"):
        cfg = RunConfig(env, (args.horizon,), seeds, learner=learner, n_arms=args.arms,
                        fixed_pair=((c + d) / 2, (c + d) / 2), trajectory_points=1)
        s = run_experiment(cfg, write=False)
        util = np.mean([r.utility.mean() for r in s["results"]])
        print(f"{learner:>7}: mean utility/round {util:+.4f}, mean regret/T "
              f"{s['rows'][0]['mean_regret'] / args.horizon:.4f}")


if __name__ == "__main__":
    main()
