"""Command line: ``simulate``, ``sweep``, ``best-fixed`` and ``verify``.

Settings come from an optional INI file with ``[environment]``,
``[learner]`` and ``[run]`` sections; any flag given on the command line
wins over the file. Example::

    [environment]
    kind = hard
    spike = 1

    [learner]
    name = m3
    bandit = exp3

    [run]
    horizons = 1024 2048 4096
    seeds = 0-19
    output = runs/hard
"""
from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path

import numpy as np

from .envs import EnvironmentSpec, HardInstanceParams, load_trace
from .experiment import RunConfig, run_experiment
from .hindsight import best_fixed_pair
from .verify import (
    cdf_growth_audit,
    check_construction,
    check_kl_bounds,
    lipschitz_audit,
    partition_audit,
)

LIPSCHITZ_SLACK = 1e-9


def parse_int_list(text: str) -> list[int]:
    """``"0-3 7,9"`` -> ``[0, 1, 2, 3, 7, 9]``; ``a-b`` ranges are inclusive."""
    out = []
    for tok in text.replace(",", " ").split():
        if "-" in tok:
            lo, hi = (int(x) for x in tok.split("-", 1))
            if hi < lo:
                raise ValueError(f"empty range {tok!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(tok))
    return out


def read_config(path) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    return {name: dict(parser[name]) for name in parser.sections()}


def _env_from(sections, args) -> EnvironmentSpec:
    env = dict(sections.get("environment", {}))
    for key in ("kind", "valuation", "market", "spike", "spike_count", "c", "d", "trace"):
        val = getattr(args, key, None)
        if val is not None:
            env[key] = str(val)
    env.setdefault("kind", "hard")
    return EnvironmentSpec.from_config(env)


def build_run_config(args, horizons_from_single=False) -> RunConfig:
    sections = read_config(args.config) if args.config else {}
    learner = sections.get("learner", {})
    run = sections.get("run", {})

    def pick(flag, section, key, cast, default=None):
        val = getattr(args, flag, None)
        if val is not None:
            return val
        if key in section and section[key] != "":
            return cast(section[key])
        return default

    if horizons_from_single:
        h = pick("horizon", run, "horizon", int)
        if h is None:
            hs = pick("horizons", run, "horizons", parse_int_list)
            if not hs:
                raise ValueError("no horizon given (--horizon or [run] horizon)")
            h = hs[-1]
        horizons = [h]
    else:
        horizons = pick("horizons", run, "horizons", parse_int_list)
        if not horizons:
            raise ValueError("no horizons given (--horizons or [run] horizons)")
    fixed = pick("fixed_pair", learner, "fixed_pair",
                 lambda s: tuple(float(x) for x in s.replace(",", " ").split()), (0.5, 0.5))
    return RunConfig(
        environment=_env_from(sections, args),
        horizons=tuple(horizons),
        seeds=tuple(pick("seeds", run, "seeds", parse_int_list, [0])),
        learner=pick("learner", learner, "name", str, "m3"),
        bandit=pick("bandit", learner, "bandit", str, "exp3"),
        n_arms=pick("arms", learner, "arms", int),
        fixed_pair=tuple(fixed),
        master_seed=pick("master_seed", run, "master_seed", int, 0),
        output=pick("output", run, "output", str),
        trajectory_points=pick("trajectory_points", run, "trajectory_points", int, 512),
        workers=pick("workers", run, "workers", int, 1),
    )


def _print_summary(summary):
    for row in summary["rows"]:
        line = (f"T={row['horizon']:>8d}  mean_regret={row['mean_regret']:.4f}  "
                f"std={row['std_regret']:.4f}  n={row['n_seeds']}")
        if "mean_expected_regret" in row:
            line += f"  mean_expected_regret={row['mean_expected_regret']:.4f}"
        print(line)
    if summary.get("exponent_fit") is not None:
        print(f"exponent_fit={summary['exponent_fit']:.4f}")
    if summary.get("exponent_fit_expected") is not None:
        print(f"exponent_fit_expected={summary['exponent_fit_expected']:.4f}")


def cmd_run(args, single) -> int:
    config = build_run_config(args, horizons_from_single=single)
    if config.output:
        out = Path(config.output)
        out.mkdir(parents=True, exist_ok=True)
    summary = run_experiment(config)
    _print_summary(summary)
    if config.output:
        print(f"artifacts written to {config.output}")
    return 0


def cmd_best_fixed(args) -> int:
    rounds = load_trace(args.trace)
    value, w = best_fixed_pair(rounds)
    result = {
        "rounds": len(rounds),
        "benchmark_value": float(value),
        "witness": {"bid": w.bid, "ask": w.ask, "ask_left_limit": w.ask_left_limit},
    }
    text = json.dumps(result, indent=2)
    if args.json:
        Path(args.json).write_text(text)
    print(text)
    return 0


def run_verification(Ks, samples, partition_points, pairs, seed) -> dict:
    """Every lemma audit for each ``K``; ``passed`` is the conjunction."""
    rng = np.random.default_rng(seed)
    report = {"c1": "2/81", "c2": "65/9", "K": list(Ks), "kl": [], "construction": [],
              "lipschitz": [], "partition": []}
    ok = True
    for K in Ks:
        kl = check_kl_bounds(K, samples, rng)
        report["kl"].append(kl)
        ok &= kl["violations"] == 0 and kl["negative_kl"] == 0
        for k in range(1, K + 1):
            c = check_construction(K, k)
            report["construction"].append(c)
            ok &= c["passed"]
            lip = lipschitz_audit(HardInstanceParams.from_K(K, k), pairs, rng)
            lip["K"], lip["k"] = K, k
            lip["passed"] = (lip["cdf_slope"] <= lip["cdf_bound"] + LIPSCHITZ_SLACK
                             and lip["tent_slope"] <= lip["tent_bound"] + LIPSCHITZ_SLACK)
            report["lipschitz"].append(lip)
            ok &= lip["passed"]
        part = partition_audit(K, partition_points, rng)
        part["passed"] = part["passed_points"] == part["samples"]
        report["partition"].append(part)
        ok &= part["passed"]
    growth = cdf_growth_audit(pairs, rng)
    growth["passed"] = growth["min_ratio"] >= growth["bound"] - 1e-12
    report["cdf_growth"] = growth
    ok &= growth["passed"]
    report["passed"] = bool(ok)
    return report


def cmd_verify(args) -> int:
    report = run_verification(args.K, args.samples, args.partition_points, args.pairs, args.seed)
    for kl in report["kl"]:
        print(f"K={kl['K']:>3d} KL audit: violations={kl['violations']} "
              f"max_ratio_exploit={kl['max_ratio_exploit']:.4f} "
              f"max_ratio_explore={kl['max_ratio_explore']:.4f}")
    bad = [c for c in report["construction"] if not c["passed"]]
    print(f"construction audit: {len(report['construction']) - len(bad)}/"
          f"{len(report['construction'])} spikes pass")
    for p in report["partition"]:
        print(f"K={p['K']:>3d} partition: {p['passed_points']}/{p['samples']} points pass")
    print(f"cdf growth min ratio={report['cdf_growth']['min_ratio']:.6f} (bound 1/6)")
    print("PASS" if report["passed"] else "FAIL")
    if args.output:
        out = Path(args.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(report, indent=2))
    return 0 if report["passed"] else 1


def _add_run_flags(p, single):
    p.add_argument("--config", help="INI file with [environment], [learner], [run]")
    g = p.add_argument_group("environment")
    g.add_argument("--kind", choices=["smooth_iid", "hard", "unlearnable", "custom"])
    g.add_argument("--valuation", choices=["base", "uniform"])
    g.add_argument("--market", choices=["hard", "uniform"])
    g.add_argument("--spike", type=int, help="spike index k of a hard instance")
    g.add_argument("--spike-count", dest="spike_count", type=int,
                   help="number of strips K (default: ceil(T^(1/3)))")
    g.add_argument("--c", type=float)
    g.add_argument("--d", type=float)
    g.add_argument("--trace", help="CSV with columns m,v for custom environments")
    g = p.add_argument_group("learner")
    g.add_argument("--learner", choices=["m3", "fixed", "random"])
    g.add_argument("--bandit", choices=["exp3", "tsallis"])
    g.add_argument("--arms", type=int, help="grid size (default ceil(T^(1/3)) + 1)")
    g.add_argument("--fixed-pair", dest="fixed_pair", type=float, nargs=2, metavar=("BID", "ASK"))
    g = p.add_argument_group("run")
    if single:
        g.add_argument("--horizon", type=int)
    else:
        g.add_argument("--horizons", type=parse_int_list, help='e.g. "1024 2048 4096"')
    g.add_argument("--seeds", type=parse_int_list, help='e.g. "0-19" or "1,5,9"')
    g.add_argument("--master-seed", dest="master_seed", type=int)
    g.add_argument("--output", help="artifact directory")
    g.add_argument("--trajectory-points", dest="trajectory_points", type=int)
    g.add_argument("--workers", type=int)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="m3lab", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_flags(sub.add_parser("simulate", help="run one horizon over a set of seeds"), True)
    _add_run_flags(sub.add_parser("sweep", help="run a horizon grid and fit the regret exponent"), False)
    p = sub.add_parser("best-fixed", help="best fixed pair in hindsight for a recorded trace")
    p.add_argument("trace", help="CSV with columns m,v")
    p.add_argument("--json", help="also write the result here")
    p = sub.add_parser("verify", help="audit the lower-bound construction")
    p.add_argument("--K", type=int, nargs="+", default=[4, 8, 16])
    p.add_argument("--samples", type=int, default=1000, help="points per region")
    p.add_argument("--partition-points", dest="partition_points", type=int, default=100_000)
    p.add_argument("--pairs", type=int, default=100_000, help="random pairs for slope checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="JSON report path")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_run(args, single=True)
        if args.command == "sweep":
            return cmd_run(args, single=False)
        if args.command == "best-fixed":
            return cmd_best_fixed(args)
        return cmd_verify(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
