"""Acceptance gate: one test per criterion, each at its stated tolerance.

Run alone with ``pytest tests/test_acceptance.py -v``; the terminal summary
ends with one PASS/FAIL line per criterion.
"""
import math
import time

import numpy as np

from m3lab.core import BidAskPair, MarketRound, make_feedback, utility
from m3lab.envs import (
    EnvironmentSpec,
    HardInstanceParams,
    expected_utility,
    expected_utility_array,
    sample_trace,
)
from m3lab.experiment import RunConfig, run_experiment
from m3lab.hindsight import best_fixed_pair, brute_force_best
from m3lab.learners import centered_pair, combine, grid_gap_around_half, price_grid, relay
from m3lab.verify import (
    cdf_growth_audit,
    check_construction,
    check_kl_bounds,
    lipschitz_audit,
)
from oracles import as_fraction_rounds, enumerate_best, lattice_instances

ROUNDOFF = 1e-12


def random_rounds(n, seed):
    """Uniform (X, P, V, M) with a quarter of the rounds snapped to a coarse grid to force ties."""
    rng = np.random.default_rng(seed)
    x = rng.random((n, 4))
    snap = rng.random(n) < 0.25
    x[snap, :3] = np.round(x[snap, :3] * 8) / 8
    return x.tolist()


def test_criterion_1_decomposition(record):
    rows = random_rounds(100_000, 1)
    start = time.perf_counter()
    violations = equal_breaks = 0
    for x, p, v, m in rows:
        pair, _ = combine(x, p)
        u = utility(pair, m, v)
        rhs = (m - x) * (x >= v) + (p - m) * (v > p)
        if u < rhs - ROUNDOFF:
            violations += 1
        if x <= p and abs(u - rhs) > ROUNDOFF:
            equal_breaks += 1
    elapsed = time.perf_counter() - start
    ok = violations == 0 and equal_breaks == 0 and elapsed < 1.0
    record(1, "decomposition inequality", ok,
           f"{len(rows)} rounds, violations={violations}, equality breaks={equal_breaks}, {elapsed:.2f}s")
    assert ok


def test_criterion_2_relay_fidelity(record):
    bad = 0
    rows = random_rounds(100_000, 2)
    for x, p, v, m in rows:
        pair, swapped = combine(x, p)
        won, sold = relay(swapped, make_feedback(pair, MarketRound(m, v)))
        bad += (won != (x >= v)) or (sold != (p < v))
    record(2, "counterfactual relay", bad == 0, f"{len(rows)} rounds, violations={bad}")
    assert bad == 0


HORIZONS = tuple(2**i for i in range(10, 18))
SEEDS = tuple(range(20))


def _rate(env, master_seed):
    cfg = RunConfig(env, HORIZONS, SEEDS, master_seed=master_seed, trajectory_points=1)
    return run_experiment(cfg, write=False)


def test_criterion_3_upper_bound_rate(record):
    start = time.perf_counter()
    cases = {
        "hard instance": _rate(EnvironmentSpec.hard_instance(k=1), 0),
        "smooth base valuations": _rate(EnvironmentSpec.smooth_iid("base", "hard"), 1),
    }
    ok = True
    parts = []
    for name, summary in cases.items():
        slope = summary["exponent_fit"]
        ratio = max(r["mean_regret"] / r["horizon"] ** (2 / 3) for r in summary["rows"])
        good = 0.55 <= slope <= 0.85 and ratio <= 2 * 8 + 100
        ok &= good
        parts.append(f"{name}: exponent={slope:.3f} (expected-utility regret {summary['exponent_fit_expected']:.3f}),"
                     f" max mean_regret/T^(2/3)={ratio:.2f}")
    elapsed = time.perf_counter() - start
    record(3, "upper-bound rate", ok, "; ".join(parts) + f"; {len(SEEDS)} seeds, {elapsed:.0f}s")
    assert ok


def test_criterion_4_unlearnable(record):
    K = 22
    c, d = centered_pair(grid_gap_around_half(K))
    env = EnvironmentSpec.unlearnable(c, d)
    T = 10_000
    m3 = run_experiment(RunConfig(env, (T,), SEEDS, n_arms=K, trajectory_points=1), write=False)
    per_round = m3["rows"][0]["mean_regret"] / T
    grid = price_grid(K)
    assert not any(c <= q <= d for q in grid)

    checks = []
    for p in ((c + d) / 2, c + (d - c) / 4):
        closed = expected_utility(env, BidAskPair(p, p))
        exact = (p + (1 - p)) / 2
        runs = run_experiment(RunConfig(env, (T,), SEEDS, learner="fixed", fixed_pair=(p, p),
                                        trajectory_points=1), write=False)["results"]
        u = np.concatenate([r.utility for r in runs])
        mean, se = u.mean(), u.std(ddof=1) / math.sqrt(u.size)
        checks.append((p, closed, exact, mean, se, abs(closed - exact) <= 1e-15 and abs(mean - closed) <= 3 * se))
    ok = per_round >= 0.45 and all(x[-1] for x in checks)
    detail = f"K={K}, (c,d)=({c:.4f},{d:.4f}), mean M3 regret/T={per_round:.4f}; " + "; ".join(
        f"fixed ({p:.4f},{p:.4f}) closed={cl:.6f} sim={mu:.6f} se={se:.2e}" for p, cl, _, mu, se, _ in checks)
    record(4, "unlearnable instance", ok, detail)
    assert ok


def test_criterion_5_kl_audit(record):
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    reps = [check_kl_bounds(K, 1000, rng) for K in (4, 8, 16)]
    elapsed = time.perf_counter() - start
    violations = sum(r["violations"] for r in reps)
    negative = sum(r["negative_kl"] for r in reps)
    ok = violations == 0 and negative == 0 and elapsed < 10
    detail = ", ".join(f"K={r['K']}: exploit ratio {r['max_ratio_exploit']:.3f}, explore ratio "
                       f"{r['max_ratio_explore']:.4f}" for r in reps)
    record(5, "KL lemma", ok, f"{detail}; violations={violations}, {elapsed:.1f}s")
    assert ok


def test_criterion_6_construction(record):
    rng = np.random.default_rng(6)
    failures = []
    max_cdf = max_tent_excess = 0.0
    for K in (4, 8, 16):
        for k in range(1, K + 1):
            rep = check_construction(K, k)
            if not rep["passed"]:
                failures.append((K, k, [n for n, c in rep["checks"].items() if not c["passed"]]))
            lip = lipschitz_audit(HardInstanceParams.from_K(K, k), 100_000, rng)
            max_cdf = max(max_cdf, lip["cdf_slope"])
            max_tent_excess = max(max_tent_excess, lip["tent_slope"] - lip["tent_bound"])
    growth = cdf_growth_audit(100_000, rng)
    ok = (not failures and max_cdf <= 4 + 1e-9 and max_tent_excess <= 1e-9
          and growth["min_ratio"] >= 1 / 6 and growth["pairs"] >= 50_000)
    record(6, "construction audit", ok,
           f"spike/plateau/explore/argmax failures={failures}, max F slope={max_cdf:.6f}, "
           f"max tent slope minus 2/eps={max_tent_excess:.2e}, "
           f"min (F(a)-F(b))/(a-b)={growth['min_ratio']:.4f} over {growth['pairs']} pairs")
    assert ok


def test_criterion_7_hindsight_oracle(record):
    rng = np.random.default_rng(7)
    n, T = 2000, 200
    worst_gap, below = 0.0, 0
    for _ in range(100):
        m, v = rng.random(T), rng.random(T)
        value, _ = best_fixed_pair((m, v))
        grid = brute_force_best((m, v), n)
        below += grid > value + ROUNDOFF
        worst_gap = max(worst_gap, value - grid)
    mismatches = count = 0
    for vs, ms in lattice_instances(5, seed=7):
        count += 1
        mismatches += best_fixed_pair(as_fraction_rounds(vs, ms))[0] != enumerate_best(vs, ms)
    ok = below == 0 and worst_gap <= 3 * T / n and mismatches == 0
    record(7, "hindsight oracle", ok,
           f"grid above sweep={below}, worst gap={worst_gap:.4f} (limit {3 * T / n}), "
           f"lattice mismatches={mismatches}/{count}")
    assert ok


def test_criterion_8_closed_form_vs_monte_carlo(record):
    spec = EnvironmentSpec.hard_instance(3, 2)
    p = spec.params
    rng = np.random.default_rng(8)
    m, v = sample_trace(spec, 1_000_000, rng)
    pairs = np.sort(rng.random((50, 2)), axis=1).tolist()
    for _ in range(50):
        b = p.r + (rng.random() - 0.5) * 2 * p.eps
        pairs.append([b, b + rng.random() * (1 - b)])
    worst = 0.0
    for b, a in pairs:
        u = np.where(b >= v, m - b, 0.0) + np.where(a < v, a - m, 0.0)
        se = u.std(ddof=1) / math.sqrt(u.size)
        diff = abs(float(expected_utility(spec, BidAskPair(b, a))) - u.mean())
        worst = max(worst, diff / se if se > 0 else (0.0 if diff <= ROUNDOFF else math.inf))
    ok = worst <= 5
    record(8, "closed form vs Monte Carlo", ok, f"100 pairs, 1e6 draws, worst |diff|/SE={worst:.2f}")
    assert ok


def test_criterion_9_discretisation(record):
    ok = True
    parts = []
    for K in (5, 9, 17):
        grid = np.array(price_grid(K))
        B, A = np.meshgrid(grid, grid, indexing="ij")
        keep = B <= A
        worst = 0.0
        for k in range(1, K):
            spec = EnvironmentSpec.hard_instance(K - 1, k)
            dense = np.linspace(0, 1, 200_001)
            sup = max(float(expected_utility(spec, BidAskPair(spec.params.r, 1.0))),
                      float(expected_utility_array(spec, dense, np.ones_like(dense)).max()))
            best_arm = float(expected_utility_array(spec, B[keep], A[keep]).max())
            worst = max(worst, sup - best_arm)
        bound = 5 / (2 * (K - 1))
        ok &= worst <= bound
        parts.append(f"K={K}: gap={worst:.4f} <= {bound:.4f}")
    record(9, "discretisation error", ok, ", ".join(parts))
    assert ok
