"""Best fixed bid/ask pair in hindsight, regret reports and rate fits.

The hindsight objective over a trace is separable,

    sum_t (m_t - b) 1{b >= v_t}  +  sum_t (a - m_t) 1{a < v_t},

subject to ``b <= a``. The buy part only jumps at ``b = v_t`` and decreases
in between, so its supremum over any interval ``[0, a]`` is attained at
``b = 0`` or at some valuation. The sell part increases between valuations
and drops right at them, so its supremum is approached as ``a`` rises to a
valuation from below (a left limit, with ``1{a < v_s}`` read as
``1{v_t <= v_s}``), or is 0 at ``a = 1``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .core import BidAskPair, MarketRound


@dataclass(frozen=True)
class Witness:
    bid: float
    ask: float
    ask_left_limit: bool = False


def _as_arrays(rounds):
    if isinstance(rounds, tuple) and len(rounds) == 2 and not isinstance(rounds[0], MarketRound):
        m, v = rounds
        return list(m), list(v)
    return [r.market_price for r in rounds], [r.taker_valuation for r in rounds]


def hindsight_value(rounds, bid, ask, ask_left_limit=False):
    """Total utility of a fixed pair over the trace (fsum for floats).

    With ``ask_left_limit`` the value is the limit as the ask rises to
    ``ask`` from below.
    """
    m, v = _as_arrays(rounds)
    terms = []
    for mt, vt in zip(m, v):
        if bid >= vt:
            terms.append(mt - bid)
        elif (ask <= vt) if ask_left_limit else (ask < vt):
            terms.append(ask - mt)
    if any(isinstance(t, Fraction) for t in terms):
        return sum(terms, Fraction(0))
    return math.fsum(terms)


def best_fixed_pair(rounds):
    """Supremum of the hindsight objective over all pairs with ``bid <= ask``.

    Returns ``(value, witness)``. The witness may be a left limit in the ask,
    in which case the supremum is approached but not attained. Runs in
    ``O(T log T)``; exact when the trace holds ``Fraction`` values.
    """
    m, v = _as_arrays(rounds)
    if not m:
        return 0.0, Witness(0.0, 1.0)
    exact = any(isinstance(x, Fraction) for x in m + v)
    zero = Fraction(0) if exact else 0.0

    by_value = {}
    for mt, vt in zip(m, v):
        cnt, tot = by_value.get(vt, (0, zero))
        by_value[vt] = (cnt + 1, tot + mt)
    u = sorted(by_value)
    n = len(u)

    # buy side at b = u_i: sum over v_t <= u_i of (m_t - u_i)
    buy = []
    cnt_le, sum_le = 0, zero
    for ui in u:
        c, s = by_value[ui]
        cnt_le += c
        sum_le += s
        buy.append(sum_le - ui * cnt_le)
    # sell side as a rises to u_j: sum over v_t >= u_j of (u_j - m_t)
    sell = [zero] * n
    cnt_ge, sum_ge = 0, zero
    for j in range(n - 1, -1, -1):
        c, s = by_value[u[j]]
        cnt_ge += c
        sum_ge += s
        sell[j] = u[j] * cnt_ge - sum_ge

    buy_at_zero = by_value[u[0]][1] if u[0] == 0 else zero

    # ask = 1 pairs with any bid
    best_val, best = buy_at_zero, (zero, None, False)
    for i in range(n):
        if buy[i] > best_val:
            best_val, best = buy[i], (u[i], None, False)

    # ask -> u_j from below pairs with bids strictly under u_j
    run_val, run_bid = buy_at_zero, zero
    for j in range(n):
        if u[j] > 0:
            cand = run_val + sell[j]
            if cand > best_val:
                best_val, best = cand, (run_bid, u[j], True)
        if buy[j] > run_val:
            run_val, run_bid = buy[j], u[j]

    bid, ask, left = best
    if ask is None:
        ask = Fraction(1) if exact else 1.0
    witness = Witness(bid, ask, left)
    if exact:
        return best_val, witness
    # recompute the winning total with a correctly rounded sum
    value = hindsight_value((m, v), bid, ask, left)
    return value, Witness(float(bid), float(ask), left)


def brute_force_best(rounds, n: int) -> float:
    """Max of the hindsight objective over the grid ``{(i/n, j/n): i <= j}``."""
    if n < 2:
        raise ValueError("grid resolution must be at least 2")
    m, v = (np.asarray(x, dtype=float) for x in _as_arrays(rounds))
    if m.size == 0:
        return 0.0
    x = np.arange(n + 1) / n
    buy = np.zeros(n + 1)
    sell = np.zeros(n + 1)
    for mt, vt in zip(m, v):
        buy += np.where(x >= vt, mt - x, 0.0)
        sell += np.where(x < vt, x - mt, 0.0)
    best_bid_upto = np.maximum.accumulate(buy)
    return float(np.max(best_bid_upto + sell))


def prefix_benchmarks(m, v, checkpoints) -> np.ndarray:
    """Hindsight supremum over rounds ``1..t`` for each ``t`` in ``checkpoints``.

    The candidate set is built once from every valuation in the trace plus
    ``b = 0``; candidates whose valuation has not arrived yet are still
    feasible points (or limits of feasible points), so including them does
    not change the supremum. Rounds between checkpoints are folded in as one
    batch, giving ``O(len(checkpoints) * T)`` work overall.
    """
    m = np.asarray(m, dtype=float)
    v = np.asarray(v, dtype=float)
    checkpoints = np.asarray(checkpoints, dtype=int)
    if checkpoints.size and (np.any(np.diff(checkpoints) <= 0) or checkpoints[0] < 0
                             or checkpoints[-1] > m.size):
        raise ValueError("checkpoints must be strictly increasing within [0, T]")
    cand = np.unique(np.concatenate([[0.0], v]))
    n = cand.size
    pos = np.searchsorted(cand, v)
    buy_sum = np.zeros(n)  # sum of m over v_t <= cand_i
    buy_cnt = np.zeros(n)
    sell_sum = np.zeros(n)  # sum of m over v_t >= cand_j
    sell_cnt = np.zeros(n)
    open_ask = cand > 0
    out = np.zeros(checkpoints.size)
    prior = np.empty(n)
    done = 0
    for k, t in enumerate(checkpoints):
        if t > done:
            p = pos[done:t]
            w = np.bincount(p, weights=m[done:t], minlength=n)
            c = np.bincount(p, minlength=n).astype(float)
            cw, cc = np.cumsum(w), np.cumsum(c)
            buy_sum += cw
            buy_cnt += cc
            # suffix sums: total minus the prefix strictly before j
            sell_sum += cw[-1] - cw + w
            sell_cnt += cc[-1] - cc + c
            done = t
        if t == 0:
            continue
        buy = buy_sum - cand * buy_cnt
        sell = cand * sell_cnt - sell_sum
        # bids strictly below cand_j: running max shifted by one
        prior[0] = -np.inf
        np.maximum.accumulate(buy[:-1], out=prior[1:])
        prior += sell
        out[k] = max(buy.max(), prior[open_ask].max(initial=-np.inf))
    return out


def trajectory_rounds(T: int, max_points: int = 512) -> np.ndarray:
    """Rounds (1-based) at which trajectories are recorded.

    Every round when ``T <= max_points``; otherwise an even stride that always
    includes the last round (just the last round when ``max_points == 1``).
    """
    if max_points < 1:
        raise ValueError("max_points must be positive")
    if max_points == 1:
        return np.array([T])
    if T <= max_points:
        return np.arange(1, T + 1)
    pts = np.unique(np.linspace(1, T, max_points).round().astype(int))
    return pts


@dataclass
class RegretReport:
    total_learner_utility: float
    benchmark_value: float
    witness: Witness
    regret: float
    trajectory: dict = field(repr=False)
    expected_benchmark: float | None = None
    expected_regret: float | None = None

    def to_dict(self) -> dict:
        d = {
            "total_learner_utility": self.total_learner_utility,
            "benchmark_value": self.benchmark_value,
            "witness": asdict(self.witness),
            "regret": self.regret,
            "expected_benchmark": self.expected_benchmark,
            "expected_regret": self.expected_regret,
            "trajectory": {k: np.asarray(val).tolist() for k, val in self.trajectory.items()},
        }
        return d

    def to_json(self, path=None, **kw) -> str:
        text = json.dumps(self.to_dict(), **kw)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def write_csv(self, path) -> None:
        tr = self.trajectory
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "cum_utility", "prefix_benchmark", "regret"])
            for row in zip(tr["t"], tr["cum_utility"], tr["prefix_benchmark"], tr["regret"]):
                w.writerow([int(row[0])] + [repr(float(x)) for x in row[1:]])


def cumulative_regret(rounds, learner_utilities, *, expected_per_round=None,
                      expected_utilities=None, max_points=512) -> RegretReport:
    """Realised regret of a learner against the best fixed pair on the trace.

    ``expected_per_round`` (the best expected one-round utility) and
    ``expected_utilities`` (the learner's expected utility each round) are
    optional; when both are given the report also carries the regret against
    the expected-utility maximiser.
    """
    m, v = _as_arrays(rounds)
    u = np.asarray(learner_utilities, dtype=float)
    if u.size != len(m):
        raise ValueError(f"{u.size} utilities for {len(m)} rounds")
    value, witness = best_fixed_pair((m, v))
    total = math.fsum(u)
    ts = trajectory_rounds(len(m), max_points) if m else np.array([], dtype=int)
    cum = np.cumsum(u)[ts - 1] if m else np.array([])
    prefix = prefix_benchmarks(m, v, ts)
    if m:
        # the last checkpoint is the full trace: keep it consistent with the exact sweep
        prefix[-1] = float(value)
        cum[-1] = total
    traj = {"t": ts, "cum_utility": cum, "prefix_benchmark": prefix, "regret": prefix - cum}
    exp_bench = exp_regret = None
    if expected_per_round is not None:
        exp_bench = float(expected_per_round) * len(m)
        if expected_utilities is not None:
            exp_regret = exp_bench - math.fsum(np.asarray(expected_utilities, dtype=float))
    return RegretReport(
        total_learner_utility=total,
        benchmark_value=float(value),
        witness=witness,
        regret=float(value) - total,
        trajectory=traj,
        expected_benchmark=exp_bench,
        expected_regret=exp_regret,
    )


def fit_scaling_exponent(horizons, regrets) -> float:
    """Least-squares slope of log(regret) against log(T)."""
    T = np.asarray(horizons, dtype=float)
    R = np.asarray(regrets, dtype=float)
    if T.size != R.size:
        raise ValueError("horizons and regrets differ in length")
    if T.size < 3:
        raise ValueError("need at least three horizons to fit an exponent")
    if np.any(R <= 0) or np.any(T <= 0):
        raise ValueError("unfittable: regrets and horizons must be positive")
    slope, _ = np.polyfit(np.log(T), np.log(R), 1)
    return float(slope)
