"""Discretised sub-learners, the M3 combiner and two baseline makers.

Every maker exposes ``act() -> BidAskPair`` and ``update(feedback)``; each one
owns its random generator(s), so a run is reproducible from the seeds used
to build it.
"""
from __future__ import annotations

import math

import numpy as np

from .bandit import make_bandit, rescale_utility
from .core import BidAskPair, FeedbackRecord
from .envs import ceil_cbrt


def default_arms(horizon: int) -> int:
    """Grid size ceil(T^(1/3)) + 1."""
    return ceil_cbrt(horizon) + 1


def price_grid(n_arms: int) -> list[float]:
    if n_arms < 2:
        raise ValueError("a price grid needs at least two points")
    return [k / (n_arms - 1) for k in range(n_arms)]


class BufferedUniforms:
    """Serves ``random()`` from blocks drawn off a numpy generator.

    Scalar draws from a ``Generator`` cost far more than the bandit step
    they feed; blocks keep the stream deterministic and cheap.
    """

    def __init__(self, rng, block=4096):
        self.rng = rng
        self.block = block
        self._buf = []
        self._pos = 0

    def random(self) -> float:
        if self._pos == len(self._buf):
            self._buf = self.rng.random(self.block).tolist()
            self._pos = 0
        x = self._buf[self._pos]
        self._pos += 1
        return x


class GridLearner:
    """A bandit over the uniform grid ``q_k = k / (K - 1)``."""

    def __init__(self, n_arms, horizon, rng, algorithm="exp3"):
        self.grid = price_grid(n_arms)
        self.n_arms = n_arms
        self.bandit = make_bandit(algorithm, n_arms, horizon)
        self.rng = BufferedUniforms(rng)
        self.last_arm = None

    def _choose(self) -> float:
        self.last_arm = self.bandit.select_arm(self.rng)
        return self.grid[self.last_arm]

    def _posted(self) -> float:
        if self.last_arm is None:
            raise RuntimeError("update called before a price was posted")
        return self.grid[self.last_arm]

    def _feed(self, raw: float) -> None:
        self.bandit.update(self.last_arm, rescale_utility(raw))
        self.last_arm = None


class FirstPriceLearner(GridLearner):
    """Repeated first-price auction with the valuation revealed afterwards."""

    role = "fpa"

    def bid(self) -> float:
        return self._choose()

    def update(self, won: bool, value: float) -> None:
        x = self._posted()
        self._feed((value - x) if won else 0.0)


class PricingLearner(GridLearner):
    """Posted-price selling with the cost revealed afterwards."""

    role = "dp"

    def price(self) -> float:
        return self._choose()

    def update(self, sold: bool, cost: float) -> None:
        p = self._posted()
        self._feed((p - cost) if sold else 0.0)


def combine(x: float, p: float) -> tuple[BidAskPair, bool]:
    """Order the two recommendations into a valid pair; ties keep ``x`` as bid."""
    if x <= p:
        return BidAskPair(x, p), False
    return BidAskPair(p, x), True


def relay(swapped: bool, fb: FeedbackRecord) -> tuple[bool, bool]:
    """Feedback each sub-learner would have seen had its own price been posted.

    Returns ``(won, sold)`` for the auction and pricing learners. After a
    swap the auction bid sat at the ask, so the bid "won" exactly when the
    taker did not buy at the ask; symmetrically for the pricing learner.
    """
    if swapped:
        return not fb.sold, not fb.bought
    return fb.bought, fb.sold


class M3:
    """Run an auction learner on the bid and a pricing learner on the ask.

    When the auction learner's bid exceeds the pricing learner's price the
    two are swapped before posting, and the observed buy/sell indicators are
    translated back into the counterfactual ones each learner needs.
    """

    def __init__(self, fpa: FirstPriceLearner, dp: PricingLearner):
        self.fpa = fpa
        self.dp = dp
        self.swapped_last = False
        self.last_pair = None
        self.last_prices = None

    @classmethod
    def build(cls, horizon, seed_fpa, seed_dp, n_arms=None, algorithm="exp3"):
        K = default_arms(horizon) if n_arms is None else n_arms
        fpa = FirstPriceLearner(K, horizon, np.random.default_rng(seed_fpa), algorithm)
        dp = PricingLearner(K, horizon, np.random.default_rng(seed_dp), algorithm)
        return cls(fpa, dp)

    def act(self) -> BidAskPair:
        x = self.fpa.bid()
        p = self.dp.price()
        pair, swapped = combine(x, p)
        self.swapped_last = swapped
        self.last_pair = pair
        self.last_prices = (x, p)
        return pair

    def update(self, fb: FeedbackRecord) -> None:
        if self.last_pair is None:
            raise RuntimeError("update called before act")
        won, sold = relay(self.swapped_last, fb)
        self.fpa.update(won, fb.market_price)
        self.dp.update(sold, fb.market_price)
        self.last_pair = None


class FixedPair:
    """Posts the same pair every round and ignores feedback."""

    def __init__(self, pair: BidAskPair):
        self.pair = pair

    def act(self) -> BidAskPair:
        return self.pair

    def update(self, fb: FeedbackRecord) -> None:
        pass


class RandomPair:
    """Uniform pair on the upper triangle: two uniforms, sorted."""

    def __init__(self, rng):
        self.rng = rng

    def act(self) -> BidAskPair:
        u1, u2 = self.rng.random(), self.rng.random()
        return BidAskPair(min(u1, u2), max(u1, u2))

    def update(self, fb: FeedbackRecord) -> None:
        pass


LEARNERS = ("m3", "fixed", "random")


def grid_gap_around_half(n_arms: int) -> tuple[float, float]:
    """Open interval between the two grid points that straddle 1/2.

    Only defined when ``n_arms - 1`` is odd, so that 1/2 is off the grid.
    """
    if (n_arms - 1) % 2 == 0:
        raise ValueError("1/2 lies on the grid when n_arms - 1 is even")
    j = (n_arms - 1) // 2
    return j / (n_arms - 1), (j + 1) / (n_arms - 1)


def centered_pair(gap: tuple[float, float], width: float | None = None) -> tuple[float, float]:
    """(c, d) centred in ``gap``, by default spanning its middle half."""
    lo, hi = gap
    mid = 0.5 * (lo + hi)
    half = (hi - lo) / 4 if width is None else width / 2
    if not math.isfinite(half) or half <= 0 or mid - half <= lo or mid + half >= hi:
        raise ValueError("requested (c, d) does not fit strictly inside the gap")
    return mid - half, mid + half
