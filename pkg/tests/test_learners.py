import numpy as np
import pytest
from hypothesis import given, strategies as st

from m3lab.core import BidAskPair, FeedbackRecord, MarketRound, make_feedback, utility
from m3lab.learners import (
    M3,
    BufferedUniforms,
    FirstPriceLearner,
    FixedPair,
    PricingLearner,
    RandomPair,
    centered_pair,
    combine,
    default_arms,
    grid_gap_around_half,
    price_grid,
    relay,
)

unit = st.floats(0, 1)


class Recorder:
    """Stands in for a bandit core and remembers what it was fed."""

    def __init__(self, arm):
        self.arm = arm
        self.fed = []

    def select_arm(self, rng):
        return self.arm

    def update(self, arm, reward):
        self.fed.append((arm, reward))


def rigged(cls, K, arm):
    learner = cls(K, 100, np.random.default_rng(0))
    learner.bandit = Recorder(arm)
    return learner


def test_grid():
    assert price_grid(5) == [0, 0.25, 0.5, 0.75, 1]
    assert default_arms(1000) == 11
    assert default_arms(1001) == 12
    with pytest.raises(ValueError):
        price_grid(1)


def test_fresh_grid_learner_is_uniform():
    fpa = FirstPriceLearner(5, 100, np.random.default_rng(0))
    assert np.allclose(fpa.bandit.arm_probabilities(), 0.2)


def test_arm_maps_to_price():
    assert rigged(FirstPriceLearner, 5, 2).bid() == 0.5


@pytest.mark.parametrize("won,z,arm,reward", [
    (False, 0.3, 2, 0.5),
    (True, 0.9, 2, 0.7),
    (True, 0.0, 4, 0.0),
])
def test_fpa_update(won, z, arm, reward):
    fpa = rigged(FirstPriceLearner, 5, arm)
    fpa.bid()
    fpa.update(won, z)
    assert fpa.bandit.fed[0][0] == arm
    assert fpa.bandit.fed[0][1] == pytest.approx(reward)


@pytest.mark.parametrize("sold,c,arm,reward", [
    (False, 0.3, 2, 0.5),
    (True, 0.9, 3, 0.425),
    (True, 0.0, 4, 1.0),
])
def test_dp_update(sold, c, arm, reward):
    dp = rigged(PricingLearner, 5, arm)
    dp.price()
    dp.update(sold, c)
    assert dp.bandit.fed[0][1] == pytest.approx(reward)


def test_update_without_post():
    with pytest.raises(RuntimeError):
        FirstPriceLearner(3, 10, np.random.default_rng(0)).update(True, 0.5)
    with pytest.raises(RuntimeError):
        PricingLearner(3, 10, np.random.default_rng(0)).update(True, 0.5)
    m3 = M3.build(100, 0, 1)
    with pytest.raises(RuntimeError):
        m3.update(FeedbackRecord(False, False, 0.5))


@pytest.mark.parametrize("x,p,pair,swapped", [
    (0.3, 0.7, (0.3, 0.7), False),
    (0.7, 0.3, (0.3, 0.7), True),
    (0.5, 0.5, (0.5, 0.5), False),
])
def test_combine(x, p, pair, swapped):
    out, sw = combine(x, p)
    assert (out.bid, out.ask, sw) == (*pair, swapped)


def test_relay_table():
    # swapped, V = 0.4, posted (0.3, 0.7): nothing trades
    fb = make_feedback(BidAskPair(0.3, 0.7), MarketRound(0.5, 0.4))
    assert (fb.bought, fb.sold) == (False, False)
    assert relay(True, fb) == (True, True)
    fb = FeedbackRecord(True, False, 0.5)
    assert relay(False, fb) == (True, False)


@given(unit, unit, unit, unit)
def test_relay_is_counterfactual(x, p, v, m):
    pair, swapped = combine(x, p)
    won, sold = relay(swapped, make_feedback(pair, MarketRound(m, v)))
    assert won == (x >= v)
    assert sold == (p < v)


def test_m3_feeds_each_sublearner():
    fpa = rigged(FirstPriceLearner, 5, 3)  # X = 0.75
    dp = rigged(PricingLearner, 5, 1)  # P = 0.25
    m3 = M3(fpa, dp)
    pair = m3.act()
    assert (pair.bid, pair.ask, m3.swapped_last) == (0.25, 0.75, True)
    assert m3.last_prices == (0.75, 0.25)
    m3.update(make_feedback(pair, MarketRound(0.9, 0.5)))
    # X = 0.75 >= 0.5 wins at z = 0.9; P = 0.25 < 0.5 sells at cost 0.9
    assert fpa.bandit.fed == [(3, pytest.approx((0.15 + 1) / 2))]
    assert dp.bandit.fed == [(1, pytest.approx((-0.65 + 1) / 2))]


def test_m3_default_grid_and_determinism():
    a, b = M3.build(1000, 5, 6), M3.build(1000, 5, 6)
    assert a.fpa.n_arms == 11 and a.dp.n_arms == 11
    rng = np.random.default_rng(0)
    for _ in range(300):
        pa, pb = a.act(), b.act()
        assert pa == pb
        assert pa.bid <= pa.ask
        rnd = MarketRound(float(rng.random()), float(rng.random()))
        a.update(make_feedback(pa, rnd))
        b.update(make_feedback(pb, rnd))


def test_m3_tsallis_core():
    m3 = M3.build(200, 1, 2, algorithm="tsallis", n_arms=4)
    for _ in range(50):
        pair = m3.act()
        m3.update(make_feedback(pair, MarketRound(0.5, 0.5)))


def test_fixed_pair_on_unlearnable():
    learner = FixedPair(BidAskPair(0.5, 0.5))
    total = 0.0
    for m, v in [(0.0, 0.51), (1.0, 0.49)] * 10:
        pair = learner.act()
        total += utility(pair, m, v)
        learner.update(make_feedback(pair, MarketRound(m, v)))
        assert learner.pair == BidAskPair(0.5, 0.5)
    assert total == 10.0


def test_random_pair_valid():
    learner = RandomPair(np.random.default_rng(0))
    for _ in range(1000):
        pair = learner.act()
        assert 0 <= pair.bid <= pair.ask <= 1


def test_grid_gap():
    assert grid_gap_around_half(22) == (10 / 21, 11 / 21)
    with pytest.raises(ValueError):
        grid_gap_around_half(21)
    c, d = centered_pair((0.4, 0.6))
    assert (c, d) == pytest.approx((0.45, 0.55))
    with pytest.raises(ValueError):
        centered_pair((0.4, 0.6), width=0.3)


def test_buffered_uniforms_follow_stream():
    a = BufferedUniforms(np.random.default_rng(3), block=7)
    ref = np.random.default_rng(3).random(21).tolist()
    assert [a.random() for _ in range(21)] == ref
