import pytest
from hypothesis import given, strategies as st

from m3lab.core import (
    BidAskPair,
    FeedbackRecord,
    MarketRound,
    TradeOutcome,
    make_feedback,
    trade_outcome,
    utility,
)

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


@st.composite
def pairs(draw):
    x, y = draw(unit), draw(unit)
    return BidAskPair(min(x, y), max(x, y))


@pytest.mark.parametrize("bid,ask,m,v,expected", [
    (0.5, 0.75, 0.9, 0.4, 0.4),
    (0.2, 0.6, 0.5, 0.7, 0.1),
    (0.2, 0.6, 0.5, 0.4, 0.0),
    (0.4, 0.4, 0.9, 0.4, 0.5),
])
def test_utility_examples(bid, ask, m, v, expected):
    assert utility(BidAskPair(bid, ask), m, v) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("v,outcome", [
    (0.3, TradeOutcome.BUY),
    (0.7, TradeOutcome.NO_TRADE),
    (0.71, TradeOutcome.SELL),
])
def test_trade_outcome_boundaries(v, outcome):
    assert trade_outcome(BidAskPair(0.3, 0.7), v) is outcome


@pytest.mark.parametrize("pair,rnd,bought,sold", [
    ((0.5, 0.9), (0.8, 0.2), True, False),
    ((0.1, 0.2), (0.8, 0.9), False, True),
    ((0.1, 0.9), (0.8, 0.5), False, False),
])
def test_make_feedback_examples(pair, rnd, bought, sold):
    fb = make_feedback(BidAskPair(*pair), MarketRound(*rnd))
    assert (fb.bought, fb.sold, fb.market_price) == (bought, sold, rnd[0])


@pytest.mark.parametrize("bid,ask", [(0.6, 0.5), (-0.1, 0.5), (0.2, 1.5)])
def test_pair_rejects_invalid(bid, ask):
    with pytest.raises(ValueError):
        BidAskPair(bid, ask)


def test_range_checks():
    with pytest.raises(ValueError):
        MarketRound(1.2, 0.5)
    with pytest.raises(ValueError):
        utility(BidAskPair(0.1, 0.2), 0.5, -0.1)
    with pytest.raises(ValueError):
        trade_outcome(BidAskPair(0.1, 0.2), 1.1)
    with pytest.raises(ValueError):
        FeedbackRecord(True, True, 0.5)


@given(pairs(), unit, unit)
def test_utility_matches_outcome(pair, m, v):
    u = utility(pair, m, v)
    out = trade_outcome(pair, v)
    if out is TradeOutcome.BUY:
        assert u == m - pair.bid
    elif out is TradeOutcome.SELL:
        assert u == pair.ask - m
    else:
        assert u == 0.0
    assert -1.0 <= u <= 1.0


@given(pairs(), unit, unit)
def test_feedback_agrees_and_recovers_utility(pair, m, v):
    fb = make_feedback(pair, MarketRound(m, v))
    out = trade_outcome(pair, v)
    assert fb.bought == (out is TradeOutcome.BUY)
    assert fb.sold == (out is TradeOutcome.SELL)
    assert fb.utility(pair) == utility(pair, m, v)


@given(unit, unit, unit, unit, unit)
def test_utility_affine_in_bid_away_from_v(b1, b2, ask_raw, m, v):
    # on one side of v the bid enters linearly with slope -1 or 0
    ask = max(b1, b2, ask_raw)
    lo, hi = min(b1, b2), max(b1, b2)
    if lo < v <= hi:
        return
    d = utility(BidAskPair(hi, ask), m, v) - utility(BidAskPair(lo, ask), m, v)
    expected = -(hi - lo) if lo >= v else 0.0
    assert d == pytest.approx(expected, abs=1e-12)
