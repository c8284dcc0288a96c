"""Prices, rounds and the maker's one-round utility.

A taker with valuation ``v`` sells to the maker when ``bid >= v`` and buys
from the maker when ``ask < v``. The maker closes the position at the market
price ``m`` in the same round, so nothing is carried between rounds.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass


def _check_unit(name, x):
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {x!r}")


@dataclass(frozen=True, slots=True)
class BidAskPair:
    bid: float
    ask: float

    def __post_init__(self):
        _check_unit("bid", self.bid)
        _check_unit("ask", self.ask)
        if self.bid > self.ask:
            raise ValueError(f"bid {self.bid!r} exceeds ask {self.ask!r}")


@dataclass(frozen=True, slots=True)
class MarketRound:
    market_price: float
    taker_valuation: float

    def __post_init__(self):
        _check_unit("market_price", self.market_price)
        _check_unit("taker_valuation", self.taker_valuation)


class TradeOutcome(enum.Enum):
    BUY = "buy"
    SELL = "sell"
    NO_TRADE = "none"


@dataclass(frozen=True, slots=True)
class FeedbackRecord:
    """What the maker sees once the round is over."""

    bought: bool
    sold: bool
    market_price: float

    def __post_init__(self):
        if self.bought and self.sold:
            raise ValueError("a round cannot be both a buy and a sell")
        _check_unit("market_price", self.market_price)

    def utility(self, pair: BidAskPair) -> float:
        """Recover the round's utility from the feedback and the posted pair."""
        if self.bought:
            return self.market_price - pair.bid
        if self.sold:
            return pair.ask - self.market_price
        return 0.0


def utility(pair: BidAskPair, m: float, v: float) -> float:
    """Maker utility ``(m - bid) 1{bid >= v} + (ask - m) 1{ask < v}``.

    Comparisons are exact; at most one indicator is active because
    ``bid <= ask``.
    """
    _check_unit("m", m)
    _check_unit("v", v)
    if pair.bid >= v:
        return m - pair.bid
    if pair.ask < v:
        return pair.ask - m
    return 0.0


def trade_outcome(pair: BidAskPair, v: float) -> TradeOutcome:
    _check_unit("v", v)
    if pair.bid >= v:
        return TradeOutcome.BUY
    if pair.ask < v:
        return TradeOutcome.SELL
    return TradeOutcome.NO_TRADE


def make_feedback(pair: BidAskPair, rnd: MarketRound) -> FeedbackRecord:
    v = rnd.taker_valuation
    return FeedbackRecord(
        bought=pair.bid >= v,
        sold=pair.ask < v,
        market_price=rnd.market_price,
    )
