"""Online market making: the M3 learner, hard instances and regret audits."""
from .core import BidAskPair, FeedbackRecord, MarketRound, TradeOutcome, make_feedback, trade_outcome, utility
from .envs import EnvironmentSpec, HardInstanceParams, expected_utility, hard_instance_params, next_round
from .experiment import RunConfig, run_experiment
from .hindsight import RegretReport, best_fixed_pair, brute_force_best, cumulative_regret, fit_scaling_exponent
from .learners import M3, FirstPriceLearner, FixedPair, PricingLearner, RandomPair

__version__ = "0.1.0"

__all__ = [
    "BidAskPair", "EnvironmentSpec", "FeedbackRecord", "FirstPriceLearner", "FixedPair",
    "HardInstanceParams", "M3", "MarketRound", "PricingLearner", "RandomPair", "RegretReport",
    "RunConfig", "TradeOutcome", "best_fixed_pair", "brute_force_best", "cumulative_regret",
    "expected_utility", "fit_scaling_exponent", "hard_instance_params", "make_feedback",
    "next_round", "run_experiment", "trade_outcome", "utility",
]
