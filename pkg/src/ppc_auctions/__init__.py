"""Online pay-per-click auctions with learned click-through rates."""

from .bidders import FixedDeviation, ScaledBid, Truthful, ZeroThenTruthful, bids_at
from .env import AuctionEnv, ClickStream, adversarial_env, fixed_env, gap_profile, sample_click, value_at
from .mechanisms import (
    Accounting,
    MechanismConfig,
    RoundOutcome,
    RunRecord,
    etc_frozen_round,
    etc_run,
    oracle_run,
    oracle_spa_round,
    ucb_auction_run,
    ucb_round,
)
from .regret import compute_regret, make_lb_pair, minimax_regret_probe, opt_benchmark
from .stats import BonusVariant, EstimatorState, argsmax, hoeffding_bound, smax, ucb_bonus

__version__ = "0.1.0"
