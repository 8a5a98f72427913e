"""Pay-per-click second-price auctions driven by true, UCB, or frozen explore-then-commit CTR scores.

Everything here runs one history at a time and can record a full per-round
trace. :mod:`ppc_auctions.batch` runs the UCB auction for many seeds at once.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .bidders import bid_matrix, bids_at, truthful
from .env import AuctionEnv, ClickStream, sample_click, value_at
from .stats import BonusVariant, EstimatorState, smax, top_two


class Accounting(str, enum.Enum):
    EXPECTED = "expected"  # revenue = CTR x price, clicks still drive learning
    REALIZED = "realized"  # revenue = click x price


@dataclass(frozen=True)
class MechanismConfig:
    bonus_variant: BonusVariant = BonusVariant.ANALYSIS
    accounting: Accounting = Accounting.EXPECTED
    include_warmstart_in_regret: bool = False
    include_exploration_in_regret: bool = True
    # explore-then-commit only: commit after this many round-robin cycles instead of
    # waiting for a clear winner
    exploration_budget: int | None = None
    trace: bool = False
    cap_bids_at_value: bool = False

    def __post_init__(self):
        object.__setattr__(self, "bonus_variant", BonusVariant(self.bonus_variant))
        object.__setattr__(self, "accounting", Accounting(self.accounting))
        if self.exploration_budget is not None and self.exploration_budget < 1:
            raise ValueError("exploration_budget must be a positive number of cycles")


@dataclass(frozen=True)
class RoundOutcome:
    t: int  # 0 for warm-start impressions
    winner: int
    runner_up: int | None  # None when the ad was shown for free
    click: int | None
    price_per_click: float
    expected_payment: float
    opt_round: float
    regret_round: float
    phase: str = "auction"  # "warmstart", "explore", "auction" or "commit"


@dataclass
class RunRecord:
    mechanism: str
    horizon: int
    seed: int
    config: MechanismConfig
    total_revenue: float = 0.0
    total_opt: float = 0.0
    total_regret: float = 0.0
    state: EstimatorState | None = None
    exploration_rounds: int | None = None
    clear_winner: int | None = None
    committed: bool | None = None
    # warm-start impressions charged against OPT, and leading rounds left out of it
    warmstart_counted: int = 0
    uncounted_rounds: int = 0
    # expected utility rho_i * (v_i,t - price) summed over each ad's impressions
    utilities: np.ndarray | None = field(default=None, repr=False)
    outcomes: list[RoundOutcome] | None = field(default=None, repr=False)
    snapshots: list[EstimatorState] | None = field(default=None, repr=False)


def opt_rounds(env: AuctionEnv) -> np.ndarray:
    """Second-highest true eCPM for each round 1..T."""
    if env.horizon == 0:
        return np.zeros(0)
    ecpm = env.values_matrix() * np.asarray(env.ctrs)
    return np.sort(ecpm, axis=1)[:, -2]


def _second_price(est, bids) -> tuple[int, int, float]:
    est = np.asarray(est, dtype=float)
    scores = est * np.asarray(bids, dtype=float)
    a, b = top_two(scores)
    return a, b, float(scores[b] / est[a])


def _payment(ctr: float, price: float, click: int | None, accounting: Accounting) -> float:
    if accounting is Accounting.EXPECTED:
        return ctr * price
    if click is None:
        raise ValueError("realized accounting needs the click outcome")
    return click * price


def oracle_spa_round(
    ctrs,
    bids,
    values=None,
    click: int | None = None,
    accounting: Accounting = Accounting.EXPECTED,
    t: int = 1,
) -> RoundOutcome:
    """Second-price pay-per-click auction that knows the true CTRs.

    ``values`` default to the bids (truthful bidding) and only feed the
    per-round OPT used for regret.
    """
    if len(ctrs) < 2 or len(bids) != len(ctrs):
        raise ValueError("need at least two ads and one bid per ad")
    a, b, price = _second_price(ctrs, bids)
    pay = _payment(ctrs[a], price, click, Accounting(accounting))
    vals = bids if values is None else values
    opt = smax([r * v for r, v in zip(ctrs, vals)])
    return RoundOutcome(t, a, b, click, price, pay, opt, opt - pay)


def ucb_round(
    state: EstimatorState,
    bids,
    env: AuctionEnv,
    stream: ClickStream,
    config: MechanismConfig = MechanismConfig(),
    t: int = 1,
) -> tuple[RoundOutcome, EstimatorState]:
    """One auction ranked by UCB score; only the winner's estimate is updated."""
    if not state.warmed:
        raise RuntimeError("UCB auction needs a warm start (every ad shown once)")
    ucb = state.ucb()
    a, b, price = _second_price(ucb, bids)
    click = sample_click(env, a, stream)
    pay = _payment(env.ctrs[a], price, click, config.accounting)
    opt = smax([r * v for r, v in zip(env.ctrs, value_at(env, t))])
    return RoundOutcome(t, a, b, click, price, pay, opt, opt - pay), state.update(a, click)


def _policies(env: AuctionEnv, policies):
    return truthful(env.n) if policies is None else list(policies)


def ucb_auction_run(env: AuctionEnv, config: MechanismConfig = MechanismConfig(), seed: int = 0, policies=None) -> RunRecord:
    """Warm start (each ad shown once for free), then T UCB-ranked auctions."""
    policies = _policies(env, policies)
    stream = ClickStream(env.master_seed, seed, env.n)
    state = EstimatorState.empty(env.n, env.horizon, config.bonus_variant)
    rec = RunRecord("ucb", env.horizon, seed, config)
    outcomes = [] if config.trace else None
    snapshots = [] if config.trace else None

    util = [0.0] * env.n
    v1 = value_at(env, 1) if env.horizon else (0.0,) * env.n
    opt1 = smax([r * v for r, v in zip(env.ctrs, v1)]) if env.horizon else 0.0
    for i in range(env.n):
        click = sample_click(env, i, stream)
        state = state.update(i, click)
        util[i] += env.ctrs[i] * v1[i]
        if config.include_warmstart_in_regret:
            rec.total_opt += opt1
        if outcomes is not None:
            opt = opt1 if config.include_warmstart_in_regret else 0.0
            outcomes.append(RoundOutcome(0, i, None, click, 0.0, 0.0, opt, opt, "warmstart"))
    if config.include_warmstart_in_regret:
        rec.warmstart_counted = env.n

    for t in range(1, env.horizon + 1):
        vals = value_at(env, t)
        bids = bids_at(policies, vals, t, config.cap_bids_at_value)
        if snapshots is not None:
            snapshots.append(state)
        out, state = ucb_round(state, bids, env, stream, config, t)
        a = out.winner
        util[a] += env.ctrs[a] * (vals[a] - out.price_per_click)
        rec.total_revenue += out.expected_payment
        rec.total_opt += out.opt_round
        if outcomes is not None:
            outcomes.append(out)

    rec.total_regret = rec.total_opt - rec.total_revenue
    rec.state = state
    rec.outcomes = outcomes
    rec.snapshots = snapshots
    rec.utilities = np.array(util)
    return rec


def clear_winner(state: EstimatorState, values) -> int | None:
    """Ad whose LCB-scored eCPM beats every rival's UCB-scored eCPM, if any."""
    v = np.asarray(values, dtype=float)
    low = state.lcb() * v
    high = state.ucb() * v
    i = int(np.argmax(low))
    rivals = np.delete(high, i)
    return i if np.all(low[i] > rivals) else None


def frozen_scores(state: EstimatorState, winner: int) -> np.ndarray:
    """LCB for the committed winner, UCB for everybody else."""
    c = state.ucb()
    c[winner] = state.lcb()[winner]
    return c


def etc_frozen_round(
    C,
    bids,
    env: AuctionEnv,
    stream: ClickStream | None = None,
    config: MechanismConfig = MechanismConfig(),
    t: int = 1,
) -> RoundOutcome:
    """Second-price round on frozen scores; nothing is learned from the click."""
    a, b, price = _second_price(C, bids)
    click = sample_click(env, a, stream) if stream is not None else None
    pay = _payment(env.ctrs[a], price, click, config.accounting)
    opt = smax([r * v for r, v in zip(env.ctrs, value_at(env, t))])
    return RoundOutcome(t, a, b, click, price, pay, opt, opt - pay, "commit")


def frozen_auctions(C, bids: np.ndarray, ctrs) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized :func:`etc_frozen_round` over a (rounds, n) bid block: winners, runner-ups, prices."""
    C = np.asarray(C, dtype=float)
    scores = bids * C
    rows = np.arange(len(scores))
    a = np.argmax(scores, axis=1)
    masked = scores.copy()
    masked[rows, a] = -np.inf
    b = np.argmax(masked, axis=1)
    return a, b, scores[rows, b] / C[a]


def etc_run(env: AuctionEnv, config: MechanismConfig = MechanismConfig(), seed: int = 0, policies=None) -> RunRecord:
    """Explore-then-commit auction.

    Round-robin free impressions until some ad is a clear winner under the
    true values (or, with ``exploration_budget``, after a fixed number of
    cycles); then second-price auctions on the frozen scores for the rest of
    the horizon. Bids are ignored while exploring.
    """
    if not env.is_fixed:
        raise TypeError("explore-then-commit needs fixed valuations")
    policies = _policies(env, policies)
    n, T = env.n, env.horizon
    v = env.schedule.values
    ctrs = np.asarray(env.ctrs)
    opt = smax([r * x for r, x in zip(env.ctrs, v)])
    stream = ClickStream(env.master_seed, seed, n)
    state = EstimatorState.empty(n, T, config.bonus_variant)
    rec = RunRecord("etc", T, seed, config, committed=False)
    outcomes = [] if config.trace else None
    count_explore = config.include_exploration_in_regret

    util = [0.0] * n
    t = 0
    cycles = 0
    winner = None
    vals = np.asarray(v, dtype=float)
    while t < T and winner is None:
        if T - t < n:
            # horizon runs out mid-cycle: show the remaining ads in order and stop
            for i in range(T - t):
                t += 1
                click = sample_click(env, i, stream)
                state = state.update(i, click)
                util[i] += env.ctrs[i] * v[i]
                if outcomes is not None:
                    o = opt if count_explore else 0.0
                    outcomes.append(RoundOutcome(t, i, None, click, 0.0, 0.0, o, o, "explore"))
            break
        # one full cycle; every ad goes from k-1 to k impressions, so the running
        # average is the same element-wise update as one-at-a-time
        clicks = np.array([stream.click(i, env.ctrs[i]) for i in range(n)])
        k = cycles + 1
        pulls = np.full(n, k, dtype=np.int64)
        means = (1.0 - 1.0 / k) * state.means + (1.0 / k) * clicks
        state = EstimatorState(pulls, means, T, config.bonus_variant)
        for i in range(n):
            t += 1
            util[i] += env.ctrs[i] * v[i]
            if outcomes is not None:
                o = opt if count_explore else 0.0
                outcomes.append(RoundOutcome(t, i, None, int(clicks[i]), 0.0, 0.0, o, o, "explore"))
        cycles = k
        if config.exploration_budget is None:
            winner = clear_winner(state, vals)
        elif cycles >= config.exploration_budget:
            winner = int(np.argmax(state.lcb() * vals))
    if count_explore:
        for _ in range(t):
            rec.total_opt += opt

    rec.exploration_rounds = t
    rec.state = state
    if not count_explore:
        rec.uncounted_rounds = t
    if winner is not None:
        rec.committed = True
        rec.clear_winner = winner
        C = frozen_scores(state, winner)
        rest = T - t
        if rest:
            vals = env.values_matrix()[t:]
            bids = bid_matrix(policies, vals, t + 1, config.cap_bids_at_value)
            a, b, price = frozen_auctions(C, bids, ctrs)
            clicks = _clicks_for(stream, a, ctrs, n)
            if config.accounting is Accounting.EXPECTED:
                pay = ctrs[a] * price
            else:
                pay = clicks * price
            for x in pay:
                rec.total_revenue += float(x)
            rec.total_opt += opt * rest
            _add_utilities(util, a, price, vals, ctrs)
            if outcomes is not None:
                for k in range(rest):
                    p = float(pay[k])
                    outcomes.append(
                        RoundOutcome(t + 1 + k, int(a[k]), int(b[k]), int(clicks[k]), float(price[k]), p, opt, opt - p, "commit")
                    )
    rec.total_regret = rec.total_opt - rec.total_revenue
    rec.outcomes = outcomes
    rec.utilities = np.array(util)
    return rec


def _add_utilities(util: list[float], winners, prices, vals, ctrs) -> None:
    for i in range(len(util)):
        idx = np.nonzero(winners == i)[0]
        util[i] += math.fsum(ctrs[i] * (vals[idx, i] - prices[idx]))


def _clicks_for(stream: ClickStream, winners: np.ndarray, ctrs: np.ndarray, n: int) -> np.ndarray:
    """Clicks for a block of impressions, each ad consuming its own stream in order."""
    clicks = np.zeros(len(winners), dtype=np.int64)
    for i in range(n):
        idx = np.nonzero(winners == i)[0]
        if len(idx):
            clicks[idx] = stream.uniforms(i, len(idx)) < ctrs[i]
    return clicks


def oracle_run(env: AuctionEnv, config: MechanismConfig = MechanismConfig(), seed: int = 0, policies=None) -> RunRecord:
    """The benchmark: second-price auctions on the true CTRs, no learning."""
    policies = _policies(env, policies)
    ctrs = np.asarray(env.ctrs)
    rec = RunRecord("oracle", env.horizon, seed, config)
    outcomes = [] if config.trace else None
    if env.horizon:
        vals = env.values_matrix()
        bids = bid_matrix(policies, vals, 1, config.cap_bids_at_value)
        a, b, price = frozen_auctions(ctrs, bids, ctrs)
        stream = ClickStream(env.master_seed, seed, env.n)
        clicks = _clicks_for(stream, a, ctrs, env.n)
        pay = ctrs[a] * price if config.accounting is Accounting.EXPECTED else clicks * price
        opts = opt_rounds(env)
        util = [0.0] * env.n
        _add_utilities(util, a, price, vals, ctrs)
        rec.utilities = np.array(util)
        # compensated sums: the benchmark should cancel against OPT to rounding
        rec.total_revenue = math.fsum(pay)
        rec.total_opt = math.fsum(opts)
        if outcomes is not None:
            for k in range(env.horizon):
                p, o = float(pay[k]), float(opts[k])
                outcomes.append(RoundOutcome(k + 1, int(a[k]), int(b[k]), int(clicks[k]), float(price[k]), p, o, o - p))
    rec.total_regret = rec.total_opt - rec.total_revenue
    rec.outcomes = outcomes
    return rec


MECHANISMS = {"oracle": oracle_run, "ucb": ucb_auction_run, "etc": etc_run}


def run_mechanism(name: str, env: AuctionEnv, config: MechanismConfig = MechanismConfig(), seed: int = 0, policies=None) -> RunRecord:
    try:
        fn = MECHANISMS[name]
    except KeyError:
        raise ValueError(f"unknown mechanism {name!r}; choose from {sorted(MECHANISMS)}") from None
    return fn(env, config, seed, policies)
