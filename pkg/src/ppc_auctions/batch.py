"""Many seeds of the UCB auction advanced in lockstep with numpy.

Each row replays exactly the arithmetic of :func:`mechanisms.ucb_auction_run`
for its seed, so per-seed totals and terminal estimates agree bit for bit
with the scalar path.
"""

from __future__ import annotations

import numpy as np

from .bidders import bid_matrix, truthful
from .env import AuctionEnv, BatchClickStream
from .mechanisms import (
    MECHANISMS,
    Accounting,
    MechanismConfig,
    RunRecord,
    opt_rounds,
)
from .stats import EstimatorState, bonus_from_log, log_term


def ucb_batch(env: AuctionEnv, config: MechanismConfig, seeds, policies=None, monitors=()) -> list[RunRecord]:
    """Run the UCB auction for every seed in ``seeds``.

    ``monitors`` get ``observe(t, ucb, bonus, winner)`` once per round with
    (runs, n) arrays of the pre-auction estimates.
    """
    seeds = [int(s) for s in seeds]
    S, n, T = len(seeds), env.n, env.horizon
    policies = truthful(n) if policies is None else list(policies)
    rows = np.arange(S)
    ctrs = np.asarray(env.ctrs)
    stream = BatchClickStream(env.master_seed, seeds, n)
    N = np.zeros((S, n), dtype=np.int64)
    means = np.zeros((S, n))
    rev = np.zeros(S)
    opt_total = np.zeros(S)

    for i in range(n):
        ad = np.full(S, i)
        click = stream.draw(ad, N[:, i]) < ctrs[i]
        N[:, i] += 1
        k = N[:, i]
        means[:, i] = (1.0 - 1.0 / k) * means[:, i] + (1.0 / k) * click
    if config.include_warmstart_in_regret and T:
        opt1 = float(opt_rounds(env)[0])
        for _ in range(n):
            opt_total += opt1

    if T:
        log_v = log_term(T, n, config.bonus_variant)
        bids_all = bid_matrix(policies, env.values_matrix(), 1, config.cap_bids_at_value)
        opts = opt_rounds(env)
        expected = config.accounting is Accounting.EXPECTED
        for t in range(1, T + 1):
            bonus = bonus_from_log(log_v, N)
            ucb = means + bonus
            scores = ucb * bids_all[t - 1]
            a = np.argmax(scores, axis=1)
            masked = scores.copy()
            masked[rows, a] = -np.inf
            b = np.argmax(masked, axis=1)
            price = scores[rows, b] / ucb[rows, a]
            for m in monitors:
                m.observe(t, ucb, bonus, a)
            pulls = N[rows, a]
            click = stream.draw(a, pulls) < ctrs[a]
            rev += ctrs[a] * price if expected else click * price
            opt_total += opts[t - 1]
            k = pulls + 1
            N[rows, a] = k
            means[rows, a] = (1.0 - 1.0 / k) * means[rows, a] + (1.0 / k) * click

    out = []
    for r, seed in enumerate(seeds):
        rec = RunRecord("ucb", T, seed, config)
        rec.total_revenue = float(rev[r])
        rec.total_opt = float(opt_total[r])
        rec.total_regret = rec.total_opt - rec.total_revenue
        rec.state = EstimatorState(N[r].copy(), means[r].copy(), T, config.bonus_variant)
        rec.warmstart_counted = n if config.include_warmstart_in_regret else 0
        out.append(rec)
    return out


def simulate_many(mechanism: str, env: AuctionEnv, config: MechanismConfig, seeds, policies=None) -> list[RunRecord]:
    """One RunRecord per seed, using the lockstep engine where it applies."""
    if mechanism == "ucb" and not config.trace:
        return ucb_batch(env, config, seeds, policies)
    if mechanism not in MECHANISMS:
        raise ValueError(f"unknown mechanism {mechanism!r}; choose from {sorted(MECHANISMS)}")
    fn = MECHANISMS[mechanism]
    return [fn(env, config, int(s), policies) for s in seeds]
