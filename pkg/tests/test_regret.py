import math

import numpy as np
import pytest

from ppc_auctions.env import ClickStream, adversarial_env, fixed_env
from ppc_auctions.mechanisms import MechanismConfig, RunRecord, oracle_run, ucb_round
from ppc_auctions.regret import (
    compute_regret,
    lb_floor,
    make_lb_pair,
    mean_and_se,
    minimax_regret_probe,
    opt_benchmark,
    upper_envelope,
)
from ppc_auctions.stats import BonusVariant, EstimatorState, ucb_bonus


def test_opt_constant_schedule():
    per, total = opt_benchmark(fixed_env((0.5, 0.4), (1.0, 1.0), 10))
    assert per == [0.4] * 10 and total == pytest.approx(4.0)


def test_opt_intro_example():
    per, _ = opt_benchmark(fixed_env((0.5, 0.5), (1.0, 2.0), 1))
    assert per == [0.5]


def test_opt_adversarial():
    # eCPMs (0.3, 0.2) then (0.1, 0.9)
    env = adversarial_env((0.5, 0.5), [[0.6, 0.4], [0.2, 1.8]])
    _, total = opt_benchmark(env)
    assert total == pytest.approx(0.3)


def test_regret_oracle_zero():
    env = fixed_env((0.9, 0.8, 0.7), (1.0, 0.5, 0.5), 300)
    assert abs(compute_regret(oracle_run(env), env)) <= 1e-12


def test_regret_intro_one_round():
    env = fixed_env((0.5, 0.5), (1.0, 2.0), 1)
    b = ucb_bonus(3, 1, 2)
    state = EstimatorState(np.array([3, 3]), np.array([0.5 - b, 0.8 - b]), 1, BonusVariant.ANALYSIS)
    out, _ = ucb_round(state, (1.0, 2.0), env, ClickStream(0, 0, 2))
    rec = RunRecord("ucb", 1, 0, MechanismConfig(), total_revenue=out.expected_payment)
    assert compute_regret(rec, env) == pytest.approx(0.1875, rel=1e-12)


def test_regret_zero_revenue():
    env = fixed_env((0.5, 0.4), (1.0, 1.0), 10)
    assert compute_regret(RunRecord("x", 10, 0, MechanismConfig()), env) == pytest.approx(4.0)


def test_regret_horizon_mismatch():
    env = fixed_env((0.5, 0.4), (1.0, 1.0), 10)
    with pytest.raises(ValueError):
        compute_regret(RunRecord("x", 9, 0, MechanismConfig()), env)


def test_regret_matches_run_totals():
    env = fixed_env((0.9, 0.8, 0.7), (1.0, 0.5, 0.5), 800)
    from ppc_auctions.mechanisms import etc_run, ucb_auction_run

    for cfg in (MechanismConfig(), MechanismConfig(include_warmstart_in_regret=True)):
        r = ucb_auction_run(env, cfg, 2)
        assert compute_regret(r, env) == pytest.approx(r.total_regret, abs=1e-9)
    for cfg in (MechanismConfig(), MechanismConfig(include_exploration_in_regret=False)):
        r = etc_run(env, cfg, 2)
        assert compute_regret(r, env) == pytest.approx(r.total_regret, abs=1e-9)


def test_lb_pair_construction():
    pair = make_lb_pair(64)
    assert pair.epsilon == 1 / 64
    assert pair.env_1.ctrs[0] == 0.5078125
    e1 = sorted(r * v for r, v in zip(pair.env_1.ctrs, pair.env_1.schedule.values))
    e2 = sorted(r * v for r, v in zip(pair.env_2.ctrs, pair.env_2.schedule.values))
    assert e1 == e2
    assert pair.env_1.ctrs != pair.env_2.ctrs


def test_lb_pair_smallest_horizon():
    pair = make_lb_pair(1)
    assert pair.epsilon == 0.125 and max(pair.env_1.ctrs) < 1
    with pytest.raises(ValueError):
        make_lb_pair(0)


def test_lb_floor():
    assert lb_floor(4096) == 1.0


def test_mean_and_se():
    m, s = mean_and_se([1.0, 2.0, 3.0, 4.0])
    assert m == 2.5
    assert s == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert math.isnan(mean_and_se([1.0])[1])
    with pytest.raises(ValueError):
        mean_and_se([])


def test_probe_oracle_zero():
    res = minimax_regret_probe("oracle", make_lb_pair(256), 5)
    assert abs(res.mean_1) <= 1e-9 and abs(res.mean_2) <= 1e-9


def test_probe_needs_seeds():
    with pytest.raises(ValueError):
        minimax_regret_probe("ucb", make_lb_pair(16), 0)


def test_upper_envelope_formula():
    env = fixed_env((0.9, 0.8, 0.7), (1.0, 0.5, 0.5), 1000)
    root = math.sqrt(24 * 1000 * math.log(6000))
    want = 0.4 * root * (1 / 0.9 + 1 / 0.8 + 1 / 0.7) + 0.4 / 1000
    assert upper_envelope(env) == pytest.approx(want, rel=1e-12)
