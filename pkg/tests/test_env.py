import numpy as np
import pytest

from ppc_auctions.env import (
    BLOCK,
    AuctionEnv,
    BatchClickStream,
    ClickStream,
    FixedValues,
    adversarial_env,
    fixed_env,
    gap_profile,
    sample_click,
    value_at,
)


def test_fixed_values_every_round():
    env = fixed_env((0.5, 0.4), (1.0, 2.0), 5)
    assert value_at(env, 1) == (1.0, 2.0)
    assert value_at(env, 5) == (1.0, 2.0)
    assert env.values_matrix().shape == (5, 2)


def test_value_at_out_of_range():
    env = fixed_env((0.5, 0.4), (1.0, 2.0), 5)
    for t in (0, 6):
        with pytest.raises(IndexError):
            value_at(env, t)


def test_adversarial_rows():
    table = [[1.0, 2.0], [3.0, 0.5], [0.2, 0.2]]
    env = adversarial_env((0.5, 0.4), table)
    assert env.horizon == 3
    assert value_at(env, 2) == (3.0, 0.5)
    np.testing.assert_array_equal(env.values_matrix(), np.array(table))


@pytest.mark.parametrize(
    "ctrs, values",
    [
        ((0.5,), (1.0,)),  # one ad
        ((0.0, 0.5), (1.0, 1.0)),
        ((1.0, 0.5), (1.0, 1.0)),
        ((0.5, 0.5), (1.0, 0.0)),
        ((0.5, 0.5), (1.0, -1.0)),
        ((0.5, 0.5), (1.0, 1.0, 1.0)),
    ],
)
def test_invalid_envs(ctrs, values):
    with pytest.raises(ValueError):
        fixed_env(ctrs, values, 10)


def test_adversarial_row_count_must_match():
    with pytest.raises(ValueError):
        AuctionEnv((0.5, 0.4), adversarial_env((0.5, 0.4), [[1, 1]] * 3).schedule, 4)


def test_zero_horizon_allowed():
    env = fixed_env((0.5, 0.4), (1.0, 1.0), 0)
    assert env.values_matrix().shape == (0, 2)


def test_gap_profile_a1(a1_env):
    g = gap_profile(a1_env(10))
    assert g.best_index == 0 and g.runner_up_index == 1
    assert g.zeta == pytest.approx(0.5)
    # (0.9 - 0.4) / 0.5 and (0.9 - 0.35) / 0.5
    assert g.deltas[1] == pytest.approx(1.0)
    assert g.deltas[2] == pytest.approx(1.1)


def test_gap_profile_needs_fixed_values():
    with pytest.raises(TypeError):
        gap_profile(adversarial_env((0.5, 0.4), [[1, 1]]))


def test_click_stream_reproducible():
    a = ClickStream(7, 3, 2)
    b = ClickStream(7, 3, 2)
    np.testing.assert_array_equal(a.uniforms(0, 5), b.uniforms(0, 5))
    # a different run gets a different stream
    c = ClickStream(7, 4, 2)
    assert not np.array_equal(ClickStream(7, 3, 2).uniforms(0, 5), c.uniforms(0, 5))


def test_click_stream_per_ad_independent_of_interleaving():
    a = ClickStream(1, 0, 3)
    b = ClickStream(1, 0, 3)
    seq_a = [a.uniforms(0, 1)[0] for _ in range(4)]
    b.uniforms(1, 10)
    b.uniforms(2, 3)
    seq_b = list(b.uniforms(0, 4))
    assert seq_a == seq_b


def test_click_stream_crosses_blocks():
    a = ClickStream(0, 0, 2)
    whole = a.uniforms(1, BLOCK + 5).copy()
    b = ClickStream(0, 0, 2)
    parts = np.concatenate([b.uniforms(1, BLOCK - 1), b.uniforms(1, 6)])
    np.testing.assert_array_equal(whole, parts)


def test_batch_stream_matches_scalar():
    runs = [0, 5, 9]
    batch = BatchClickStream(3, runs, 2)
    scalars = [ClickStream(3, r, 2) for r in runs]
    ref = [s.uniforms(1, 3 * BLOCK) for s in scalars]
    pos = np.zeros(3, dtype=np.int64)
    ads = np.ones(3, dtype=np.int64)
    for k in range(0, 3 * BLOCK, 37):
        pos[:] = k
        got = batch.draw(ads, pos)
        np.testing.assert_array_equal(got, [r[k] for r in ref])


def test_sample_click_bounds():
    env = fixed_env((0.5, 0.4), (1.0, 1.0), 3)
    s = ClickStream(0, 0, 2)
    assert sample_click(env, 0, s) in (0, 1)
    with pytest.raises(IndexError):
        sample_click(env, 2, s)


def test_click_frequency_matches_ctr():
    s = ClickStream(11, 0, 1)
    u = s.uniforms(0, 200_000)
    # binomial sd at p=0.3 is about 0.001
    assert abs(np.mean(u < 0.3) - 0.3) < 0.005


def test_fixed_values_reject_nonpositive():
    with pytest.raises(ValueError):
        FixedValues((1.0, 0.0))


def test_degenerate_ctr_overrides():
    s = ClickStream(0, 0, 2)
    assert all(s.click(0, 1.0) == 1 for _ in range(100))
    assert all(s.click(1, 0.0) == 0 for _ in range(100))


def test_half_ctr_law_of_large_numbers():
    s = ClickStream(5, 1, 1)
    assert abs(np.mean(s.uniforms(0, 100_000) < 0.5) - 0.5) < 0.01


def test_gap_profile_tie_rule():
    g = gap_profile(fixed_env((0.5, 0.5, 0.5), (1.0, 1.0, 2.0), 5))
    assert g.best_index == 2 and g.runner_up_index == 0
    assert g.zeta == pytest.approx(0.5)


def test_gap_profile_symmetric_zero():
    assert gap_profile(fixed_env((0.5, 0.5), (1.0, 1.0), 5)).zeta == 0.0
