import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppc_auctions.bidders import (
    FixedDeviation,
    ScaledBid,
    Truthful,
    ZeroThenTruthful,
    bid_matrix,
    bids_at,
    deviate,
    truthful,
)


def test_truthful_identity():
    assert bids_at(truthful(2), (1.0, 2.0), 1) == (1.0, 2.0)


def test_scaled():
    assert bids_at(deviate(2, 0, ScaledBid(0.5)), (1.0, 2.0), 1) == (0.5, 2.0)


def test_scaled_window():
    pol = deviate(2, 1, ScaledBid(2.0, start=3, stop=4))
    assert bids_at(pol, (1.0, 2.0), 2) == (1.0, 2.0)
    assert bids_at(pol, (1.0, 2.0), 3) == (1.0, 4.0)
    assert bids_at(pol, (1.0, 2.0), 5) == (1.0, 2.0)


def test_fixed_deviation():
    pol = deviate(2, 1, FixedDeviation(3, 5, 0.0))
    assert bids_at(pol, (1.0, 2.0), 4) == (1.0, 0.0)
    assert bids_at(pol, (1.0, 2.0), 6) == (1.0, 2.0)


def test_zero_then_truthful():
    pol = ZeroThenTruthful(3)
    assert pol.bid(1.5, 2) == 0.0
    assert pol.bid(1.5, 3) == 1.5


def test_cap_at_value():
    pol = deviate(2, 0, ScaledBid(3.0))
    assert bids_at(pol, (1.0, 2.0), 1, cap_at_value=True) == (1.0, 2.0)


@pytest.mark.parametrize(
    "make",
    [
        lambda: ScaledBid(-1.0),
        lambda: FixedDeviation(5, 3, 1.0),
        lambda: FixedDeviation(0, 3, 1.0),
        lambda: FixedDeviation(1, 3, -0.1),
        lambda: ZeroThenTruthful(0),
    ],
)
def test_invalid_policies(make):
    with pytest.raises(ValueError):
        make()


def test_deviate_bounds():
    with pytest.raises(IndexError):
        deviate(2, 2, Truthful())


POLICIES = st.one_of(
    st.just(Truthful()),
    st.builds(ScaledBid, st.floats(0.01, 3.0), st.none() | st.integers(1, 20), st.none()),
    st.builds(lambda a, w, b: FixedDeviation(a, a + w, b), st.integers(1, 20), st.integers(0, 10), st.floats(0, 5)),
    st.builds(ZeroThenTruthful, st.integers(1, 30)),
)


@settings(max_examples=150, deadline=None)
@given(st.lists(POLICIES, min_size=2, max_size=4), st.integers(1, 5), st.booleans(), st.data())
def test_bid_matrix_matches_scalar(policies, first, cap, data):
    n = len(policies)
    vals = np.array(data.draw(st.lists(st.lists(st.floats(0.01, 5), min_size=n, max_size=n), min_size=1, max_size=25)))
    m = bid_matrix(policies, vals, first, cap)
    for k, row in enumerate(vals):
        assert tuple(m[k]) == bids_at(policies, tuple(row), first + k, cap)
