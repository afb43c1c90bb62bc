import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import norm

from osdkit.channel import ChannelParams, bpsk, hard_decision, llr, sigma_to_snr_db, snr_db_to_sigma, transmit, trial_rng


@given(st.floats(-10, 20))
def test_snr_roundtrip(snr):
    assert math.isclose(sigma_to_snr_db(snr_db_to_sigma(snr)), snr, abs_tol=1e-12)
    assert math.isclose(ChannelParams.from_snr_db(snr).snr_db, snr, abs_tol=1e-12)


def test_noiseless_limit():
    c = np.array([0, 1, 1, 0])
    y = transmit(c, ChannelParams(1e-12), trial_rng(0, 0))
    assert np.allclose(y, bpsk(c))


def test_moments():
    p = ChannelParams(0.8)
    y = transmit(np.zeros(10**6, np.uint8), p, trial_rng(1, 0))
    assert abs(y.mean() - 1) <= 3 * p.sigma / 1e3
    assert abs(np.var(y - 1) / p.sigma**2 - 1) < 0.01


def test_llr_examples():
    p = ChannelParams(math.sqrt(0.5))
    assert math.isclose(llr(np.array([1.0]), p)[0], 4.0)
    assert llr(np.zeros(3), p).tolist() == [0, 0, 0]


def test_llr_distribution():
    p = ChannelParams.from_snr_db(2.0)
    L = llr(transmit(np.zeros(10**6, np.uint8), p, trial_rng(2, 0)), p)
    mu = p.llr_mean
    assert abs(L.mean() / mu - 1) < 0.01
    assert abs(L.var() / (2 * mu) - 1) < 0.01


def test_hard_decision_and_ber():
    p = ChannelParams.from_snr_db(1.0)
    y = transmit(np.zeros(10**7, np.uint8), p, trial_rng(3, 0))
    assert np.array_equal(hard_decision(y), hard_decision(llr(y, p)))
    ber = hard_decision(y).mean()
    assert abs(ber / norm.sf(1 / p.sigma) - 1) < 0.02


def test_streams_are_keyed():
    a = trial_rng(5, 1).standard_normal(4)
    assert np.array_equal(a, trial_rng(5, 1).standard_normal(4))
    assert not np.array_equal(a, trial_rng(5, 2).standard_normal(4))
