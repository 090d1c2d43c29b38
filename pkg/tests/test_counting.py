import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from shuffleparity.counting import (
    CountingConfig,
    analyze_count,
    analyze_counts,
    center,
    count_protocol,
    default_modulus,
    message_marginal_tv,
    next_prime_above,
    randomize_bit,
    randomize_values,
    simulate_counts,
)
from shuffleparity.noise import dlap_convolution_pmf, dlap_variance, tv_to_pmf
from shuffleparity.shuffle import MessageBag, Messages, PartyStatus


def test_modulus_is_next_prime():
    assert next_prime_above(10) == 11
    assert next_prime_above(11) == 13
    # 8 * 10 + 400 = 480 -> 487
    assert default_modulus(10, 1.0) == 487
    assert CountingConfig(10, 1.0).q == 487


def test_config_validation():
    with pytest.raises(ValueError):
        CountingConfig(0, 1.0)
    with pytest.raises(ValueError):
        CountingConfig(5, 0.0)
    with pytest.raises(ValueError):
        CountingConfig(5, 1.0, q=6)


def test_single_split_message_is_noisy_bit():
    cfg = CountingConfig(1, 1.0, noise=False, q=101)
    assert randomize_bit(1, cfg, np.random.default_rng(0)) == [(0, 1)]
    with pytest.raises(ValueError):
        randomize_bit(2, cfg, np.random.default_rng(0))


def test_shares_sum_to_value():
    rng = np.random.default_rng(1)
    cfg = CountingConfig(5, 1.0, splits=4, q=97, noise=False)
    vals = randomize_values(np.array([0, 1, 1, 0, 1]), cfg, rng)
    np.testing.assert_array_equal(vals.sum(axis=-1) % 97, [0, 1, 1, 0, 1])


def test_split_shares_uniform_mod_q():
    rng = np.random.default_rng(2)
    q, N = 97, 300_000
    cfg = CountingConfig(3, 1.0, splits=3, q=q)
    vals = randomize_values(np.ones(N, dtype=np.int64), cfg, rng)
    p = 1 / q
    sigma = math.sqrt(p * (1 - p) / N)
    for j in range(3):
        freq = np.bincount(vals[:, j], minlength=q) / N
        # a handful of 3-sigma exceedances are expected among q cells
        assert np.mean(np.abs(freq - p) <= 3 * sigma) >= 0.99
        assert stats.chisquare(freq * N).pvalue > 1e-3


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=40), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_noise_free_protocol_is_exact(bits, splits, seed):
    cfg = CountingConfig(len(bits), 1.0, splits=splits, noise=False)
    out, tr = count_protocol(bits, cfg, np.random.default_rng(seed))
    assert out == sum(bits)
    assert len(tr.final) == len(bits) * splits


def test_protocol_matches_bulk_simulation_in_law():
    rng = np.random.default_rng(3)
    bits = np.array([1, 0, 1, 1, 0, 0, 1, 0, 0, 1])
    cfg = CountingConfig(10, 1.0, c=3, splits=2)
    slow = np.array([count_protocol(bits, cfg, rng)[0] for _ in range(3000)])
    fast = simulate_counts(bits, cfg, 3000, rng)
    assert abs(slow.mean() - fast.mean()) < 4 * math.sqrt(2 * 3 * dlap_variance(1.0) / 3000)


@pytest.mark.parametrize("n,c,eps", [(1, 1, 1.0), (10, 3, 1.0), (50, 3, 0.5)])
def test_error_law_is_sum_of_dlaps(n, c, eps):
    rng = np.random.default_rng(4)
    bits = rng.integers(0, 2, size=n)
    cfg = CountingConfig(n, eps, c=c, splits=2)
    err = simulate_counts(bits, cfg, 1_000_000, rng) - bits.sum()
    support, pmf = dlap_convolution_pmf(eps, c)
    assert tv_to_pmf(err, support, pmf) <= 0.01


def test_dropout_keeps_at_least_one_dlap():
    rng = np.random.default_rng(5)
    n, c = 30, 3
    bits = rng.integers(0, 2, size=n)
    cfg = CountingConfig(n, 1.0, c=c)
    honest = PartyStatus.drop_random(n, n - n // c, rng).honest
    err = simulate_counts(bits, cfg, 1_000_000, rng, honest=honest) - bits[honest].sum()
    assert err.var() >= 0.95 * dlap_variance(1.0)
    assert abs(err.var() - dlap_variance(1.0)) <= 0.05 * dlap_variance(1.0)


def test_neighbouring_outputs_ratio_bounded():
    # exact output law for neighbours differing in one bit, c = 1 all honest
    eps = 1.0
    support, pmf = dlap_convolution_pmf(eps, 1)
    P0 = pmf[1:]
    P1 = pmf[:-1]  # shifted by one
    ratio = np.maximum(P0 / P1, P1 / P0)
    assert ratio.max() <= math.exp(eps) * (1 + 1e-9)


def test_empty_bag_decodes_to_zero_and_is_flagged():
    cfg = CountingConfig(4, 1.0)
    out, tr = count_protocol([1, 1, 0, 1], cfg, np.random.default_rng(0), PartyStatus(np.zeros(4, bool)))
    assert out == 0 and "empty_bag" in tr.flags


def test_center_and_multi_counter_decode():
    assert center(96, 97) == -1
    assert center(48, 97) == 48
    assert center(49, 97) == -48
    bag = MessageBag(Messages(np.array([0, 1, 1, 2]), np.array([5, 96, 3, 0])))
    cfg = CountingConfig(3, 1.0, q=97)
    np.testing.assert_array_equal(analyze_counts(bag, cfg, 3), [5, 2, 0])
    with pytest.raises(ValueError):
        analyze_count(bag, cfg)
    with pytest.raises(ValueError):
        analyze_counts(bag, cfg, 2)


def test_single_message_marginal_near_uniform_with_splits():
    cfg = CountingConfig(10, 1.0, splits=3)
    tv, floor = message_marginal_tv(cfg, 200_000, np.random.default_rng(6))
    assert tv <= 2 * floor
