import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shuffleparity.core import (
    Examples,
    HardDistribution,
    HardFamily,
    ParityConcept,
    Uniform,
    cube,
    eval_parity,
    eval_parity_many,
    generalization_error,
    hard_pmf,
    indices_from_mask,
    mask_from_indices,
    pad_point,
    parity_table,
    sample_family_member,
    sample_hard,
)


def naive_parity(indices, b, x):
    out = b
    for i in indices:
        out *= x[i]
    return out


def test_eval_parity_worked_example():
    # coordinates {1, 3} in 1-based indexing
    c = ParityConcept.from_indices([0, 2], 1, 4)
    assert eval_parity(c, [1, -1, -1, 1]) == -1


def test_empty_subset_is_constant():
    c = ParityConcept(0, 1, 5)
    for x in cube(5):
        assert eval_parity(c, x) == 1


def test_pad_point_evaluates_to_sign():
    c = ParityConcept.from_indices([0, 1], -1, 4)
    assert eval_parity(c, pad_point(4)) == -1


def test_dimension_mismatch_raises():
    c = ParityConcept(0b11, 1, 3)
    with pytest.raises(ValueError):
        eval_parity(c, [1, 1])


def test_invalid_concepts_rejected():
    with pytest.raises(ValueError):
        ParityConcept(0b1000, 1, 3)
    with pytest.raises(ValueError):
        ParityConcept(1, 0, 3)
    with pytest.raises(ValueError):
        ParityConcept(1, 1, 25)


@settings(max_examples=300, deadline=None)
@given(
    d=st.integers(1, 12),
    data=st.data(),
)
def test_eval_matches_naive_loop(d, data):
    r = data.draw(st.integers(0, (1 << d) - 1))
    b = data.draw(st.sampled_from([-1, 1]))
    x = data.draw(st.lists(st.sampled_from([-1, 1]), min_size=d, max_size=d))
    c = ParityConcept(r, b, d)
    assert eval_parity(c, x) == naive_parity(indices_from_mask(r), b, x)


def test_parity_table_columns_match_eval():
    rng = np.random.default_rng(3)
    X = np.where(rng.random((50, 6)) < 0.5, -1, 1)
    X[:5] = 0
    table = parity_table(X)
    for mask in range(64):
        np.testing.assert_array_equal(table[:, mask], eval_parity_many(ParityConcept(mask, 1, 6), X))


def test_mask_roundtrip():
    for idx in [(), (0,), (1, 4, 7), (23,)]:
        assert indices_from_mask(mask_from_indices(idx)) == idx


def test_generalization_error_examples():
    c = ParityConcept.from_indices([0, 3], 1, 5)
    assert generalization_error(c, c) == 0
    assert generalization_error(c, c.negated()) == 1
    c1 = ParityConcept.from_indices([0], 1, 4)
    c2 = ParityConcept.from_indices([1], 1, 4)
    assert generalization_error(c1, c2) == pytest.approx(0.5, abs=1e-15)


def test_generalization_error_exact_limit():
    c = ParityConcept(1, 1, 21)
    with pytest.raises(ValueError):
        generalization_error(c, c)
    assert generalization_error(c, c.negated(), mode="mc", trials=1000, rng=np.random.default_rng(0)) == 1.0


def test_generalization_error_enumeration_property():
    for d in range(1, 11):
        rng = np.random.default_rng(d)
        for _ in range(10):
            r1, r2 = (int(v) for v in rng.integers(0, 1 << d, size=2))
            b1, b2 = (int(v) for v in rng.choice([-1, 1], size=2))
            err = generalization_error(ParityConcept(r1, b1, d), ParityConcept(r2, b2, d))
            if r1 != r2:
                assert err == pytest.approx(0.5, abs=1e-12)
            else:
                assert err in (0.0, 1.0)


def test_generalization_error_under_hard_distribution():
    P = HardDistribution(3, 0b011, 1, 0.5)
    c = ParityConcept(0b011, 1, 3)
    assert generalization_error(c, ParityConcept(0, 1, 3), P) == pytest.approx(0.0)
    assert generalization_error(c, ParityConcept(0, -1, 3), P) == pytest.approx(1.0)


def test_hard_pmf_examples():
    P = HardDistribution(2, 0b01, 1, 0.5)
    assert hard_pmf(P, [1, -1]) == pytest.approx(0.5)
    assert hard_pmf(P, [-1, 1]) == pytest.approx(0.0)
    U = HardDistribution(3, 0b101, -1, 0.0)
    for x in cube(3):
        assert hard_pmf(U, x) == pytest.approx(2.0 ** -3)


def test_hard_pmf_rejects_pad_and_dimension():
    P = HardDistribution(3, 1, 1, 0.25)
    with pytest.raises(ValueError):
        hard_pmf(P, pad_point(3))
    with pytest.raises(ValueError):
        hard_pmf(P, [1, 1])


def test_hard_distribution_validation():
    with pytest.raises(ValueError):
        HardDistribution(3, 0, 1, 0.1)
    with pytest.raises(ValueError):
        HardDistribution(3, 1, 1, 0.6)


def test_hard_pmf_sums_to_one():
    for d in range(1, 13):
        X = cube(d)
        rng = np.random.default_rng(d)
        for _ in range(4):
            ell = int(rng.integers(1, 1 << d))
            b = int(rng.choice([-1, 1]))
            alpha = float(rng.choice([0.0, 0.1, 0.25, 0.5]))
            total = HardDistribution(d, ell, b, alpha).pmf(X).sum()
            assert total == pytest.approx(1.0, abs=1e-12)


def test_sample_hard_alpha_half_always_on_parity():
    rng = np.random.default_rng(0)
    P = HardDistribution(6, 0b101101, -1, 0.5)
    X = P.sample(20_000, rng)
    assert np.all(np.prod(X[:, [0, 2, 3, 5]], axis=1) == -1)
    x = sample_hard(P, rng)
    assert np.prod(x[[0, 2, 3, 5]]) == -1


def test_sample_hard_alpha_zero_is_uniform():
    rng = np.random.default_rng(1)
    N = 100_000
    X = HardDistribution(4, 0b0110, 1, 0.0).sample(N, rng)
    idx = ((X < 0).astype(int) * (1 << np.arange(4))).sum(axis=1)
    freq = np.bincount(idx, minlength=16) / N
    p = 1 / 16
    sigma = math.sqrt(p * (1 - p) / N)
    assert np.all(np.abs(freq - p) <= 3 * sigma)


def test_sample_hard_tilt_mean():
    rng = np.random.default_rng(2)
    N = 100_000
    alpha, b = 0.25, -1
    X = HardDistribution(5, 0b10011, b, alpha).sample(N, rng)
    z = b * np.prod(X[:, [0, 1, 4]], axis=1)
    # E[z] = 2*alpha, Var[z] = 1 - 4*alpha^2
    sigma = math.sqrt((1 - 4 * alpha**2) / N)
    assert abs(z.mean() - 2 * alpha) <= 3 * sigma


@pytest.mark.parametrize("d", [2, 4, 6])
def test_sample_hard_total_variation(d):
    rng = np.random.default_rng(10 + d)
    N = 1_000_000
    P = HardDistribution(d, (1 << d) - 2, 1, 0.3)
    X = P.sample(N, rng)
    idx = ((X < 0).astype(np.int64) * (1 << np.arange(d))).sum(axis=1)
    emp = np.bincount(idx, minlength=1 << d) / N
    exact = P.pmf(cube(d))
    assert 0.5 * np.abs(emp - exact).sum() <= 0.02


def test_family_size_and_enumeration():
    for d in range(1, 8):
        for k in range(1, d + 1):
            F = HardFamily(d, k, 0.5)
            expected = 2 * sum(math.comb(d, j) for j in range(1, k + 1))
            assert len(F) == expected
            members = list(F.members())
            keys = {(P.ell, P.b) for P in members}
            assert len(keys) == expected
            assert all(1 <= bin(P.ell).count("1") <= k for P in members)
            assert all(F.rank(P) == i for i, P in enumerate(members))


def test_family_brute_force_matches():
    d, k = 5, 3
    brute = {
        (mask_from_indices(s), b)
        for j in range(1, k + 1)
        for s in itertools.combinations(range(d), j)
        for b in (1, -1)
    }
    assert {(P.ell, P.b) for P in HardFamily(d, k, 0.1).members()} == brute


def test_family_sampling_uniform_d2():
    rng = np.random.default_rng(5)
    F = HardFamily(2, 2, 0.5)
    N = 100_000
    ranks = [F.rank(sample_family_member(F, rng)) for _ in range(N)]
    freq = np.bincount(ranks, minlength=6) / N
    sigma = math.sqrt((1 / 6) * (5 / 6) / N)
    assert np.all(np.abs(freq - 1 / 6) <= 3 * sigma)


def test_family_sampling_sizes():
    rng = np.random.default_rng(6)
    F1 = HardFamily(5, 1, 0.5)
    assert all(bin(sample_family_member(F1, rng).ell).count("1") == 1 for _ in range(500))
    F = HardFamily(3, 2, 0.5)
    N = 60_000
    pairs = sum(bin(sample_family_member(F, rng).ell).count("1") == 2 for _ in range(N))
    sigma = math.sqrt(0.25 / N)
    assert abs(pairs / N - 0.5) <= 3 * sigma


def test_uniform_distribution_pmf_and_samples():
    U = Uniform(3)
    np.testing.assert_allclose(U.pmf(cube(3)), 1 / 8)
    X = U.sample(100, np.random.default_rng(0))
    assert X.shape == (100, 3) and np.all(np.abs(X) == 1)


def test_examples_container():
    c = ParityConcept(0b11, -1, 3)
    ex = Examples.labeled_by(c, cube(3))
    assert len(ex) == 8
    item = ex[3]
    assert item.y == eval_parity(c, item.x)
    assert len(ex[2:5]) == 3
    assert len(Examples.from_list(list(ex), 3)) == 8
