import itertools
import math

import numpy as np
import pytest

from shuffleparity.core import Examples, LabeledExample, ParityConcept, cube, pad_point, uniform_points
from shuffleparity.learner import (
    LearnerConfig,
    ParityAnalyzer,
    consistency_bit,
    consistency_matrix,
    exact_counts,
    hypothesis_masks,
    learn_shuffle,
    num_hypotheses,
    select_hypothesis,
)
from shuffleparity.noise import dlap_variance


def lex_masks(d, k):
    subsets = [s for j in range(k + 1) for s in itertools.combinations(range(d), j)]
    return [sum(1 << i for i in s) for s in sorted(subsets)]


def test_consistency_bit_examples():
    h = ParityConcept.from_indices([0, 2], -1, 4)
    x = np.array([1, -1, -1, 1])
    assert consistency_bit(h, LabeledExample(x, h(x))) == 1
    assert consistency_bit(h.negated(), LabeledExample(x, h(x))) == 0
    pad = LabeledExample(pad_point(4), -1)
    assert consistency_bit(h, pad) == 1
    assert consistency_bit(h.negated(), pad) == 0


def test_hypothesis_count_and_order():
    for d in range(1, 8):
        for k in range(0, d + 1):
            masks = hypothesis_masks(d, k)
            assert len(masks) * 2 == num_hypotheses(d, k) == 2 * sum(math.comb(d, j) for j in range(k + 1))
            assert list(masks) == lex_masks(d, k)
    assert num_hypotheses(8) == 2**9


def test_tag_roundtrip():
    cfg = LearnerConfig(d=5, n=10, eps=1.0, k=3)
    for tag in range(cfg.num_hypotheses):
        assert cfg.tag_of(cfg.hypothesis(tag)) == tag
    assert cfg.hypothesis(0) == ParityConcept(0, 1, 5)
    assert cfg.hypothesis(1) == ParityConcept(0, -1, 5)


def test_consistency_matrix_matches_scalar_definition():
    rng = np.random.default_rng(0)
    X = uniform_points(5, 30, rng)
    X[:3] = 0
    samples = Examples(X, 1 - 2 * rng.integers(0, 2, size=30))
    cfg = LearnerConfig(d=5, n=30, eps=1.0, k=3)
    mat = consistency_matrix(samples, hypothesis_masks(5, 3))
    for tag in range(cfg.num_hypotheses):
        h = cfg.hypothesis(tag)
        expect = [consistency_bit(h, ex) for ex in samples]
        np.testing.assert_array_equal(mat[:, tag], expect)


def test_complement_identity():
    rng = np.random.default_rng(1)
    for d in (3, 6, 16):
        n = 40
        samples = Examples(uniform_points(d, n, rng), 1 - 2 * rng.integers(0, 2, size=n))
        counts = exact_counts(samples, LearnerConfig(d=d, n=n, eps=1.0, k=min(d, 3)))
        np.testing.assert_array_equal(counts[0::2] + counts[1::2], n)


def test_noise_free_recovers_target_on_full_cube():
    d = 5
    X = cube(d)
    for tag in range(0, num_hypotheses(d), 7):
        cfg = LearnerConfig(d=d, n=len(X), eps=1.0, noise=False)
        target = cfg.hypothesis(tag)
        res = learn_shuffle(Examples.labeled_by(target, X), cfg, np.random.default_rng(tag))
        assert res.hypothesis == target
        counts = exact_counts(Examples.labeled_by(target, X), cfg)
        np.testing.assert_array_equal(res.noisy_counts, counts)
        assert counts[cfg.tag_of(target.negated())] == len(X) - counts[tag]


def test_argmax_shift_invariance_and_ties():
    rng = np.random.default_rng(2)
    for _ in range(200):
        v = rng.integers(-5, 5, size=32)
        assert select_hypothesis(v) == select_hypothesis(v + int(rng.integers(-1000, 1000)))
    assert select_hypothesis(np.array([3, 7, 7, 1])) == 1


def test_errors():
    cfg = LearnerConfig(d=3, n=4, eps=1.0)
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        learn_shuffle(Examples(np.empty((0, 3), dtype=np.int8), []), cfg, rng)
    with pytest.raises(ValueError):
        learn_shuffle(Examples(cube(3)[:3], [1, 1, 1]), cfg, rng)
    with pytest.raises(ValueError):
        LearnerConfig(d=3, n=0, eps=1.0)
    with pytest.raises(ValueError):
        LearnerConfig(d=3, n=4, eps=1.0, k=4)


def test_privacy_accounting_reported():
    cfg = LearnerConfig(d=4, n=20, eps=0.5, k=2)
    rng = np.random.default_rng(3)
    X = uniform_points(4, 20, rng)
    res = learn_shuffle(Examples(X, np.ones(20, dtype=np.int64)), cfg, rng)
    assert res.per_counter_eps == 0.5
    assert res.composed_eps == pytest.approx(0.5 * num_hypotheses(4, 2))
    assert len(res.transcript.final) == 20 * num_hypotheses(4, 2)
    assert res.wrap_suspects == 0


def test_analyzer_reads_only_the_bag():
    cfg = LearnerConfig(d=3, n=8, eps=1.0)
    rng = np.random.default_rng(4)
    target = ParityConcept(0b101, -1, 3)
    res = learn_shuffle(Examples.labeled_by(target, cube(3)), cfg, rng)
    again = ParityAnalyzer(cfg)(res.transcript.final)
    np.testing.assert_array_equal(again.noisy_counts, res.noisy_counts)


@pytest.mark.slow
def test_realizable_success_d8():
    d = 8
    n = math.ceil(8 * d * 2 ** (d / 2))
    cfg = LearnerConfig(d=d, n=n, eps=1.0)
    rng = np.random.default_rng(5)
    wins = 0
    for _ in range(100):
        target = cfg.hypothesis(int(rng.integers(cfg.num_hypotheses)))
        res = learn_shuffle(Examples.labeled_by(target, uniform_points(d, n, rng)), cfg, rng)
        wins += res.hypothesis == target
    assert wins / 100 >= 0.9


def test_agnostic_gap_within_noise_scale():
    d, n = 6, 200
    cfg = LearnerConfig(d=d, n=n, eps=1.0)
    bound = 10 * math.sqrt(cfg.c * dlap_variance(1.0))
    rng = np.random.default_rng(6)
    ok = 0
    for _ in range(200):
        samples = Examples(uniform_points(d, n, rng), 1 - 2 * rng.integers(0, 2, size=n))
        res = learn_shuffle(samples, cfg, rng)
        exact = exact_counts(samples, cfg)
        ok += exact[res.tag] >= exact.max() - bound
    assert ok / 200 >= 0.95
