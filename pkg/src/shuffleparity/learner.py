"""Shuffle-model parity learner: one private counter per hypothesis, then argmax.

Hypotheses are the pairs ``(ell, b)`` with ``|ell| <= k``. Counter tags are
assigned in tie-break order: subsets in lexicographic order of their sorted
index tuples, and within a subset ``b=+1`` before ``b=-1``. Tag ``2*j`` is
``(ell_j, +1)`` and tag ``2*j + 1`` is ``(ell_j, -1)``, so the first maximal
noisy count is the lexicographically smallest maximizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np

from .core import (
    Examples,
    LabeledExample,
    ParityConcept,
    _subset_product,
    eval_parity,
    parity_table,
)
from .counting import CountingConfig, analyze_counts, randomize_values
from .shuffle import ExecutionTranscript, MessageBag, Messages, PartyStatus, run_round

# Above this dimension parities are computed per hypothesis instead of via the full table.
_TABLE_MAX_DIM = 14


@lru_cache(maxsize=64)
def _hypothesis_masks(d: int, k: int) -> tuple[int, ...]:
    out = []

    def walk(start, mask, size):
        out.append(mask)
        if size == k:
            return
        for i in range(start, d):
            walk(i + 1, mask | (1 << i), size + 1)

    walk(0, 0, 0)
    return tuple(out)


def hypothesis_masks(d: int, k: Optional[int] = None) -> np.ndarray:
    """Subsets of size ``<= k`` in lexicographic order of their sorted index tuples."""
    k = d if k is None else k
    if not 0 <= k <= d:
        raise ValueError(f"k must lie in [0, d], got k={k}, d={d}")
    return np.array(_hypothesis_masks(d, k), dtype=np.int64)


def num_hypotheses(d: int, k: Optional[int] = None) -> int:
    k = d if k is None else k
    return 2 * sum(math.comb(d, j) for j in range(k + 1))


@dataclass(frozen=True)
class LearnerConfig:
    d: int
    n: int
    eps: float
    k: Optional[int] = None
    c: int = 3
    splits: int = 1
    q: Optional[int] = None
    noise: bool = True

    def __post_init__(self):
        if self.k is None:
            object.__setattr__(self, "k", self.d)
        if not 0 <= self.k <= self.d:
            raise ValueError(f"k must lie in [0, d], got k={self.k}, d={self.d}")
        if self.n < 1:
            raise ValueError("the learner needs at least one sample")

    @property
    def counting(self) -> CountingConfig:
        return CountingConfig(self.n, self.eps, self.c, self.splits, self.q, self.noise)

    @property
    def num_hypotheses(self) -> int:
        return num_hypotheses(self.d, self.k)

    def hypothesis(self, tag: int) -> ParityConcept:
        masks = hypothesis_masks(self.d, self.k)
        return ParityConcept(int(masks[tag // 2]), 1 - 2 * (tag % 2), self.d)

    def tag_of(self, h: ParityConcept) -> int:
        masks = hypothesis_masks(self.d, self.k)
        j = int(np.flatnonzero(masks == h.r)[0])
        return 2 * j + (0 if h.b == 1 else 1)


def consistency_bit(h: ParityConcept, ex: LabeledExample) -> int:
    return int(eval_parity(h, ex.x) == ex.y)


def consistency_matrix(samples: Examples, masks: np.ndarray) -> np.ndarray:
    """``(n, 2*len(masks))`` bits in tag order: column ``2j`` for ``b=+1``, ``2j+1`` for ``b=-1``."""
    X, y = samples.X, samples.y
    if X.shape[1] <= _TABLE_MAX_DIM:
        par = parity_table(X)[:, masks]
    else:
        par = np.stack([_subset_product(X, int(m)) for m in masks], axis=1)
    plus = (par == y[:, None]).astype(np.int8)
    out = np.empty((len(y), 2 * len(masks)), dtype=np.int8)
    out[:, 0::2] = plus
    out[:, 1::2] = 1 - plus
    return out


def exact_counts(samples: Examples, cfg: LearnerConfig) -> np.ndarray:
    """Noise-free consistency counts in tag order (a test and diagnostics oracle)."""
    masks = hypothesis_masks(cfg.d, cfg.k)
    return consistency_matrix(samples, masks).sum(axis=0, dtype=np.int64)


def select_hypothesis(noisy_counts: np.ndarray) -> int:
    """Tag of the first maximal count."""
    return int(np.argmax(noisy_counts))


class ParityRandomizer:
    """Local randomizer: one counting-protocol submission per hypothesis counter."""

    def __init__(self, cfg: LearnerConfig):
        self.cfg = cfg
        self.counting = cfg.counting
        self.masks = hypothesis_masks(cfg.d, cfg.k)
        self.num_tags = 2 * len(self.masks)

    def randomize_many(self, samples: Examples, rng):
        bits = consistency_matrix(samples, self.masks)
        vals = randomize_values(bits, self.counting, rng)
        tags = np.broadcast_to(np.arange(self.num_tags, dtype=np.int64)[:, None], vals.shape[1:])
        tags = np.broadcast_to(tags, vals.shape)
        per_party = self.num_tags * self.counting.splits
        return Messages(tags.reshape(-1).copy(), vals.reshape(-1)), np.full(len(samples), per_party)

    def __call__(self, ex: LabeledExample, rng) -> Messages:
        batch = Examples(np.asarray(ex.x)[None, :], [ex.y])
        return self.randomize_many(batch, rng)[0]


@dataclass
class LearnResult:
    hypothesis: ParityConcept
    tag: int
    noisy_counts: np.ndarray
    cfg: LearnerConfig
    per_counter_eps: float
    composed_eps: float
    wrap_suspects: int
    transcript: Optional[ExecutionTranscript] = field(default=None, repr=False)


class ParityAnalyzer:
    """Decodes every hypothesis counter from the shuffled bag and takes the argmax."""

    def __init__(self, cfg: LearnerConfig):
        self.cfg = cfg
        self.counting = cfg.counting
        self.num_tags = cfg.num_hypotheses

    def __call__(self, bag: MessageBag) -> LearnResult:
        noisy = analyze_counts(bag, self.counting, self.num_tags)
        tag = select_hypothesis(noisy)
        q, n = self.counting.q, self.cfg.n
        return LearnResult(
            hypothesis=self.cfg.hypothesis(tag),
            tag=tag,
            noisy_counts=noisy,
            cfg=self.cfg,
            per_counter_eps=self.cfg.eps,
            # every sample feeds one bit into every counter
            composed_eps=self.cfg.eps * self.num_tags,
            # decoded values this far from [0, n] only arise from modular wraparound in practice
            wrap_suspects=int(np.count_nonzero(np.abs(noisy - n / 2) > q / 4)),
        )


class ShuffleParityLearner:
    """The learner as a shuffle protocol ``((R_1..R_n), S, A)`` with identical randomizers."""

    def __init__(self, cfg: LearnerConfig):
        self.cfg = cfg
        self._randomizer = ParityRandomizer(cfg)
        self.analyzer = ParityAnalyzer(cfg)

    def randomizers(self) -> list:
        return [self._randomizer] * self.cfg.n


def _as_examples(samples: Union[Examples, Sequence[LabeledExample]], d: int) -> Examples:
    if isinstance(samples, Examples):
        return samples
    return Examples.from_list(samples, d)


def learn_shuffle(
    samples: Union[Examples, Sequence[LabeledExample]],
    cfg: LearnerConfig,
    rng: np.random.Generator,
    status: Optional[PartyStatus] = None,
) -> LearnResult:
    """Run every hypothesis counter in one shuffle round and return the noisy argmax."""
    samples = _as_examples(samples, cfg.d)
    if len(samples) == 0:
        raise ValueError("cannot learn from zero samples")
    if len(samples) != cfg.n:
        raise ValueError(f"config expects {cfg.n} samples, got {len(samples)}")
    if samples.d != cfg.d:
        raise ValueError(f"config dimension {cfg.d} but samples have dimension {samples.d}")
    learner = ShuffleParityLearner(cfg)
    result, transcript = run_round(learner.randomizers(), samples, status, learner.analyzer, rng)
    result.transcript = transcript
    return result
