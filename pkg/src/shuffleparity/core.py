"""Points, parity concepts and the tilted-parity distribution family.

Points are ``int8`` vectors over ``{-1, 0, +1}``. Data points are full-support
(no zeros); the all-zero vector is the pad point used by the pan-private
reduction. Subsets of coordinates are bitmasks with 0-based indices, so the
subset ``{0, 2}`` is the mask ``0b101``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

MAX_DIM = 24
EXACT_MAX_DIM = 20


def mask_from_indices(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        if i < 0:
            raise ValueError(f"negative coordinate index {i}")
        mask |= 1 << int(i)
    return mask


def indices_from_mask(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def _check_dim(d: int) -> None:
    if not 1 <= d <= MAX_DIM:
        raise ValueError(f"dimension must be in [1, {MAX_DIM}], got {d}")


def _check_sign(b: int) -> None:
    if b not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {b}")


def as_points(x, d: Optional[int] = None) -> np.ndarray:
    """Coerce ``x`` to a 2-D ``int8`` array of points, validating entries."""
    arr = np.asarray(x)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError("points must be a vector or a 2-D array")
    if d is not None and arr.shape[1] != d:
        raise ValueError(f"dimension mismatch: expected {d}, got {arr.shape[1]}")
    if arr.size and (arr.dtype.kind not in "iu" or np.abs(arr).max() > 1):
        raise ValueError("point coordinates must lie in {-1, 0, +1}")
    return arr.astype(np.int8, copy=False)


def pad_point(d: int) -> np.ndarray:
    _check_dim(d)
    return np.zeros(d, dtype=np.int8)


def is_full_support(x) -> bool:
    return bool(np.all(np.asarray(x) != 0))


def cube(d: int) -> np.ndarray:
    """All ``2**d`` points of ``{-1, +1}^d``; row ``i`` has ``-1`` where bit ``j`` of ``i`` is set."""
    if not 1 <= d <= EXACT_MAX_DIM:
        raise ValueError(f"cube enumeration supports 1 <= d <= {EXACT_MAX_DIM}, got {d}")
    idx = np.arange(1 << d, dtype=np.int64)[:, None]
    bits = (idx >> np.arange(d, dtype=np.int64)) & 1
    return (1 - 2 * bits).astype(np.int8)


def uniform_points(d: int, size: int, rng: np.random.Generator) -> np.ndarray:
    return (1 - 2 * rng.integers(0, 2, size=(size, d), dtype=np.int8)).astype(np.int8)


def _subset_product(X: np.ndarray, mask: int) -> np.ndarray:
    """Product of the coordinates in ``mask`` with zero coordinates skipped."""
    cols = list(indices_from_mask(mask))
    if not cols:
        return np.ones(X.shape[0], dtype=np.int8)
    sub = X[:, cols]
    sub = np.where(sub == 0, 1, sub)
    # parity of the number of -1 entries
    neg = np.count_nonzero(sub < 0, axis=1) & 1
    return (1 - 2 * neg).astype(np.int8)


def parity_table(X, d: Optional[int] = None) -> np.ndarray:
    """Unsigned parities of every subset: column ``mask`` holds ``prod_{i in mask} x_i``.

    Zero coordinates are skipped. The result has shape ``(len(X), 2**d)``.
    """
    X = as_points(X, d)
    n, dim = X.shape
    _check_dim(dim)
    signs = np.where(X == 0, 1, X).astype(np.int8)
    table = np.ones((n, 1), dtype=np.int8)
    for i in range(dim):
        table = np.concatenate([table, table * signs[:, i : i + 1]], axis=1)
    return table


@dataclass(frozen=True)
class ParityConcept:
    """The concept ``x -> b * prod_{i in r} x_i`` on ``d`` coordinates."""

    r: int
    b: int
    d: int

    def __post_init__(self):
        _check_dim(self.d)
        _check_sign(self.b)
        if self.r < 0 or self.r >> self.d:
            raise ValueError(f"subset mask {self.r:#b} does not fit in dimension {self.d}")

    @classmethod
    def from_indices(cls, indices: Iterable[int], b: int, d: int) -> "ParityConcept":
        return cls(mask_from_indices(indices), b, d)

    @property
    def indices(self) -> tuple[int, ...]:
        return indices_from_mask(self.r)

    @property
    def weight(self) -> int:
        return popcount(self.r)

    def negated(self) -> "ParityConcept":
        return ParityConcept(self.r, -self.b, self.d)

    def __call__(self, x) -> Union[int, np.ndarray]:
        x = np.asarray(x)
        if x.ndim == 1:
            return eval_parity(self, x)
        return eval_parity_many(self, x)


def eval_parity(c: ParityConcept, x) -> int:
    """Evaluate ``c`` at a single point. The pad point ``0^d`` evaluates to ``c.b``."""
    X = as_points(x)
    if X.shape[0] != 1:
        raise ValueError("eval_parity takes a single point; use eval_parity_many")
    return int(eval_parity_many(c, X)[0])


def eval_parity_many(c: ParityConcept, X) -> np.ndarray:
    X = as_points(X, c.d)
    return (c.b * _subset_product(X, c.r)).astype(np.int8)


@dataclass(frozen=True)
class LabeledExample:
    x: np.ndarray
    y: int

    def __post_init__(self):
        _check_sign(self.y)


class Examples:
    """A batch of labeled examples held as an ``(n, d)`` point array and a label vector."""

    def __init__(self, X, y):
        self.X = as_points(X)
        self.y = np.asarray(y, dtype=np.int8).reshape(-1)
        if len(self.y) != len(self.X):
            raise ValueError("X and y have different lengths")
        if self.y.size and not np.isin(self.y, (-1, 1)).all():
            raise ValueError("labels must be +1 or -1")

    @classmethod
    def from_list(cls, examples: Iterable[LabeledExample], d: int) -> "Examples":
        examples = list(examples)
        if not examples:
            return cls(np.empty((0, d), dtype=np.int8), np.empty(0, dtype=np.int8))
        return cls(np.stack([np.asarray(e.x) for e in examples]), [e.y for e in examples])

    @classmethod
    def labeled_by(cls, c: ParityConcept, X) -> "Examples":
        X = as_points(X, c.d)
        return cls(X, eval_parity_many(c, X))

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return len(self.y)

    def __getitem__(self, key):
        if isinstance(key, slice):
            return Examples(self.X[key], self.y[key])
        return LabeledExample(self.X[key], int(self.y[key]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


class Uniform:
    """Uniform distribution on ``{-1, +1}^d``."""

    def __init__(self, d: int):
        _check_dim(d)
        self.d = d

    def pmf(self, X) -> np.ndarray:
        X = as_points(X, self.d)
        if not np.all(X != 0):
            raise ValueError("pmf is only defined on full-support points")
        return np.full(X.shape[0], 2.0 ** -self.d)

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return uniform_points(self.d, size, rng)

    def __repr__(self):
        return f"Uniform(d={self.d})"


@dataclass(frozen=True)
class HardDistribution:
    """Cube distribution tilted by ``2*alpha`` towards ``prod_{i in ell} x_i = b``."""

    d: int
    ell: int
    b: int
    alpha: float

    def __post_init__(self):
        _check_dim(self.d)
        _check_sign(self.b)
        if self.ell <= 0 or self.ell >> self.d:
            raise ValueError("ell must be a nonempty subset of the d coordinates")
        if not 0.0 <= self.alpha <= 0.5:
            raise ValueError(f"alpha must lie in [0, 1/2], got {self.alpha}")

    @property
    def ell_indices(self) -> tuple[int, ...]:
        return indices_from_mask(self.ell)

    def pmf(self, X) -> np.ndarray:
        X = as_points(X, self.d)
        if not np.all(X != 0):
            raise ValueError("pmf is only defined on full-support points")
        agree = _subset_product(X, self.ell) == self.b
        scale = 2.0 ** -self.d
        return np.where(agree, (1 + 2 * self.alpha) * scale, (1 - 2 * self.alpha) * scale)

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        X = uniform_points(self.d, size, rng)
        target = np.where(rng.random(size) < (1 + 2 * self.alpha) / 2, self.b, -self.b)
        wrong = _subset_product(X, self.ell) != target
        pivot = min(self.ell_indices)
        X[wrong, pivot] = -X[wrong, pivot]
        return X


def hard_pmf(P: HardDistribution, x) -> float:
    X = as_points(x, P.d)
    if X.shape[0] != 1:
        raise ValueError("hard_pmf takes a single point")
    return float(P.pmf(X)[0])


def sample_hard(P: HardDistribution, rng: np.random.Generator) -> np.ndarray:
    return P.sample(1, rng)[0]


def _unrank_combination(rank: int, size: int) -> int:
    """Colex unranking: the ``rank``-th ``size``-subset of the naturals as a bitmask."""
    mask = 0
    for i in range(size, 0, -1):
        c = i - 1
        while math.comb(c + 1, i) <= rank:
            c += 1
        rank -= math.comb(c, i)
        mask |= 1 << c
    return mask


def _rank_combination(mask: int) -> int:
    return sum(math.comb(c, i + 1) for i, c in enumerate(indices_from_mask(mask)))


@dataclass(frozen=True)
class HardFamily:
    """All ``P_{d, ell, b, alpha}`` with ``1 <= |ell| <= k`` and both signs."""

    d: int
    k: int
    alpha: float

    def __post_init__(self):
        _check_dim(self.d)
        if not 1 <= self.k <= self.d:
            raise ValueError(f"k must lie in [1, d], got k={self.k}, d={self.d}")
        if not 0.0 <= self.alpha <= 0.5:
            raise ValueError(f"alpha must lie in [0, 1/2], got {self.alpha}")

    @property
    def num_subsets(self) -> int:
        return sum(math.comb(self.d, j) for j in range(1, self.k + 1))

    def __len__(self) -> int:
        return 2 * self.num_subsets

    def member(self, rank: int) -> HardDistribution:
        """Member by rank; ranks order subsets by size, then colex, with ``b=+1`` first."""
        if not 0 <= rank < len(self):
            raise IndexError(rank)
        subset_rank, sign_bit = divmod(rank, 2)
        for j in range(1, self.k + 1):
            block = math.comb(self.d, j)
            if subset_rank < block:
                ell = _unrank_combination(subset_rank, j)
                return HardDistribution(self.d, ell, 1 - 2 * sign_bit, self.alpha)
            subset_rank -= block
        raise AssertionError("unreachable")

    def rank(self, P: HardDistribution) -> int:
        size = popcount(P.ell)
        offset = sum(math.comb(self.d, j) for j in range(1, size))
        return 2 * (offset + _rank_combination(P.ell)) + (0 if P.b == 1 else 1)

    def members(self):
        for i in range(len(self)):
            yield self.member(i)


def sample_family_member(F: HardFamily, rng: np.random.Generator) -> HardDistribution:
    return F.member(int(rng.integers(len(F))))


Distribution = Union[Uniform, HardDistribution]


def generalization_error(
    c: ParityConcept,
    h: ParityConcept,
    dist: Optional[Distribution] = None,
    *,
    mode: str = "exact",
    trials: int = 100_000,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Probability that ``h`` and ``c`` disagree on a draw from ``dist`` (uniform by default).

    ``mode="exact"`` sums the pmf over the whole cube and needs ``d <= 20``;
    ``mode="mc"`` averages over ``trials`` samples.
    """
    if c.d != h.d:
        raise ValueError("concepts live in different dimensions")
    if dist is None:
        dist = Uniform(c.d)
    if dist.d != c.d:
        raise ValueError("distribution dimension does not match the concepts")
    if mode == "exact":
        if c.d > EXACT_MAX_DIM:
            raise ValueError(f"exact mode needs d <= {EXACT_MAX_DIM}; use mode='mc'")
        X = cube(c.d)
        disagree = eval_parity_many(c, X) != eval_parity_many(h, X)
        return float(dist.pmf(X)[disagree].sum())
    if mode == "mc":
        if rng is None:
            raise ValueError("Monte Carlo mode needs an rng")
        X = dist.sample(trials, rng)
        return float(np.mean(eval_parity_many(c, X) != eval_parity_many(h, X)))
    raise ValueError(f"unknown mode {mode!r}")
