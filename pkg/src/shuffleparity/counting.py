"""Robust private counting in the shuffle model.

Each party adds a divisible Discrete Laplace share to its bit, splits the
result into additive shares modulo ``q`` and sends one message per share. The
analyzer sums every message modulo ``q``. With all ``n`` parties honest the
estimate is the true count plus the sum of ``c`` Discrete Laplace draws;
with only ``n/c`` honest parties at least one full draw remains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .noise import PolyaParams, sample_polya, share_params
from .shuffle import Message, MessageBag, Messages, PartyStatus, run_round


def _is_prime(m: int) -> bool:
    if m < 2:
        return False
    if m % 2 == 0:
        return m == 2
    f = 3
    while f * f <= m:
        if m % f == 0:
            return False
        f += 2
    return True


def next_prime_above(x: float) -> int:
    m = int(math.floor(x)) + 1
    while not _is_prime(m):
        m += 1
    return m


def default_modulus(n: int, eps: float) -> int:
    return next_prime_above(8 * n + 400 / eps)


@dataclass(frozen=True)
class CountingConfig:
    """Parameters of one counting protocol instance.

    ``noise=False`` is a test hook that drops the Polya shares entirely.
    """

    n: int
    eps: float
    c: int = 1
    splits: int = 1
    q: Optional[int] = None
    noise: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.c < 1:
            raise ValueError(f"c must be >= 1, got {self.c}")
        if self.splits < 1:
            raise ValueError(f"splits must be >= 1, got {self.splits}")
        if self.q is None:
            object.__setattr__(self, "q", default_modulus(self.n, self.eps))
        elif self.q <= self.n + 1:
            raise ValueError(f"modulus q={self.q} too small for n={self.n}")

    @property
    def polya(self) -> PolyaParams:
        return share_params(self.n, self.eps, self.c)


def randomize_values(bits: np.ndarray, cfg: CountingConfig, rng: np.random.Generator) -> np.ndarray:
    """Shares of ``bit + plus - minus`` for every entry of ``bits``; output has a trailing ``splits`` axis."""
    bits = np.asarray(bits, dtype=np.int64)
    v = bits.copy()
    if cfg.noise:
        p = cfg.polya
        v += sample_polya(p, rng, size=bits.shape) - sample_polya(p, rng, size=bits.shape)
    v %= cfg.q
    if cfg.splits == 1:
        return v[..., None]
    head = rng.integers(0, cfg.q, size=bits.shape + (cfg.splits - 1,), dtype=np.int64)
    last = (v - head.sum(axis=-1)) % cfg.q
    return np.concatenate([head, last[..., None]], axis=-1)


def randomize_bit(a: int, cfg: CountingConfig, rng: np.random.Generator, tag: int = 0) -> list[Message]:
    if a not in (0, 1):
        raise ValueError(f"input must be a bit, got {a}")
    vals = randomize_values(np.array(a), cfg, rng)
    return [Message(tag, int(v)) for v in vals]


class CountingRandomizer:
    """Local randomizer for a single counter."""

    def __init__(self, cfg: CountingConfig, tag: int = 0):
        self.cfg = cfg
        self.tag = tag

    def __call__(self, a, rng) -> Messages:
        return Messages.from_list(randomize_bit(int(a), self.cfg, rng, self.tag))

    def randomize_many(self, bits, rng):
        bits = np.asarray(bits, dtype=np.int64)
        vals = randomize_values(bits, self.cfg, rng).reshape(-1)
        tags = np.full(vals.shape, self.tag, dtype=np.int64)
        return Messages(tags, vals), np.full(len(bits), self.cfg.splits, dtype=np.int64)


def center(total, q: int):
    """Representative of ``total mod q`` in ``(-q/2, q/2]``."""
    s = np.asarray(total, dtype=np.int64) % q
    s = np.where(s > q // 2, s - q, s)
    return int(s) if s.ndim == 0 else s


def analyze_count(bag: MessageBag, cfg: CountingConfig) -> int:
    if len(bag) and bag.tags[0] != bag.tags[-1]:
        raise ValueError("analyze_count expects messages of a single counter")
    return center(int(bag.values.sum() % cfg.q), cfg.q)


def analyze_counts(bag: MessageBag, cfg: CountingConfig, num_tags: int) -> np.ndarray:
    """Decode every counter ``0..num_tags-1`` from one bag."""
    if len(bag) and (bag.tags[0] < 0 or bag.tags[-1] >= num_tags):
        raise ValueError("bag holds tags outside the counter range")
    # float64 sums are exact: every total is below n * splits * q << 2**53
    totals = np.bincount(bag.tags, weights=bag.values, minlength=num_tags)
    return center(totals.astype(np.int64), cfg.q)


def count_protocol(
    bits,
    cfg: CountingConfig,
    rng: np.random.Generator,
    status: Optional[PartyStatus] = None,
):
    """Run the counting protocol through the shuffler; returns ``(estimate, transcript)``."""
    bits = np.asarray(bits, dtype=np.int64)
    if len(bits) != cfg.n:
        raise ValueError(f"expected {cfg.n} bits, got {len(bits)}")
    R = CountingRandomizer(cfg)
    return run_round([R] * cfg.n, bits, status, lambda bag: analyze_count(bag, cfg), rng)


def simulate_counts(
    bits,
    cfg: CountingConfig,
    trials: int,
    rng: np.random.Generator,
    honest: Optional[np.ndarray] = None,
    chunk_cells: int = 4_000_000,
) -> np.ndarray:
    """Many independent protocol outputs on fixed ``bits``, computed in bulk.

    Performs the same per-party arithmetic as :func:`count_protocol` without
    materialising bags, so Monte Carlo audits can reach ``10**6`` trials.
    """
    bits = np.asarray(bits, dtype=np.int64)
    if honest is not None:
        bits = bits[np.asarray(honest, dtype=bool)]
    out = np.empty(trials, dtype=np.int64)
    if len(bits) == 0:
        out[:] = 0
        return out
    rows = max(1, chunk_cells // (len(bits) * cfg.splits))
    for start in range(0, trials, rows):
        stop = min(trials, start + rows)
        batch = np.broadcast_to(bits, (stop - start, len(bits)))
        vals = randomize_values(batch, cfg, rng)
        out[start:stop] = center(vals.sum(axis=(1, 2)) % cfg.q, cfg.q)
    return out


def message_marginal_tv(cfg: CountingConfig, trials: int, rng: np.random.Generator, a: int = 0):
    """Empirical TV between one message's marginal and uniform on ``Z_q``.

    Returns ``(tv, floor)`` where ``floor`` is the same statistic for truly
    uniform draws of equal size, i.e. the sampling noise level.
    """
    vals = randomize_values(np.full(trials, a), cfg, rng)[:, 0]
    ref = rng.integers(0, cfg.q, size=trials)
    u = 1.0 / cfg.q

    def tv(x):
        return 0.5 * float(np.abs(np.bincount(x, minlength=cfg.q) / trials - u).sum())

    return tv(vals), tv(ref)
