"""Discrete Laplace noise, its Polya decomposition, and continuous Laplace.

The Discrete Laplace distribution with parameter ``eps`` has pmf proportional
to ``exp(-eps*|i|)`` on the integers. It is infinitely divisible: summing
``Polya(c/n, e^-eps) - Polya(c/n, e^-eps)`` over ``n`` parties gives the sum of
``c`` independent Discrete Laplace draws, whatever ``n`` is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np


def _check_eps(eps: float) -> None:
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")


def dlap_pmf(eps: float, i):
    """Exact Discrete Laplace pmf, ``(1-e^-eps)/(1+e^-eps) * e^(-eps|i|)``."""
    _check_eps(eps)
    p = math.exp(-eps)
    norm = (1 - p) / (1 + p)
    out = norm * np.exp(-eps * np.abs(np.asarray(i, dtype=float)))
    return float(out) if np.ndim(out) == 0 else out


def dlap_variance(eps: float) -> float:
    _check_eps(eps)
    p = math.exp(-eps)
    return 2 * p / (1 - p) ** 2


def truncation_radius(eps: float) -> int:
    """Support radius for exact pmf tables; the discarded tail is below ``1e-12``."""
    return int(math.ceil(60 * max(1.0, 1.0 / eps)))


def dlap_convolution_pmf(eps: float, c: int, radius: Optional[int] = None):
    """Exact pmf of the sum of ``c`` independent Discrete Laplace(eps) draws.

    Returns ``(support, pmf)`` with ``support = -R..R`` where ``R = c * radius``.
    The single-draw table is truncated at ``radius``.
    """
    _check_eps(eps)
    if c < 1:
        raise ValueError(f"c must be >= 1, got {c}")
    if radius is None:
        radius = truncation_radius(eps)
    base = dlap_pmf(eps, np.arange(-radius, radius + 1))
    pmf = base
    for _ in range(c - 1):
        pmf = np.convolve(pmf, base)
    R = c * radius
    return np.arange(-R, R + 1), pmf


def max_shift_ratio(pmf: np.ndarray, window: Optional[slice] = None) -> float:
    """Largest ``pmf[i] / pmf[i+1]`` or its reverse over adjacent support points."""
    a = pmf[:-1]
    b = pmf[1:]
    if window is not None:
        a, b = a[window], b[window]
    return float(max(np.max(a / b), np.max(b / a)))


def sample_dlap(eps: float, rng: np.random.Generator, size=None):
    """Reference Discrete Laplace sampler as a difference of two geometrics."""
    _check_eps(eps)
    q = 1 - math.exp(-eps)
    return rng.geometric(q, size=size) - rng.geometric(q, size=size)


@dataclass(frozen=True)
class PolyaParams:
    """Negative binomial with real shape ``r`` and parameter ``p`` (mean ``r*p/(1-p)``)."""

    r: float
    p: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"Polya shape must be positive, got {self.r}")
        if not 0 < self.p < 1:
            raise ValueError(f"Polya p must lie in (0, 1), got {self.p}")

    @property
    def mean(self) -> float:
        return self.r * self.p / (1 - self.p)


def sample_polya(params: PolyaParams, rng: np.random.Generator, size=None):
    """Gamma-Poisson mixture draw(s) from ``Polya(r, p)``."""
    scale = params.p / (1 - params.p)
    return rng.poisson(rng.gamma(params.r, scale, size=size))


@dataclass(frozen=True)
class NoiseShare:
    plus: int
    minus: int

    @property
    def value(self) -> int:
        return self.plus - self.minus


def share_params(n: int, eps: float, c: int = 1) -> PolyaParams:
    if n < 1:
        raise ValueError(f"party count must be >= 1, got {n}")
    if c < 1:
        raise ValueError(f"divisibility multiplier must be >= 1, got {c}")
    _check_eps(eps)
    return PolyaParams(c / n, math.exp(-eps))


def make_shares(n: int, eps: float, c: int, rng: np.random.Generator) -> list[NoiseShare]:
    params = share_params(n, eps, c)
    plus = sample_polya(params, rng, size=n)
    minus = sample_polya(params, rng, size=n)
    return [NoiseShare(int(a), int(b)) for a, b in zip(plus, minus)]


def share_values(params: PolyaParams, rng: np.random.Generator, size) -> np.ndarray:
    """Vectorised ``plus - minus`` for an array of shares with the given shape."""
    return sample_polya(params, rng, size=size) - sample_polya(params, rng, size=size)


def sample_share_sums(
    n: int,
    eps: float,
    c: int,
    trials: int,
    rng: np.random.Generator,
    chunk_cells: int = 4_000_000,
) -> np.ndarray:
    """``trials`` independent totals of the ``n`` shares produced by :func:`make_shares`."""
    params = share_params(n, eps, c)
    out = np.empty(trials, dtype=np.int64)
    rows = max(1, chunk_cells // n)
    for start in range(0, trials, rows):
        stop = min(trials, start + rows)
        out[start:stop] = share_values(params, rng, (stop - start, n)).sum(axis=1)
    return out


def sample_lap(scale: float, rng: np.random.Generator, size=None):
    if not scale > 0:
        raise ValueError(f"Laplace scale must be positive, got {scale}")
    return rng.laplace(0.0, scale, size=size)


def empirical_pmf(samples: np.ndarray, support: np.ndarray) -> np.ndarray:
    """Empirical frequencies on ``support``; mass outside it is appended as one extra cell."""
    samples = np.asarray(samples, dtype=np.int64)
    lo = int(support[0])
    inside = (samples >= lo) & (samples <= int(support[-1]))
    counts = np.bincount(samples[inside] - lo, minlength=len(support)).astype(float)
    outside = samples.size - int(inside.sum())
    return np.append(counts, outside) / samples.size


def tv_to_pmf(samples: np.ndarray, support: np.ndarray, pmf: np.ndarray) -> float:
    """Total variation between the samples' empirical law and ``pmf`` on ``support``."""
    emp = empirical_pmf(samples, support)
    ref = np.append(pmf, max(0.0, 1.0 - pmf.sum()))
    return 0.5 * float(np.abs(emp - ref).sum())


def tv_between_samples(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    pa = np.bincount(a - lo, minlength=hi - lo + 1) / a.size
    pb = np.bincount(b - lo, minlength=hi - lo + 1) / b.size
    return 0.5 * float(np.abs(pa - pb).sum())
