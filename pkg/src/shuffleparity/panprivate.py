"""Pan-private reductions built from the robust shuffle learner.

* :func:`learn_par_unif` turns a 1/3-robust shuffle learner over ``n`` parties
  into a pan-private uniform-distribution learner consuming ``n/3`` examples.
* :func:`identify_hard` labels hard-distribution samples by a random
  coordinate and learns the remaining parity.
* :func:`dist_pu` thresholds a noisy match count to tell the hard family
  from uniform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.stats import binomtest

from .core import (
    Examples,
    HardFamily,
    ParityConcept,
    _subset_product,
    as_points,
    indices_from_mask,
    uniform_points,
)
from .learner import LearnerConfig, LearnResult, ShuffleParityLearner
from .noise import sample_lap
from .shuffle import ExecutionTranscript, Schedule, run_incremental

LearnerFactory = Callable[[LearnerConfig], object]


@dataclass(frozen=True)
class ReductionConfig:
    """Inner learner budget and class for the pan-private reductions.

    ``n`` is the party count of the inner shuffle learner and must be a
    multiple of 3; the pan-private learner consumes ``n/3`` examples.
    ``learner`` builds the inner protocol from a :class:`LearnerConfig`; it
    must expose ``randomizers()`` and ``analyzer``.
    """

    n: int
    d: int
    eps: float = 1.0
    k: Optional[int] = None
    c: int = 3
    splits: int = 1
    noise: bool = True
    learner: Optional[LearnerFactory] = field(default=None, compare=False)

    def __post_init__(self):
        if self.n < 3 or self.n % 3:
            raise ValueError(f"n must be a positive multiple of 3, got {self.n}")
        if self.k is None:
            object.__setattr__(self, "k", self.d)

    @property
    def third(self) -> int:
        return self.n // 3

    @property
    def learner_config(self) -> LearnerConfig:
        return LearnerConfig(
            d=self.d, n=self.n, eps=self.eps, k=self.k, c=self.c, splits=self.splits, noise=self.noise
        )

    def build_learner(self):
        factory = self.learner or ShuffleParityLearner
        return factory(self.learner_config)

    def projected(self) -> "ReductionConfig":
        """Config for the inner learner after one coordinate is erased."""
        if self.d < 2:
            raise ValueError("cannot erase a coordinate from a 1-dimensional point")
        return replace(self, d=self.d - 1, k=max(0, min(self.k - 1, self.d - 1)))


@dataclass
class LearnParUnifRun:
    hypothesis: ParityConcept
    b_hat: int
    n_prime: int
    permutation: np.ndarray
    result: object
    transcript: ExecutionTranscript = field(repr=False)


def run_learn_par_unif(
    labeled: Examples,
    cfg: ReductionConfig,
    rng: np.random.Generator,
    *,
    b_hat: Optional[int] = None,
    n_prime: Optional[int] = None,
) -> LearnParUnifRun:
    """Full record of one pan-private learning run.

    ``b_hat`` and ``n_prime`` are test hooks that override the random pad
    label and the binomial draw (the draws still happen, keeping the rng
    stream aligned).
    """
    third = cfg.third
    if len(labeled) != third:
        raise ValueError(f"expected n/3 = {third} labeled examples, got {len(labeled)}")
    if labeled.d != cfg.d:
        raise ValueError(f"config dimension {cfg.d} but examples have dimension {labeled.d}")
    inner = cfg.build_learner()
    base = inner.randomizers()
    if len(base) != cfg.n:
        raise ValueError("inner learner must provide one randomizer per party")

    perm = rng.permutation(cfg.n)
    drawn_b = int(rng.choice((-1, 1)))
    b = drawn_b if b_hat is None else b_hat
    drawn_n = min(int(rng.binomial(cfg.n, 2 / 9)), third)
    used = drawn_n if n_prime is None else n_prime
    if not 0 <= used <= third:
        raise ValueError(f"n_prime must lie in [0, n/3], got {used}")

    X = np.zeros((cfg.n, cfg.d), dtype=np.int8)
    y = np.full(cfg.n, b, dtype=np.int8)
    # only the first N' labeled examples are read
    X[third : third + used] = labeled.X[:used]
    y[third : third + used] = labeled.y[:used]
    inputs = Examples(X, y)

    randomizers = [base[j] for j in perm]
    result, transcript = run_incremental(
        randomizers, inputs, Schedule(third, third, third), inner.analyzer, rng
    )
    transcript.meta.update(b_hat=b, n_prime=used)
    hypothesis = result.hypothesis if isinstance(result, LearnResult) else result
    return LearnParUnifRun(hypothesis, b, used, perm, result, transcript)


def learn_par_unif(labeled: Examples, cfg: ReductionConfig, rng: np.random.Generator, **hooks) -> ParityConcept:
    return run_learn_par_unif(labeled, cfg, rng, **hooks).hypothesis


def check_pan_preconditions(run: LearnParUnifRun, gamma: float = 1 / 3) -> bool:
    """Every probe time ``t`` leaves at least ``gamma*n`` parties on both sides of the cut.

    The state after ``n/3 + t`` parties and the remaining ``n - n/3 - t``
    randomizer applications must each involve ``gamma*n`` parties for the
    inner learner's robustness to cover them.
    """
    tr = run.transcript
    n = tr.meta["n"]
    schedule: Schedule = tr.meta["schedule"]
    need = gamma * n
    for t in range(schedule.online + 1):
        before = schedule.prefix + t
        after = n - before
        if before < need or after < need:
            return False
        if len(tr.parties_in_state(t)) != before:
            return False
    return True


def erase_coordinate(z: np.ndarray, i_star: int) -> np.ndarray:
    return np.delete(z, i_star, axis=1)


def reinsert_index(mask: int, i_star: int) -> int:
    """Map a subset of the ``d-1`` remaining coordinates back to ``[d]`` (``i_star`` itself excluded)."""
    low = mask & ((1 << i_star) - 1)
    high = mask >> i_star
    return low | (high << (i_star + 1))


def project_index(mask: int, i_star: int) -> int:
    """Inverse of :func:`reinsert_index` on subsets not containing ``i_star``."""
    low = mask & ((1 << i_star) - 1)
    high = mask >> (i_star + 1)
    return low | (high << i_star)


@dataclass
class IdentifyHardRun:
    ell: int
    b: int
    i_star: int
    labeled: Examples = field(repr=False)
    inner: LearnParUnifRun = field(repr=False)

    @property
    def ell_indices(self) -> tuple[int, ...]:
        return indices_from_mask(self.ell)


def run_identify_hard(
    z,
    cfg: ReductionConfig,
    rng: np.random.Generator,
    *,
    i_star: Optional[int] = None,
    **hooks,
) -> IdentifyHardRun:
    """Label by a random coordinate, learn the rest, and return ``(r + {i*}, b)``.

    ``cfg`` describes the full dimension ``d`` of ``z``; the inner learner
    runs on ``d-1`` coordinates with weight bound ``k-1``. ``len(z)`` must be
    ``cfg.n // 3``, the example count of the inner pan-private learner.
    """
    z = as_points(z, cfg.d)
    if cfg.d < 2:
        raise ValueError("identify_hard needs dimension >= 2")
    if not np.all(z != 0):
        raise ValueError("identify_hard expects full-support points")
    drawn = int(rng.integers(cfg.d))
    i = drawn if i_star is None else i_star
    labeled = Examples(erase_coordinate(z, i), z[:, i])
    inner = run_learn_par_unif(labeled, cfg.projected(), rng, **hooks)
    ell = reinsert_index(inner.hypothesis.r, i) | (1 << i)
    return IdentifyHardRun(ell, inner.hypothesis.b, i, labeled, inner)


def identify_hard(z, cfg: ReductionConfig, rng: np.random.Generator, **hooks) -> tuple[int, int]:
    run = run_identify_hard(z, cfg, rng, **hooks)
    return run.ell, run.b


@dataclass(frozen=True)
class DistinguisherConfig:
    """``n`` is the inner shuffle learner's party budget; the distinguisher reads ``n/3 + m`` points."""

    d: int
    k: int
    n: int
    eps: float = 1.0
    c: int = 3
    splits: int = 1
    noise: bool = True
    learner: Optional[LearnerFactory] = field(default=None, compare=False)

    def __post_init__(self):
        if not 1 <= self.k <= self.d:
            raise ValueError(f"k must lie in [1, d], got k={self.k}, d={self.d}")
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    @property
    def m(self) -> int:
        return match_sample_size(self.d, self.k, self.eps)

    @property
    def threshold(self) -> float:
        return 3 * self.m / 4

    @property
    def learn_samples(self) -> int:
        return self.n // 3

    @property
    def total_samples(self) -> int:
        return self.learn_samples + self.m

    @property
    def reduction(self) -> ReductionConfig:
        return ReductionConfig(
            n=self.n, d=self.d, eps=self.eps, k=self.k, c=self.c,
            splits=self.splits, noise=self.noise, learner=self.learner,
        )


def match_sample_size(d: int, k: int, eps: float) -> int:
    return math.ceil(max(512 * d / k, 64 * math.sqrt(2 * d / k) / eps))



@dataclass
class DistPURun:
    output: int
    ell: int
    b: int
    matches: int
    lap_first: float
    lap_second: float
    threshold: float
    identify: IdentifyHardRun = field(repr=False)

    @property
    def c_star(self) -> float:
        return self.lap_first + self.matches + self.lap_second


def run_dist_pu(z, cfg: DistinguisherConfig, rng: np.random.Generator, **hooks) -> DistPURun:
    z = as_points(z, cfg.d)
    if len(z) != cfg.total_samples:
        raise ValueError(f"expected n/3 + m = {cfg.total_samples} points, got {len(z)}")
    n = cfg.learn_samples
    ident = run_identify_hard(z[:n], cfg.reduction, rng, **hooks)
    if ident.ell == 0:
        raise RuntimeError("identify_hard returned an empty subset")
    lap_first = float(sample_lap(1 / cfg.eps, rng))
    matches = int(np.count_nonzero(_subset_product(z[n:], ident.ell) == ident.b))
    lap_second = float(sample_lap(1 / cfg.eps, rng))
    c_star = lap_first + matches + lap_second
    output = int(c_star >= cfg.threshold)
    return DistPURun(output, ident.ell, ident.b, matches, lap_first, lap_second, cfg.threshold, ident)


def dist_pu(z, cfg: DistinguisherConfig, rng: np.random.Generator, **hooks) -> int:
    return run_dist_pu(z, cfg, rng, **hooks).output


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def wilson_half_width(successes: int, trials: int, confidence: float = 0.95) -> float:
    lo, hi = wilson_interval(successes, trials, confidence)
    return (hi - lo) / 2


@dataclass
class AdvantageEstimate:
    p_hard: float
    p_uniform: float
    hits_hard: int
    hits_uniform: int
    trials: int
    half_width_hard: float
    half_width_uniform: float
    stub: bool = False

    @property
    def advantage(self) -> float:
        return self.p_hard - self.p_uniform

    @property
    def half_width(self) -> float:
        # union bound over the two 95% intervals
        return self.half_width_hard + self.half_width_uniform

    def merge(self, other: "AdvantageEstimate") -> "AdvantageEstimate":
        hits_h = self.hits_hard + other.hits_hard
        hits_u = self.hits_uniform + other.hits_uniform
        t = self.trials + other.trials
        return AdvantageEstimate(
            hits_h / t, hits_u / t, hits_h, hits_u, t,
            wilson_half_width(hits_h, t), wilson_half_width(hits_u, t),
            self.stub or other.stub,
        )


def distinguishing_advantage(
    F: HardFamily,
    cfg: DistinguisherConfig,
    trials: int,
    rng: np.random.Generator,
) -> AdvantageEstimate:
    """Monte Carlo ``Pr[DistPU=1 | hard family] - Pr[DistPU=1 | uniform]``.

    Each side gets ``trials`` independent runs; the hard side redraws
    ``(L, B)`` from ``F`` every trial.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if F.d != cfg.d or F.k != cfg.k:
        raise ValueError("family and distinguisher disagree on (d, k)")
    N = cfg.total_samples
    hits_h = hits_u = 0
    for _ in range(trials):
        P = F.member(int(rng.integers(len(F))))
        hits_h += dist_pu(P.sample(N, rng), cfg, rng)
        hits_u += dist_pu(uniform_points(cfg.d, N, rng), cfg, rng)
    return AdvantageEstimate(
        hits_h / trials, hits_u / trials, hits_h, hits_u, trials,
        wilson_half_width(hits_h, trials), wilson_half_width(hits_u, trials),
        stub=cfg.learner is not None and getattr(cfg.learner, "is_stub", False),
    )


class ConstantLearner:
    """Degenerate inner learner: parties send nothing and the analyzer returns a fixed concept.

    Build it with :meth:`factory`; the ``is_stub`` marker makes harnesses
    report its runs separately.
    """

    is_stub = True

    def __init__(self, cfg: LearnerConfig, r: int = 0, b: int = 1):
        self.cfg = cfg
        self.concept = ParityConcept(r, b, cfg.d)
        self.analyzer = lambda bag: self.concept

    def randomizers(self) -> list:
        return [_silent] * self.cfg.n

    @classmethod
    def factory(cls, r: int = 0, b: int = 1) -> LearnerFactory:
        def build(cfg: LearnerConfig):
            return cls(cfg, r & ((1 << cfg.d) - 1), b)

        build.is_stub = True
        return build


def _silent(x, rng):
    return []


def lower_bound_value(d: int, k: int, eps: float, delta: float, T: float, alpha: float = 0.5) -> float:
    """``T / sqrt(eps^2 alpha^2 / C + delta log(C/delta))`` with ``C = sum_{j<=k} binom(d, j)``.

    Constants hidden in the asymptotic statement are set to 1. ``delta = 0``
    uses the limit ``delta log(C/delta) -> 0``.
    """
    if d < 1 or not 1 <= k <= d:
        raise ValueError("need d >= 1 and 1 <= k <= d")
    if not eps > 0 or not 0 < alpha <= 0.5:
        raise ValueError("need eps > 0 and 0 < alpha <= 1/2")
    if not 0 <= delta < 1:
        raise ValueError("need 0 <= delta < 1")
    if not 0 < T <= 1:
        raise ValueError("need T in (0, 1]")
    C = sum(math.comb(d, j) for j in range(k + 1))
    slack = delta * math.log(C / delta) if delta > 0 else 0.0
    return T / math.sqrt(eps**2 * alpha**2 / C + slack)
