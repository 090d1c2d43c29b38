"""Shuffle-model parity learning: divisible-noise counting, the hypothesis-counting
learner, and the pan-private reductions used to lower-bound its sample complexity."""

from .core import (
    Examples,
    HardDistribution,
    HardFamily,
    LabeledExample,
    ParityConcept,
    Uniform,
    eval_parity,
    generalization_error,
    hard_pmf,
    sample_family_member,
    sample_hard,
)
from .counting import CountingConfig, analyze_count, randomize_bit
from .learner import LearnerConfig, LearnResult, consistency_bit, learn_shuffle
from .noise import dlap_pmf, make_shares, sample_lap, sample_polya, PolyaParams, NoiseShare
from .panprivate import (
    DistinguisherConfig,
    ReductionConfig,
    dist_pu,
    distinguishing_advantage,
    identify_hard,
    learn_par_unif,
    lower_bound_value,
)
from .shuffle import MessageBag, PartyStatus, run_incremental, run_round

__version__ = "0.1.0"
