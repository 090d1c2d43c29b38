"""Seeded experiment harness.

Subcommands: ``noise-audit``, ``learn``, ``reduction``, ``distinguish`` and
``bound``. Each emits one row per metric (CSV or JSON) carrying the config
hash and seed, and exits 0 when every check passes, 1 when a check fails and
2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Examples, HardFamily, ParityConcept, generalization_error, uniform_points
from .counting import CountingConfig, message_marginal_tv, simulate_counts
from .learner import LearnerConfig, exact_counts, learn_shuffle
from .noise import (
    dlap_convolution_pmf,
    dlap_variance,
    max_shift_ratio,
    sample_share_sums,
    truncation_radius,
    tv_to_pmf,
)
from .panprivate import (
    ConstantLearner,
    DistinguisherConfig,
    ReductionConfig,
    check_pan_preconditions,
    distinguishing_advantage,
    lower_bound_value,
    run_learn_par_unif,
    wilson_interval,
)

# Realizable sample size n = ceil(SAMPLE_CONSTANT * d * 2**(d/2)); calibrated at d in {6, 8}, eps = 1.
SAMPLE_CONSTANT = 1.0

COLUMNS = ["command", "d", "k", "n", "m", "eps", "c", "trials", "metric", "value",
           "ci_low", "ci_high", "seed", "config_hash"]

COMMANDS = ("noise-audit", "learn", "reduction", "distinguish", "bound")


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    command: str
    d: Optional[int] = None
    k: Optional[int] = None
    n: Optional[int] = None
    m: Optional[int] = None
    eps: float = 1.0
    delta: float = 0.0
    splits: int = 1
    c: int = 3
    alpha: float = 0.5
    trials: Optional[int] = None
    seed: int = 0
    data: str = "realizable"
    min_success: Optional[float] = None
    stub: bool = False
    d_min: int = 4
    out: Optional[str] = None
    format: str = "csv"

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "json"):
            raise UsageError("format must be csv or json")
        if self.data not in ("realizable", "agnostic"):
            raise UsageError("data must be realizable or agnostic")
        if not self.eps > 0:
            raise UsageError("eps must be positive")
        for name in ("d", "k", "n", "m", "trials"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise UsageError(f"{name} must be >= 1")
        if self.splits < 1 or self.c < 1:
            raise UsageError("splits and c must be >= 1")
        if self.d is not None and self.k is not None and self.k > self.d:
            raise UsageError("k must not exceed d")

    def hash(self) -> str:
        payload = {k: v for k, v in dataclasses.asdict(self).items() if k not in ("out", "format")}
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


@dataclass
class Report:
    cfg: ExperimentConfig
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def add(self, metric, value, ci=(None, None), **overrides):
        base = {
            "command": self.cfg.command, "d": self.cfg.d, "k": self.cfg.k, "n": self.cfg.n,
            "m": self.cfg.m, "eps": self.cfg.eps, "c": self.cfg.c, "trials": self.cfg.trials,
        }
        base.update(overrides)
        base.update(metric=metric, value=value, ci_low=ci[0], ci_high=ci[1],
                    seed=self.cfg.seed, config_hash=self.cfg.hash())
        self.rows.append(base)

    def check(self, name: str, ok: bool) -> None:
        self.add(f"check:{name}", int(bool(ok)))
        if not ok:
            self.failures.append(name)

    @property
    def passed(self) -> bool:
        return not self.failures

    def render(self) -> str:
        if self.cfg.format == "json":
            doc = {"config": dataclasses.asdict(self.cfg), "config_hash": self.cfg.hash(),
                   "passed": self.passed, "rows": self.rows}
            return json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n"
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in self.rows:
            w.writerow({k: _fmt(row.get(k)) for k in COLUMNS})
        return buf.getvalue()


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(type(x))


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _streams(seed: int, count: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def cmd_noise_audit(cfg: ExperimentConfig) -> Report:
    cfg.n = cfg.n or 10
    cfg.trials = cfg.trials or 1_000_000
    rep = Report(cfg)
    share_rng, proto_rng, msg_rng = _streams(cfg.seed, 3)

    support, pmf = dlap_convolution_pmf(cfg.eps, cfg.c)
    sums = sample_share_sums(cfg.n, cfg.eps, cfg.c, cfg.trials, share_rng)
    tv = tv_to_pmf(sums, support, pmf)
    rep.add("tv_share_sum_vs_oracle", tv)
    rep.check("tv_share_sum<=0.01", tv <= 0.01)

    expected_var = cfg.c * dlap_variance(cfg.eps)
    var = float(np.var(sums))
    rep.add("share_sum_variance", var)
    rep.add("share_sum_variance_expected", expected_var)
    rep.check("variance_within_5pct", abs(var - expected_var) <= 0.05 * expected_var)

    # shift ratios on a table wide enough that truncation cannot reach |i| <= 100
    radius = 100 + truncation_radius(cfg.eps)
    sup_w, pmf_w = dlap_convolution_pmf(cfg.eps, cfg.c, radius=radius)
    centre = len(sup_w) // 2
    window = pmf_w[centre - 101 : centre + 102]
    ratio = max_shift_ratio(window)
    rep.add("max_shift_ratio", ratio)
    rep.add("exp_eps", math.exp(cfg.eps))
    rep.check("shift_ratio<=exp_eps", ratio <= math.exp(cfg.eps) * (1 + 1e-9))

    counting = CountingConfig(cfg.n, cfg.eps, cfg.c, cfg.splits)
    outputs = simulate_counts(np.ones(cfg.n, dtype=np.int64), counting, cfg.trials, proto_rng)
    tv_proto = tv_to_pmf(outputs - cfg.n, support, pmf)
    rep.add("tv_protocol_noise_vs_oracle", tv_proto)
    rep.check("tv_protocol_noise<=0.01", tv_proto <= 0.01)

    mtv, floor = message_marginal_tv(counting, min(cfg.trials, 200_000), msg_rng)
    rep.add("message_marginal_tv", mtv)
    rep.add("message_marginal_tv_floor", floor)
    return rep


def default_learn_n(d: int) -> int:
    return math.ceil(SAMPLE_CONSTANT * d * 2 ** (d / 2))


def cmd_learn(cfg: ExperimentConfig) -> Report:
    cfg.d = cfg.d or 8
    cfg.k = cfg.k or cfg.d
    cfg.n = cfg.n or default_learn_n(cfg.d)
    cfg.trials = cfg.trials or 100
    rep = Report(cfg)
    lcfg = LearnerConfig(d=cfg.d, n=cfg.n, eps=cfg.eps, k=cfg.k, c=cfg.c, splits=cfg.splits)
    successes = 0
    errors = []
    gaps = []
    composed = None
    for rng in _streams(cfg.seed, cfg.trials):
        target = lcfg.hypothesis(int(rng.integers(lcfg.num_hypotheses)))
        X = uniform_points(cfg.d, cfg.n, rng)
        if cfg.data == "realizable":
            samples = Examples.labeled_by(target, X)
        else:
            samples = Examples(X, 1 - 2 * rng.integers(0, 2, size=cfg.n))
        res = learn_shuffle(samples, lcfg, rng)
        composed = res.composed_eps
        successes += res.hypothesis == target
        if cfg.d <= 20:
            errors.append(generalization_error(target, res.hypothesis))
        exact = exact_counts(samples, lcfg)
        gaps.append(int(exact.max() - exact[res.tag]))
    rate = successes / cfg.trials
    rep.add("success_rate", rate, wilson_interval(successes, cfg.trials))
    if errors:
        for qname, qv in (("p50", 50), ("p90", 90), ("max", 100)):
            rep.add(f"generalization_error_{qname}", float(np.percentile(errors, qv)))
    rep.add("count_gap_p95", float(np.percentile(gaps, 95)))
    rep.add("per_counter_eps", cfg.eps)
    rep.add("composed_eps_basic", composed)
    if cfg.min_success is not None:
        rep.check(f"success_rate>={cfg.min_success}", rate >= cfg.min_success)
    return rep


def cmd_reduction(cfg: ExperimentConfig) -> Report:
    cfg.d = cfg.d or 6
    cfg.k = cfg.k or cfg.d
    cfg.n = cfg.n or 300
    cfg.trials = cfg.trials or 400
    rep = Report(cfg)
    rcfg = ReductionConfig(n=cfg.n, d=cfg.d, eps=cfg.eps, k=cfg.k, c=cfg.c, splits=cfg.splits)
    lcfg = rcfg.learner_config
    hits = cond_hits = cond_trials = 0
    plumbing_ok = True
    for rng in _streams(cfg.seed, cfg.trials):
        target = lcfg.hypothesis(int(rng.integers(lcfg.num_hypotheses)))
        labeled = Examples.labeled_by(target, uniform_points(cfg.d, rcfg.third, rng))
        run = run_learn_par_unif(labeled, rcfg, rng)
        ok = run.hypothesis == target
        hits += ok
        if run.b_hat == target.b:
            cond_trials += 1
            cond_hits += ok
        plumbing_ok &= run.n_prime <= rcfg.third and check_pan_preconditions(run)
    lo, hi = wilson_interval(hits, cfg.trials)
    rate = hits / cfg.trials
    rep.add("recovery_rate", rate, (lo, hi))
    rep.check("recovery>=1/4-ci", rate >= 0.25 - (hi - lo) / 2)
    if cond_trials:
        clo, chi = wilson_interval(cond_hits, cond_trials)
        crate = cond_hits / cond_trials
        rep.add("recovery_rate_given_bhat_eq_b", crate, (clo, chi), trials=cond_trials)
        rep.check("conditional_recovery>=1/2-ci", crate >= 0.5 - (chi - clo) / 2)
    rep.check("pan_preconditions", plumbing_ok)
    return rep


def cmd_distinguish(cfg: ExperimentConfig) -> Report:
    cfg.d = cfg.d or 8
    cfg.k = cfg.k or cfg.d
    cfg.n = cfg.n or 150
    cfg.trials = cfg.trials or 1000
    learner = ConstantLearner.factory() if cfg.stub else None
    dcfg = DistinguisherConfig(d=cfg.d, k=cfg.k, n=cfg.n, eps=cfg.eps, c=cfg.c,
                               splits=cfg.splits, learner=learner)
    if cfg.m is not None and cfg.m != dcfg.m:
        raise UsageError(f"m is fixed by (d, k, eps) to {dcfg.m}")
    cfg.m = dcfg.m
    rep = Report(cfg)
    family = HardFamily(cfg.d, cfg.k, 0.5)
    est = None
    for rng in _streams(cfg.seed, cfg.trials):
        one = distinguishing_advantage(family, dcfg, 1, rng)
        est = one if est is None else est.merge(one)
    floor = cfg.k / (64 * cfg.d)
    rep.add("p_accept_hard", est.p_hard, wilson_interval(est.hits_hard, est.trials))
    rep.add("p_accept_uniform", est.p_uniform, wilson_interval(est.hits_uniform, est.trials))
    rep.add("advantage", est.advantage, (est.advantage - est.half_width, est.advantage + est.half_width))
    rep.add("advantage_floor", floor)
    rep.add("stub_learner", int(est.stub))
    rep.check("uniform_accept<=k/64d+ci", est.p_uniform <= floor + est.half_width_uniform)
    if not est.stub:
        rep.check("advantage>=k/64d-ci", est.advantage >= floor - est.half_width)
    return rep


def cmd_bound(cfg: ExperimentConfig) -> Report:
    cfg.d = cfg.d or 16
    cfg.trials = cfg.trials or 1
    rep = Report(cfg)
    T = 1 / 64
    all_exact = True
    for d in range(min(cfg.d_min, cfg.d), cfg.d + 1):
        k = d if cfg.k is None else min(cfg.k, d)
        val = lower_bound_value(d, k, cfg.eps, cfg.delta, T, cfg.alpha)
        rep.add("lower_bound", val, d=d, k=k)
        shape = 2 ** (d / 2) / cfg.eps
        rep.add("two_pow_half_d_over_eps", shape, d=d, k=k)
        if k == d and cfg.delta == 0 and cfg.alpha == 0.5:
            all_exact &= math.isclose(val, T * 2 * shape, rel_tol=1e-12)
    rep.check("k=d_delta=0_shape_exact", all_exact)
    return rep


HANDLERS = {
    "noise-audit": cmd_noise_audit,
    "learn": cmd_learn,
    "reduction": cmd_reduction,
    "distinguish": cmd_distinguish,
    "bound": cmd_bound,
}


def run_experiment(cfg: ExperimentConfig) -> Report:
    cfg.validate()
    return HANDLERS[cfg.command](cfg)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shuffleparity", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON file with ExperimentConfig fields")
        for f in dataclasses.fields(ExperimentConfig):
            if f.name == "command":
                continue
            flag = "--" + f.name.replace("_", "-")
            if f.type == "bool":
                s.add_argument(flag, action="store_true", default=None)
            elif f.name in ("eps", "alpha", "delta", "min_success"):
                s.add_argument(flag, type=float, default=None)
            elif f.name in ("out", "format", "data"):
                s.add_argument(flag, default=None)
            else:
                s.add_argument(flag, type=int, default=None)
    return p


def config_from_args(argv=None) -> ExperimentConfig:
    args = _parser().parse_args(argv)
    values = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                values.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
    for f in dataclasses.fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    values["command"] = args.command
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(values) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(**values)


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
        rep = run_experiment(cfg)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = rep.render()
    if cfg.out:
        try:
            with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    else:
        sys.stdout.write(text)
    for name in rep.failures:
        print(f"check failed: {name}", file=sys.stderr)
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
