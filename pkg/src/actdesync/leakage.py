"""TVLA fixed-vs-random Welch t-test and the activation-function distinguisher."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .activation import KIND_ORDER
from .countermeasure import DelayDistribution, sample_delays
from .errors import ConfigError, DataError
from .timing import TimingProfile, resolve_profile

TVLA_THRESHOLD = 4.5
# campaigns smaller than this are flagged as underpowered
LOW_POWER_N = 1000


@dataclass(frozen=True)
class TvlaResult:
    t_statistic: float
    n_fixed: int
    n_random: int
    threshold: float = TVLA_THRESHOLD
    window: str | None = None
    fixed_input: float | list | None = None
    seed: int | None = None
    protected: bool = False

    @property
    def leaks(self) -> bool:
        return abs(self.t_statistic) > self.threshold

    @property
    def low_power(self) -> bool:
        return min(self.n_fixed, self.n_random) < LOW_POWER_N

    def to_dict(self) -> dict:
        return {
            "window": self.window,
            "t_statistic": self.t_statistic,
            "abs_t": abs(self.t_statistic),
            "threshold": self.threshold,
            "leaks": self.leaks,
            "n_fixed": self.n_fixed,
            "n_random": self.n_random,
            "low_power": self.low_power,
            "fixed_input": self.fixed_input,
            "seed": self.seed,
            "protected": self.protected,
        }


def welch_t(xs, ys, threshold: float = TVLA_THRESHOLD, window: str | None = None) -> TvlaResult:
    """Welch's t for two populations, Bessel-corrected variances.

    Two constant populations give t = 0 when their values agree and an
    infinite t (signed by the mean difference) otherwise.
    """
    x = np.asarray(xs, dtype=np.float64).ravel()
    y = np.asarray(ys, dtype=np.float64).ravel()
    if x.size < 2 or y.size < 2:
        raise DataError("welch_t needs at least two samples per population")
    diff = x.mean() - y.mean()
    se2 = x.var(ddof=1) / x.size + y.var(ddof=1) / y.size
    if se2 == 0:
        t = 0.0 if diff == 0 else math.copysign(math.inf, diff)
    else:
        t = float(diff / math.sqrt(se2))
    return TvlaResult(t, int(x.size), int(y.size), threshold=threshold, window=window)


def _campaign_times(profile, xs, rng, countermeasure, layer_width):
    # xs has shape (n, layer_width); per-layer timing sums one call per neuron
    t = profile.sample_times(xs, rng)
    if countermeasure is not None:
        t = t + sample_delays(countermeasure, rng, t.shape)
    return t.sum(axis=1) if layer_width > 1 else t[:, 0]


def tvla_campaign(
    kind,
    profile: TimingProfile | None = None,
    countermeasure: DelayDistribution | None = None,
    n_per_set: int = 5000,
    fixed_input: float | None = None,
    seed: int = 0,
    aggregate: str = "per-call",
    layer_width: int = 1,
    threshold: float = TVLA_THRESHOLD,
) -> TvlaResult:
    """Fixed-vs-random timing campaign for one activation.

    With ``fixed_input=None`` the fixed input (one value per neuron for
    ``aggregate="per-layer"``) is drawn from the profile's domain using the
    campaign seed and recorded in the result. Random-set inputs are fresh
    uniform draws for every execution.
    """
    profile = resolve_profile(kind if profile is None else profile)
    if aggregate not in ("per-call", "per-layer"):
        raise ConfigError(f"aggregate must be 'per-call' or 'per-layer', got {aggregate!r}")
    width = layer_width if aggregate == "per-layer" else 1
    if width < 1 or n_per_set < 2:
        raise DataError("need layer_width >= 1 and n_per_set >= 2")
    dom = profile.input_domain
    rng = np.random.default_rng(seed)
    if fixed_input is None:
        fixed = rng.uniform(dom.lo, dom.hi, size=width)
    else:
        fixed = np.broadcast_to(np.asarray(fixed_input, dtype=np.float64), (width,)).copy()
    xs_fixed = np.broadcast_to(fixed, (n_per_set, width))
    xs_random = rng.uniform(dom.lo, dom.hi, size=(n_per_set, width))
    t_fixed = _campaign_times(profile, xs_fixed, rng, countermeasure, width)
    t_random = _campaign_times(profile, xs_random, rng, countermeasure, width)
    r = welch_t(t_fixed, t_random, threshold=threshold, window=str(profile.kind))
    rec = float(fixed[0]) if width == 1 else fixed.tolist()
    return TvlaResult(
        r.t_statistic,
        r.n_fixed,
        r.n_random,
        threshold=threshold,
        window=r.window,
        fixed_input=rec,
        seed=int(seed),
        protected=countermeasure is not None,
    )


# --- distinguisher ---------------------------------------------------------


def _candidate_order(names) -> list:
    core = [k for k in KIND_ORDER if k in names]
    extra = sorted(str(n) for n in names if n not in KIND_ORDER)
    return core + extra


@dataclass(frozen=True)
class DistinguisherVerdict:
    predicted: str
    scores: Mapping[str, float]
    n_queries: int
    tie_break: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "predicted": str(self.predicted),
            "scores": {str(k): v for k, v in self.scores.items()},
            "n_queries": self.n_queries,
            "tie_break": [str(k) for k in self.tie_break],
        }


def expected_means(profiles: Mapping, protected_hypothesis: DelayDistribution | None = None) -> dict:
    shift = 0.0 if protected_hypothesis is None else protected_hypothesis.expected_mean
    return {k: resolve_profile(k, profiles).aggregate_mean + shift for k in profiles}


def distinguish(samples, profiles: Mapping, protected_hypothesis: DelayDistribution | None = None) -> DistinguisherVerdict:
    """Guess the activation behind ``samples`` by nearest expected mean duration."""
    s = np.asarray(samples, dtype=np.float64).ravel()
    if s.size == 0:
        raise DataError("distinguish needs at least one timing sample")
    if len(profiles) < 2:
        raise ConfigError("distinguish needs at least two candidate profiles")
    order = _candidate_order(profiles)
    expect = expected_means(profiles, protected_hypothesis)
    m = float(s.mean())
    scores = {str(k): abs(m - expect[k]) for k in order}
    names = [str(k) for k in order]
    predicted = min(names, key=lambda k: scores[k])  # min() keeps the first of equal scores
    return DistinguisherVerdict(predicted, scores, int(s.size), tuple(names))


@dataclass(frozen=True)
class SweepResult:
    kinds: tuple
    confusion: np.ndarray  # rows: truth, cols: predicted
    queries_per_trial: int
    trials: int
    seed: int
    protected: bool

    @property
    def per_kind_accuracy(self) -> dict:
        return {str(k): float(self.confusion[i, i] / self.confusion[i].sum()) for i, k in enumerate(self.kinds)}

    @property
    def overall_accuracy(self) -> float:
        return float(np.trace(self.confusion) / self.confusion.sum())

    def to_dict(self) -> dict:
        return {
            "kinds": [str(k) for k in self.kinds],
            "confusion": self.confusion.tolist(),
            "per_kind_accuracy": self.per_kind_accuracy,
            "overall_accuracy": self.overall_accuracy,
            "queries_per_trial": self.queries_per_trial,
            "trials": self.trials,
            "seed": self.seed,
            "protected": self.protected,
        }


def accuracy_sweep(
    profiles: Mapping,
    countermeasure: DelayDistribution | None = None,
    queries_per_trial: int = 10,
    trials: int = 1000,
    seed: int = 0,
) -> SweepResult:
    """Run ``trials`` distinguisher attempts per activation with known ground truth.

    Each trial draws ``queries_per_trial`` uniform-input timings of the true
    activation (delayed when ``countermeasure`` is given) and classifies
    their mean; the attacker knows the delay distribution.
    """
    if trials < 1 or queries_per_trial < 1:
        raise DataError("trials and queries_per_trial must be >= 1")
    if len(profiles) < 2:
        raise ConfigError("accuracy_sweep needs at least two candidate profiles")
    order = _candidate_order(profiles)
    expect = np.array([expected_means(profiles, countermeasure)[k] for k in order])
    rng = np.random.default_rng(seed)
    confusion = np.zeros((len(order), len(order)), dtype=np.int64)
    for i, k in enumerate(order):
        p = resolve_profile(k, profiles)
        xs = rng.uniform(p.input_domain.lo, p.input_domain.hi, size=(trials, queries_per_trial))
        t = p.sample_times(xs, rng)
        if countermeasure is not None:
            t = t + sample_delays(countermeasure, rng, t.shape)
        dist = np.abs(t.mean(axis=1)[:, None] - expect[None, :])
        pred = np.argmin(dist, axis=1)  # first index wins ties, i.e. canonical order
        confusion[i] = np.bincount(pred, minlength=len(order))
    return SweepResult(tuple(order), confusion, queries_per_trial, trials, int(seed), countermeasure is not None)
