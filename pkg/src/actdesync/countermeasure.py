"""Random-delay (desynchronization) countermeasure.

Calibration pools unprotected timings of every activation to be protected,
finds the fastest and slowest timing clusters, and derives a normal delay
distribution from them:

* delay mean = (slowest cluster centre - fastest cluster centre), rounded up
  to one significant figure;
* delay variance = 10 ** (order_of_magnitude(max - min) - 2) s^2.

Each protected call then takes ``duration + X`` with ``X`` drawn from that
normal distribution, redrawing negative draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from decimal import ROUND_CEILING, ROUND_HALF_EVEN, Decimal
from fractions import Fraction

import numpy as np

from .errors import DataError, DegenerateDataError, DistributionError, DoubleProtectionError
from .fileio import digest_floats
from .timing import TimingTrace

MAX_REDRAWS = 1000
DEFAULT_GAP_FRACTION = 0.2
# the variance exponent sits two decades below the order of magnitude of the timing span
VARIANCE_EXPONENT_OFFSET = -2


@dataclass(frozen=True)
class DelayDistribution:
    mean: float
    variance: float
    truncation: str = "resample-if-negative"
    label: str = ""
    note: str = field(default="", compare=False)

    def __post_init__(self):
        if self.truncation != "resample-if-negative":
            raise DataError(f"unsupported truncation policy {self.truncation!r}")
        if not (math.isfinite(self.mean) and math.isfinite(self.variance)):
            raise DataError("delay parameters must be finite")
        if self.variance < 0:
            raise DataError("delay variance must be >= 0")
        # a zero-variance distribution is a constant shift (mean 0 is the identity)
        if self.variance > 0 and self.mean <= 0:
            raise DataError("delay mean must be > 0")
        if self.variance == 0 and self.mean < 0:
            raise DataError("constant delay must be >= 0")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    def _truncation(self) -> tuple[float, float]:
        alpha = -self.mean / self.std
        tail = 0.5 * math.erfc(alpha / math.sqrt(2.0))  # P(Z > alpha)
        lam = math.exp(-0.5 * alpha * alpha) / math.sqrt(2.0 * math.pi) / tail
        return alpha, lam

    @property
    def expected_mean(self) -> float:
        """Mean of the delay actually applied (normal truncated at zero)."""
        if self.variance == 0:
            return self.mean
        _, lam = self._truncation()
        return self.mean + self.std * lam

    @property
    def expected_variance(self) -> float:
        if self.variance == 0:
            return 0.0
        alpha, lam = self._truncation()
        return self.variance * (1.0 + alpha * lam - lam * lam)

    def to_dict(self) -> dict:
        return {"mean": self.mean, "variance": self.variance, "truncation": self.truncation, "label": self.label}


# Output of the calibration procedure on the built-in profiles.
REFERENCE_DELAY = DelayDistribution(6e-4, 1e-5, label="reference", note="mean 0.6 ms, variance 0.1e-4 s^2")

# Fitted to a reference protected-timing summary: mean of (protected - unprotected) means
# across the three activations, std from the min/max span of 2000 draws (~6.9 sigma).
LONG_DELAY = DelayDistribution(
    6.285e-3,
    1e-6,
    label="long",
    note="fitted to protected means 6.31/6.72/6.81 ms and ranges 2.69-10.01 ms; "
    "the calibrated parameters (0.6 ms, 1e-5 s^2) cannot produce those figures",
)

PRESETS = {"reference": REFERENCE_DELAY, "long": LONG_DELAY}


def order_of_magnitude(n: float) -> int:
    """Integer ``b`` with ``n = a * 10**b`` and ``1/sqrt(10) <= a < sqrt(10)``."""
    if not (n > 0 and math.isfinite(n)):
        raise DataError(f"order of magnitude needs a finite n > 0, got {n!r}")
    b = math.floor(math.log10(n) + 0.5)
    # log10 rounding can be off by one near the bracket edges; settle it exactly
    q = Fraction(n) ** 2
    while q < Fraction(10) ** (2 * b) / 10:
        b -= 1
    while q >= Fraction(10) ** (2 * b) * 10:
        b += 1
    return b


def round_up_sig(x: float, digits: int = 1) -> float:
    """Round ``x > 0`` up to ``digits`` significant figures."""
    if not x > 0:
        raise DataError("round_up_sig needs x > 0")
    # snap to 12 significant digits first so float noise (0.0020000000000000005) is not rounded up
    d = Decimal(repr(float(x)))
    d = d.quantize(Decimal(1).scaleb(d.adjusted() - 11), rounding=ROUND_HALF_EVEN)
    quantum = Decimal(1).scaleb(d.adjusted() - digits + 1)
    return float(d.quantize(quantum, rounding=ROUND_CEILING))


@dataclass(frozen=True)
class Cluster:
    center: float
    members: np.ndarray

    @property
    def size(self) -> int:
        return len(self.members)


def find_clusters(durations, max_clusters: int = 8, gap_fraction: float = DEFAULT_GAP_FRACTION) -> list[Cluster]:
    """Group 1-D timings into clusters, fastest first.

    The sorted values are split recursively: a segment is cut at its largest
    gap when that gap exceeds ``gap_fraction`` of the segment's own range,
    taking the cut with the largest relative gap first, until nothing qualifies
    or ``max_clusters`` is reached. The segments then seed a 1-D Lloyd (k-means)
    refinement. No randomness is involved.
    """
    v = np.asarray(durations, dtype=np.float64).ravel()
    if v.size == 0:
        raise DataError("find_clusters needs at least one duration")
    if max_clusters < 1:
        raise DataError("max_clusters must be >= 1")
    order = np.argsort(v, kind="stable")
    s = v[order]

    segments = [(0, len(s))]
    while len(segments) < max_clusters:
        best = None
        for i, (a, b) in enumerate(segments):
            span = s[b - 1] - s[a]
            if b - a < 2 or span <= 0:
                continue
            gaps = np.diff(s[a:b])
            j = int(np.argmax(gaps))
            rel = gaps[j] / span
            if rel > gap_fraction and (best is None or rel > best[0]):
                best = (rel, i, a + j + 1)
        if best is None:
            break
        _, i, cut = best
        a, b = segments[i]
        segments[i : i + 1] = [(a, cut), (cut, b)]

    starts = np.array([a for a, _ in segments])
    for _ in range(100):
        centers = np.array([s[a:b].mean() for a, b in zip(starts, np.append(starts[1:], len(s)))])
        bounds = (centers[:-1] + centers[1:]) / 2.0
        new_starts = np.concatenate(([0], np.searchsorted(s, bounds, side="right")))
        new_starts = np.unique(new_starts[new_starts < len(s)])
        if np.array_equal(new_starts, starts):
            break
        starts = new_starts
    ends = np.append(starts[1:], len(s))
    return [Cluster(float(s[a:b].mean()), np.sort(order[a:b])) for a, b in zip(starts, ends)]


@dataclass(frozen=True)
class CalibrationReport:
    t_f: float
    t_s: float
    delta_t: float
    magnitude: int
    result: DelayDistribution
    inputs_digest: str
    n_samples: int
    cluster_centers: tuple[float, ...]
    cluster_sizes: tuple[int, ...]
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "t_f": self.t_f,
            "t_s": self.t_s,
            "delta_t": self.delta_t,
            "magnitude": self.magnitude,
            "result": self.result.to_dict(),
            "inputs_digest": self.inputs_digest,
            "n_samples": self.n_samples,
            "cluster_centers": list(self.cluster_centers),
            "cluster_sizes": list(self.cluster_sizes),
            "notes": list(self.notes),
        }


CALIBRATION_NOTES = (
    "delay mean = round_up_1sf(t_s - t_f), so the mean is positive",
    "delay variance = 1e(order_of_magnitude(delta_t) - 2) s^2",
    "negative delay draws are redrawn, never clamped",
)


def calibrate(all_timings, max_clusters: int = 8, gap_fraction: float = DEFAULT_GAP_FRACTION) -> CalibrationReport:
    """Derive the delay distribution from pooled unprotected timings (seconds)."""
    t = np.asarray(all_timings, dtype=np.float64).ravel()
    if t.size < 100:
        raise DataError(f"calibration needs >= 100 pooled timings, got {t.size}")
    if not np.all(t > 0):
        raise DataError("timings must be positive")
    clusters = find_clusters(t, max_clusters=max_clusters, gap_fraction=gap_fraction)
    t_f, t_s = clusters[0].center, clusters[-1].center
    if len(clusters) < 2 and t_s == t_f:
        raise DegenerateDataError("no timing variation to hide")
    delta_t = float(t.max() - t.min())
    if delta_t <= 0:
        raise DegenerateDataError("timing span is zero")
    mag = order_of_magnitude(delta_t)
    dist = DelayDistribution(
        mean=round_up_sig(t_s - t_f, 1),
        variance=float(f"1e{mag + VARIANCE_EXPONENT_OFFSET}"),
        label="calibrated",
    )
    return CalibrationReport(
        t_f=t_f,
        t_s=t_s,
        delta_t=delta_t,
        magnitude=mag,
        result=dist,
        inputs_digest=digest_floats(t),
        n_samples=int(t.size),
        cluster_centers=tuple(c.center for c in clusters),
        cluster_sizes=tuple(c.size for c in clusters),
        notes=CALIBRATION_NOTES,
    )


def sample_delays(dist: DelayDistribution, rng: np.random.Generator, size) -> np.ndarray:
    """Draw delays from Normal(mean, variance), redrawing negatives (at most MAX_REDRAWS rounds)."""
    if dist.variance == 0:
        return np.full(size, dist.mean, dtype=np.float64)
    out = rng.normal(dist.mean, dist.std, size=size)
    neg = out < 0
    rounds = 0
    while np.any(neg):
        if rounds >= MAX_REDRAWS:
            raise DistributionError(f"delay draws still negative after {MAX_REDRAWS} redraws")
        out[neg] = rng.normal(dist.mean, dist.std, size=int(neg.sum()))
        neg = out < 0
        rounds += 1
    return out


def sample_delay(dist: DelayDistribution, rng: np.random.Generator) -> float:
    return float(sample_delays(dist, rng, 1)[0])


def protect_trace(trace: TimingTrace, dist: DelayDistribution, seed: int) -> TimingTrace:
    """Return a copy of ``trace`` with an independent delay added to every duration."""
    if trace.protected:
        raise DoubleProtectionError("trace is already protected; delays would compound")
    rng = np.random.default_rng(seed)
    delays = sample_delays(dist, rng, len(trace))
    return replace(
        trace,
        inputs=trace.inputs.copy(),
        durations=trace.durations + delays,
        protected=True,
        delay_seed=int(seed),
        delay=dist.to_dict(),
    )
