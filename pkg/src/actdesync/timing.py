"""Cluster-structured timing model of activation functions.

A :class:`TimingProfile` partitions the input domain into regions; every input
in a region takes the same code path and therefore lands in the same timing
cluster. Within a cluster the duration is ``mean + u`` with ``u`` uniform on
``[-spread, +spread]``. Sampling is vectorised over numpy arrays and seeded
explicitly, so a campaign is fully determined by ``(profile, n, sampler, seed)``.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import math
import re
import statistics
import time
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import yaml

from .activation import ActivationKind, evaluate
from .errors import ConfigError, DataError, DomainError, ProfileIntegrityError, TraceIOError
from .fileio import atomic_write_text

PROFILE_SCHEMA_VERSION = 1

_INTERVAL_RE = re.compile(r"^\s*([\[\(])\s*([^,\s]+)\s*,\s*([^\]\)\s]+)\s*([\]\)])\s*$")


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ProfileIntegrityError(f"interval bounds out of order: {self}")

    @classmethod
    def parse(cls, text: str) -> "Interval":
        m = _INTERVAL_RE.match(text)
        if m is None:
            raise ConfigError(f"cannot parse interval {text!r}")
        return cls(float(m.group(2)), float(m.group(3)), m.group(1) == "[", m.group(4) == "]")

    def __str__(self) -> str:
        return f"{'[' if self.lo_closed else '('}{self.lo!r}, {self.hi!r}{']' if self.hi_closed else ')'}"

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, x):
        x = np.asarray(x, dtype=np.float64)
        lo_ok = x >= self.lo if self.lo_closed else x > self.lo
        hi_ok = x <= self.hi if self.hi_closed else x < self.hi
        return lo_ok & hi_ok

    def covers(self, other: "Interval") -> bool:
        lo_ok = other.lo > self.lo or (other.lo == self.lo and (self.lo_closed or not other.lo_closed))
        hi_ok = other.hi < self.hi or (other.hi == self.hi and (self.hi_closed or not other.hi_closed))
        return lo_ok and hi_ok


@dataclass(frozen=True)
class TimingCluster:
    region: tuple[Interval, ...]
    mean: float
    spread: float

    def __post_init__(self):
        if not self.region:
            raise ProfileIntegrityError("cluster has an empty input region")
        if not (self.mean > 0 and 0 <= self.spread < self.mean):
            raise ProfileIntegrityError(
                f"cluster needs mean > 0 and 0 <= spread < mean (mean={self.mean}, spread={self.spread})"
            )

    @property
    def width(self) -> float:
        return sum(iv.length for iv in self.region)

    @property
    def bounds(self) -> tuple[float, float]:
        return self.mean - self.spread, self.mean + self.spread

    def contains(self, x):
        x = np.asarray(x, dtype=np.float64)
        hit = np.zeros(x.shape, dtype=bool)
        for iv in self.region:
            hit |= iv.contains(x)
        return hit


@dataclass(frozen=True)
class TimingProfile:
    kind: str
    clusters: tuple[TimingCluster, ...]
    input_domain: Interval = Interval(-2.0, 2.0)
    provenance: str = ""
    profile_id: str = ""
    reference: Mapping[str, float] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "clusters", tuple(self.clusters))
        if not self.clusters:
            raise ProfileIntegrityError("profile needs at least one cluster")
        if not self.profile_id:
            object.__setattr__(self, "profile_id", self.kind)
        self._check_partition()

    def _check_partition(self):
        # intervals must chain end-to-start with exactly one side closed at each joint
        ivs = sorted((iv for c in self.clusters for iv in c.region), key=lambda iv: (iv.lo, not iv.lo_closed))
        dom = self.input_domain
        first, last = ivs[0], ivs[-1]
        if first.lo != dom.lo or (dom.lo_closed and not first.lo_closed):
            raise ProfileIntegrityError(f"{self.kind}: regions do not cover the lower domain end {dom}")
        if last.hi != dom.hi or (dom.hi_closed and not last.hi_closed):
            raise ProfileIntegrityError(f"{self.kind}: regions do not cover the upper domain end {dom}")
        for a, b in zip(ivs, ivs[1:]):
            if a.hi != b.lo or a.hi_closed == b.lo_closed:
                raise ProfileIntegrityError(f"{self.kind}: regions {a} and {b} overlap or leave a gap")

    @property
    def weights(self) -> np.ndarray:
        """Fraction of the input domain covered by each cluster."""
        return np.array([c.width for c in self.clusters]) / self.input_domain.length

    @property
    def aggregate_mean(self) -> float:
        """Expected duration under uniform inputs on the domain."""
        return float(sum(w * c.mean for w, c in zip(self.weights, self.clusters)))

    @property
    def aggregate_variance(self) -> float:
        # mixture of uniforms: within-cluster s^2/3 plus between-cluster spread of means
        m = self.aggregate_mean
        return float(
            sum(w * (c.spread**2 / 3.0 + (c.mean - m) ** 2) for w, c in zip(self.weights, self.clusters))
        )

    @property
    def aggregate_min(self) -> float:
        return min(c.mean - c.spread for c in self.clusters)

    @property
    def aggregate_max(self) -> float:
        return max(c.mean + c.spread for c in self.clusters)

    def cluster_index(self, x) -> np.ndarray:
        """Index of the cluster containing each input.

        Raises DomainError for inputs outside the domain and
        ProfileIntegrityError for inputs that fall in no cluster.
        """
        x = np.asarray(x, dtype=np.float64)
        if not np.all(self.input_domain.contains(x)):
            bad = x[~self.input_domain.contains(x)].ravel()[0]
            raise DomainError(f"input {bad!r} outside {self.kind} domain {self.input_domain}")
        idx = np.full(x.shape, -1, dtype=np.intp)
        for i, c in enumerate(self.clusters):
            idx[c.contains(x) & (idx < 0)] = i
        if np.any(idx < 0):
            bad = x[idx < 0].ravel()[0]
            raise ProfileIntegrityError(f"input {bad!r} is in no {self.kind} cluster")
        return idx

    def sample_times(self, x, rng: np.random.Generator) -> np.ndarray:
        idx = self.cluster_index(x)
        means = np.array([c.mean for c in self.clusters])
        spreads = np.array([c.spread for c in self.clusters])
        u = rng.uniform(-1.0, 1.0, size=idx.shape)
        return means[idx] + spreads[idx] * u


def sample_time(profile: TimingProfile, x: float, rng: np.random.Generator) -> float:
    """Draw one duration (seconds) for input ``x``."""
    return float(profile.sample_times(np.float64(x), rng))


# --- profile files ---------------------------------------------------------


def profile_to_dict(p: TimingProfile) -> dict:
    d = {
        "schema_version": PROFILE_SCHEMA_VERSION,
        "kind": p.kind,
        "profile_id": p.profile_id,
        "domain": str(p.input_domain),
        "provenance": p.provenance,
        "clusters": [
            {"region": [str(iv) for iv in c.region], "mean": c.mean, "spread": c.spread} for c in p.clusters
        ],
    }
    if p.reference is not None:
        d["reference"] = dict(p.reference)
    return d


_PROFILE_KEYS = {"schema_version", "kind", "profile_id", "domain", "provenance", "clusters", "reference"}


def profile_from_dict(d: Mapping) -> TimingProfile:
    unknown = set(d) - _PROFILE_KEYS
    if unknown:
        raise ConfigError(f"unknown profile keys: {sorted(unknown)}")
    if d.get("schema_version", PROFILE_SCHEMA_VERSION) != PROFILE_SCHEMA_VERSION:
        raise ConfigError(f"unsupported profile schema_version {d.get('schema_version')!r}")
    try:
        clusters = tuple(
            TimingCluster(
                region=tuple(Interval.parse(s) for s in c["region"]),
                mean=float(c["mean"]),
                spread=float(c["spread"]),
            )
            for c in d["clusters"]
        )
        kind = str(d["kind"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed profile document: {exc}") from None
    return TimingProfile(
        kind=kind,
        clusters=clusters,
        input_domain=Interval.parse(d.get("domain", "[-2, 2]")),
        provenance=str(d.get("provenance", "")),
        profile_id=str(d.get("profile_id", kind)),
        reference=d.get("reference"),
    )


def parse_profiles(text: str) -> dict[str, TimingProfile]:
    out: dict[str, TimingProfile] = {}
    for doc in yaml.safe_load_all(text):
        if doc is None:
            continue
        p = profile_from_dict(doc)
        key = ActivationKind(p.kind) if p.kind in ActivationKind._value2member_map_ else p.kind
        out[key] = p
    return out


def load_profiles(path: str | Path) -> dict[str, TimingProfile]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise TraceIOError(f"cannot read profile file {path}: {exc}") from exc
    return parse_profiles(text)


def dump_profiles(profiles: Iterable[TimingProfile]) -> str:
    return yaml.safe_dump_all([profile_to_dict(p) for p in profiles], sort_keys=False)


@functools.lru_cache(maxsize=1)
def _packaged_profiles() -> dict:
    text = resources.files("actdesync").joinpath("data/reference_profiles.yaml").read_text()
    return parse_profiles(text)


def reference_profiles() -> dict[ActivationKind, TimingProfile]:
    """Built-in ReLU/sigmoid/tanh profiles fitted to reference timing statistics."""
    return dict(_packaged_profiles())


def resolve_profile(kind, profiles: Mapping | None = None) -> TimingProfile:
    if isinstance(kind, TimingProfile):
        return kind
    profiles = reference_profiles() if profiles is None else profiles
    key = ActivationKind(kind) if str(kind) in ActivationKind._value2member_map_ else str(kind)
    try:
        return profiles[key]
    except KeyError:
        raise ConfigError(f"no timing profile registered for {kind!r}") from None


# --- input samplers --------------------------------------------------------


@dataclass(frozen=True)
class Uniform:
    lo: float = -2.0
    hi: float = 2.0

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=n)

    def __str__(self) -> str:
        return f"uniform[{self.lo!r},{self.hi!r}]"


@dataclass(frozen=True)
class Fixed:
    value: float

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.full(n, self.value, dtype=np.float64)

    def __str__(self) -> str:
        return f"fixed({self.value!r})"


InputSampler = Uniform | Fixed

_SAMPLER_RE = re.compile(r"^\s*(uniform)\s*\[\s*([^,\]]+)\s*,\s*([^\]]+)\s*\]\s*$|^\s*(fixed)\s*\(\s*([^)]+)\s*\)\s*$")


def parse_sampler(text: str | InputSampler) -> InputSampler:
    """Parse ``uniform[lo,hi]`` or ``fixed(x)``."""
    if isinstance(text, (Uniform, Fixed)):
        return text
    m = _SAMPLER_RE.match(str(text))
    try:
        if m and m.group(1):
            lo, hi = float(m.group(2)), float(m.group(3))
            if not lo < hi:
                raise ValueError
            return Uniform(lo, hi)
        if m and m.group(4):
            v = float(m.group(5))
            if not math.isfinite(v):
                raise ValueError
            return Fixed(v)
    except ValueError:
        pass
    raise ConfigError(f"invalid input sampler descriptor {text!r}")


# --- traces ----------------------------------------------------------------


@dataclass
class TimingTrace:
    inputs: np.ndarray
    durations: np.ndarray
    kind: str
    protected: bool = False
    seed: int = 0
    profile_id: str = ""
    sampler: str = ""
    delay_seed: int | None = None
    delay: dict | None = None

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.durations = np.asarray(self.durations, dtype=np.float64)
        if self.inputs.shape != self.durations.shape or self.inputs.ndim != 1:
            raise DataError("trace inputs and durations must be 1-D and equally long")
        if np.any(~(self.durations > 0)):
            raise DataError("trace durations must be positive")

    def __len__(self) -> int:
        return len(self.durations)

    @property
    def entries(self) -> list[tuple[float, float]]:
        return list(zip(self.inputs.tolist(), self.durations.tolist()))

    def summary(self) -> dict:
        return {
            "mean": float(self.durations.mean()),
            "min": float(self.durations.min()),
            "max": float(self.durations.max()),
            "std": float(self.durations.std(ddof=1)) if len(self) > 1 else 0.0,
            "n": len(self),
        }

    def metadata(self) -> dict:
        return {
            "kind": str(self.kind),
            "protected": self.protected,
            "seed": self.seed,
            "profile_id": self.profile_id,
            "campaign": {"sampler": self.sampler, "n": len(self)},
            "delay_seed": self.delay_seed,
            "delay": self.delay,
        }


def capture_trace(
    kind,
    n: int,
    input_sampler: str | InputSampler = "uniform[-2,2]",
    seed: int = 0,
    profiles: Mapping | None = None,
) -> TimingTrace:
    """Simulate ``n`` independent (input, duration) observations."""
    profile = resolve_profile(kind, profiles)
    sampler = parse_sampler(input_sampler)
    if n < 1:
        raise DataError("campaign size must be >= 1")
    dom = profile.input_domain
    if isinstance(sampler, Uniform):
        if not dom.covers(Interval(sampler.lo, sampler.hi, True, False)):
            raise ConfigError(f"{sampler} exceeds {profile.kind} domain {dom}")
    elif not bool(dom.contains(sampler.value)):
        raise DomainError(f"fixed input {sampler.value!r} outside {profile.kind} domain {dom}")
    rng = np.random.default_rng(seed)
    xs = sampler.draw(rng, n)
    ts = profile.sample_times(xs, rng)
    return TimingTrace(xs, ts, kind=profile.kind, seed=int(seed), profile_id=profile.profile_id, sampler=str(sampler))


def trace_to_csv(trace: TimingTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["input", "duration_s"])
    for x, t in zip(trace.inputs.tolist(), trace.durations.tolist()):
        w.writerow([repr(x), repr(t)])
    return buf.getvalue()


def write_trace(trace: TimingTrace, path: str | Path) -> Path:
    """Write ``path`` (CSV) plus a ``.meta.json`` sidecar; returns the CSV path."""
    path = Path(path)
    atomic_write_text(path, trace_to_csv(trace))
    atomic_write_text(sidecar_path(path), json.dumps(trace.metadata(), indent=2, sort_keys=True) + "\n")
    return path


def sidecar_path(path: Path) -> Path:
    return path.with_name(path.stem + ".meta.json")


def read_trace(path: str | Path) -> TimingTrace:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
        meta_file = sidecar_path(path)
        meta = json.loads(meta_file.read_text()) if meta_file.exists() else {}
    except OSError as exc:
        raise TraceIOError(f"cannot read trace {path}: {exc}") from exc
    if not rows or rows[0] != ["input", "duration_s"]:
        raise DataError(f"{path}: expected header 'input,duration_s'")
    try:
        data = np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=np.float64).reshape(-1, 2)
    except ValueError as exc:
        raise DataError(f"{path}: malformed row ({exc})") from None
    return TimingTrace(
        data[:, 0],
        data[:, 1],
        kind=meta.get("kind", path.stem),
        protected=bool(meta.get("protected", False)),
        seed=int(meta.get("seed", 0)),
        profile_id=meta.get("profile_id", ""),
        sampler=meta.get("campaign", {}).get("sampler", ""),
        delay_seed=meta.get("delay_seed"),
        delay=meta.get("delay"),
    )


# --- host clock backend ----------------------------------------------------


@dataclass(frozen=True)
class HostTiming:
    seconds: float
    repetitions: int
    inner_loops: int
    resolution_warning: str | None = None


def measure_host_time(kind, x: float, repetitions: int, inner_loops: int = 64) -> HostTiming:
    """Median wall-clock time of one activation evaluation on this machine.

    Each repetition times ``inner_loops`` back-to-back calls with
    ``time.perf_counter_ns`` and divides. The number depends on the host,
    interpreter and load; treat it as qualitative only.
    """
    if repetitions < 1 or inner_loops < 1:
        raise DataError("repetitions and inner_loops must be >= 1")
    kind = ActivationKind.parse(kind)
    evaluate(kind, x)  # validates input, warms up
    res_ns = time.get_clock_info("perf_counter").resolution * 1e9
    batches = []
    for _ in range(repetitions):
        t0 = time.perf_counter_ns()
        for _ in range(inner_loops):
            evaluate(kind, x)
        batches.append(max(time.perf_counter_ns() - t0, 1))
    med = statistics.median(batches)
    note = None
    if med < 10 * res_ns:
        note = f"batch time {med:.0f} ns is within 10x of clock resolution {res_ns:.0f} ns"
        warnings.warn(note, RuntimeWarning, stacklevel=2)
    return HostTiming(med / inner_loops * 1e-9, repetitions, inner_loops, note)
