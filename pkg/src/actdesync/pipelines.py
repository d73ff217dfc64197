"""End-to-end experiment pipelines: unprotected and protected timing campaigns,
calibration, TVLA suite, distinguisher sweeps and overhead report.

Every random stream is derived from ``config.seed`` and a label, so a config
fully determines every byte written. Output layout under ``config.out_dir``::

    unprotected/<kind>.csv (+ .meta.json), unprotected/scatter_<kind>.dat, unprotected_summary.csv, unprotected_summary.json
    protected/<kind>.csv (+ .meta.json), protected/scatter_<kind>.dat, protected_summary.csv, protected_summary.json
    calibration.json                  (when a delay is auto-calibrated)
    tvla.json, tvla.dat
    distinguish.json
    overhead.json
    repro.json                        (repro only)
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .config import ExperimentConfig
from .countermeasure import PRESETS, CalibrationReport, DelayDistribution, calibrate, protect_trace
from .errors import ConfigError, TraceIOError
from .fileio import atomic_write_text, derive_seed, write_json
from .leakage import TvlaResult, accuracy_sweep, tvla_campaign
from .overhead import (
    REFERENCE_ACTIVATION_RANGE,
    REFERENCE_PROTECTED_RANGE,
    OverheadReport,
    model_from_dict,
    overhead_report,
    vgg19_classifier,
)
from .timing import TimingTrace, Uniform, capture_trace, load_profiles, reference_profiles, resolve_profile, write_trace

log = logging.getLogger(__name__)


def provenance(config: ExperimentConfig) -> dict:
    return {"tool_version": __version__, "config_digest": config.digest, "seed": config.seed}


def load_profile_set(config: ExperimentConfig) -> dict:
    profiles = reference_profiles() if config.profiles == "reference" else load_profiles(config.profiles)
    return {k: resolve_profile(k, profiles) for k in config.activations}


def summarize_ms(trace: TimingTrace) -> dict:
    s = trace.summary()
    return {"mean_ms": s["mean"] * 1e3, "min_ms": s["min"] * 1e3, "max_ms": s["max"] * 1e3, "std_ms": s["std"] * 1e3, "n": s["n"]}


def _table_csv(summary: dict) -> str:
    lines = ["activation,mean_ms,min_ms,max_ms"]
    for k, row in summary.items():
        lines.append(f"{k},{row['mean_ms']:.4f},{row['min_ms']:.4f},{row['max_ms']:.4f}")
    return "\n".join(lines) + "\n"


def _scatter(trace: TimingTrace) -> str:
    rows = [f"{x!r}\t{t * 1e3!r}" for x, t in zip(trace.inputs.tolist(), trace.durations.tolist())]
    return "# input\tduration_ms\n" + "\n".join(rows) + "\n"


def _write_campaign(out: Path, name: str, traces: dict, summary: dict, table: str, config) -> list[Path]:
    files = []
    for k, tr in traces.items():
        files.append(write_trace(tr, out / name / f"{k}.csv"))
        files.append(atomic_write_text(out / name / f"scatter_{k}.dat", _scatter(tr)))
    files.append(atomic_write_text(out / f"{table}.csv", _table_csv(summary)))
    files.append(write_json(out / f"{table}.json", {"summary": summary, "provenance": provenance(config)}))
    return files


@dataclass
class CampaignResult:
    traces: dict
    summary: dict
    files: list = field(default_factory=list)
    delay: DelayDistribution | None = None
    calibration: CalibrationReport | None = None


def capture_unprotected(config: ExperimentConfig) -> dict:
    profiles = load_profile_set(config)
    sampler = Uniform(*map(float, config.input_domain))
    return {
        str(k): capture_trace(p, config.n_profile, sampler, seed=derive_seed(config.seed, "unprotected", str(k)))
        for k, p in profiles.items()
    }


def run_unprotected(config: ExperimentConfig, write: bool = True) -> CampaignResult:
    """Unprotected uniform-input campaigns and a mean/min/max summary in ms."""
    traces = capture_unprotected(config)
    summary = {k: summarize_ms(t) for k, t in traces.items()}
    files = _write_campaign(config.out_dir, "unprotected", traces, summary, "unprotected_summary", config) if write else []
    return CampaignResult(traces, summary, files)


def resolve_delay(delay, config: ExperimentConfig, unprotected: dict | None = None, write: bool = True):
    """Turn a delay choice into ``(DelayDistribution | None, CalibrationReport | None)``."""
    if isinstance(delay, dict):
        return DelayDistribution(float(delay["mean"]), float(delay["variance"]), label="explicit"), None
    if delay == "none":
        return None, None
    if delay in PRESETS:
        return PRESETS[delay], None
    if delay != "auto":
        raise ConfigError(f"unknown delay {delay!r}")
    if unprotected is None:
        unprotected = capture_unprotected(config)
    pooled = np.concatenate([t.durations for t in unprotected.values()])
    report = calibrate(pooled)
    if write:
        write_json(config.out_dir / "calibration.json", {**report.to_dict(), "provenance": provenance(config)})
    return report.result, report


def run_protected(config: ExperimentConfig, unprotected: dict | None = None, write: bool = True) -> CampaignResult:
    """Protected campaigns for every activation with ``config.protected_delay``."""
    if unprotected is None:
        unprotected = capture_unprotected(config)
    dist, report = resolve_delay(config.protected_delay, config, unprotected, write)
    if dist is None:
        dist = DelayDistribution(0.0, 0.0, label="identity")
    traces = {k: protect_trace(t, dist, derive_seed(config.seed, "protect", k)) for k, t in unprotected.items()}
    summary = {k: summarize_ms(t) for k, t in traces.items()}
    files = _write_campaign(config.out_dir, "protected", traces, summary, "protected_summary", config) if write else []
    return CampaignResult(traces, summary, files, dist, report)


@dataclass
class TvlaSuite:
    results: list[TvlaResult]
    delay: DelayDistribution | None
    files: list = field(default_factory=list)

    @property
    def warnings(self) -> list[str]:
        return [f"{r.window}: low statistical power (n={min(r.n_fixed, r.n_random)})" for r in self.results if r.low_power]

    def to_dict(self) -> dict:
        return {
            "results": [r.to_dict() for r in self.results],
            "delay": None if self.delay is None else self.delay.to_dict(),
            "warnings": self.warnings,
        }


def run_tvla_suite(config: ExperimentConfig, unprotected: dict | None = None, write: bool = True) -> TvlaSuite:
    """Unprotected and protected fixed-vs-random campaigns per activation.

    Both campaigns of an activation share a seed and hence the fixed input.
    """
    dist, _ = resolve_delay(config.tvla_delay, config, unprotected, write)
    fixed = None if config.fixed_input == "random" else float(config.fixed_input)
    results = []
    for k, p in load_profile_set(config).items():
        seed = derive_seed(config.seed, "tvla", str(k))
        for cm, tag in ((None, "unprotected"), (dist, "protected")):
            r = tvla_campaign(
                k, p, cm, config.n_tvla, fixed, seed,
                aggregate=config.tvla_aggregate, layer_width=config.layer_width, threshold=config.threshold,
            )
            results.append(TvlaResult(**{**r.__dict__, "window": f"{k}_{tag}"}))
    suite = TvlaSuite(results, dist)
    for w in suite.warnings:
        log.warning(w)
    if write:
        out = config.out_dir
        suite.files.append(write_json(out / "tvla.json", {**suite.to_dict(), "provenance": provenance(config)}))
        dat = [f"# threshold\t{config.threshold!r}", "# label\tt_value"]
        dat += [f"{r.window}\t{r.t_statistic!r}" for r in results]
        suite.files.append(atomic_write_text(out / "tvla.dat", "\n".join(dat) + "\n"))
    return suite


def run_distinguisher(config: ExperimentConfig, unprotected: dict | None = None, write: bool = True) -> dict:
    dist, _ = resolve_delay(config.tvla_delay, config, unprotected, write)
    profiles = load_profile_set(config)
    doc = {}
    for q in sorted({config.distinguisher_queries, 1}, reverse=True):
        for cm, tag in ((None, "unprotected"), (dist, "protected")):
            seed = derive_seed(config.seed, "distinguish", tag, q)
            doc[f"{tag}_q{q}"] = accuracy_sweep(profiles, cm, q, config.distinguisher_trials, seed).to_dict()
    doc["delay"] = None if dist is None else dist.to_dict()
    if write:
        write_json(config.out_dir / "distinguish.json", {**doc, "provenance": provenance(config)})
    return doc


def load_network(source):
    if source is None:
        return vgg19_classifier()
    if isinstance(source, dict):
        return model_from_dict(source)
    try:
        doc = yaml.safe_load(Path(source).read_text())
    except OSError as exc:
        raise TraceIOError(f"cannot read network description {source}: {exc}") from exc
    return model_from_dict(doc)


def run_overhead(config: ExperimentConfig, write: bool = True, unprotected=None, protected=None) -> OverheadReport:
    """Countermeasure overhead for ``config.network``.

    ``overhead_ranges="reference"`` uses the bundled reference activation ranges;
    ``"simulated"`` uses min/max over the simulated unprotected and protected campaigns.
    """
    model = load_network(config.network)
    if config.overhead_ranges == "reference":
        base, prot = REFERENCE_ACTIVATION_RANGE, REFERENCE_PROTECTED_RANGE
    else:
        if unprotected is None:
            unprotected = capture_unprotected(config)
        if protected is None:
            protected = run_protected(config, unprotected, write=False).traces
        base = (min(t.durations.min() for t in unprotected.values()), max(t.durations.max() for t in unprotected.values()))
        prot = (min(t.durations.min() for t in protected.values()), max(t.durations.max() for t in protected.values()))
    report = overhead_report(model, base, prot)
    if write:
        write_json(config.out_dir / "overhead.json", {**report.to_dict(), "provenance": provenance(config)})
    return report


def run_repro(config: ExperimentConfig) -> dict:
    """Full pipeline: unprotected campaigns, calibration, protected campaigns,
    TVLA suite, distinguisher sweeps and overhead."""
    t0 = time.perf_counter()
    unprot = run_unprotected(config)
    # calibration is always reported in a repro run, whichever delays are configured
    _, calib = resolve_delay("auto", config, unprot.traces)
    prot = run_protected(config, unprot.traces)
    tvla = run_tvla_suite(config, unprot.traces)
    dist = run_distinguisher(config, unprot.traces)
    over = run_overhead(config, unprotected=unprot.traces, protected=prot.traces)
    doc = {
        "unprotected_ms": unprot.summary,
        "protected_ms": prot.summary,
        "protected_delay": prot.delay.to_dict(),
        "calibration": calib.to_dict(),
        "tvla": tvla.to_dict(),
        "distinguisher": dist,
        "overhead": over.to_dict(),
        "provenance": provenance(config),
    }
    write_json(config.out_dir / "repro.json", doc)
    log.info("repro finished in %.2f s", time.perf_counter() - t0)
    return doc

