"""Command-line entry point: ``actdesync <command> [options]``.

Exit codes: 0 success, 2 configuration error, 3 data/precondition error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import DELAY_NAMES, ExperimentConfig, load_config
from .countermeasure import DelayDistribution, calibrate, protect_trace
from .errors import ActDesyncError, ConfigError, DataError, TraceIOError
from .fileio import derive_seed, file_digest, write_json
from .leakage import distinguish
from .pipelines import (
    _write_campaign,
    load_profile_set,
    provenance,
    resolve_delay,
    run_distinguisher,
    run_unprotected,
    run_overhead,
    run_repro,
    run_tvla_suite,
    summarize_ms,
)
from .timing import read_trace

log = logging.getLogger("actdesync")


def _delay_arg(text: str):
    if text in DELAY_NAMES:
        return text
    try:
        mean, var = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"delay must be one of {DELAY_NAMES} or 'MEAN,VARIANCE'") from None
    return {"mean": mean, "variance": var}


def _global_options() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="base 64-bit seed")
    g.add_argument("--config", default=argparse.SUPPRESS, help="YAML experiment config")
    g.add_argument("--out", default=argparse.SUPPRESS, help="output directory (default $ACTDESYNC_OUT or ./actdesync-out)")
    g.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    return g


def build_parser() -> argparse.ArgumentParser:
    glob = _global_options()
    p = argparse.ArgumentParser(prog="actdesync", description=__doc__, parents=[glob])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("profile", parents=[glob], help="unprotected timing campaigns and the mean/min/max table")
    s.add_argument("--n", type=int, dest="n_profile")
    s.add_argument("--kinds", help="comma-separated activations")

    s = sub.add_parser("calibrate", parents=[glob], help="derive the delay distribution from unprotected trace CSVs")
    s.add_argument("traces", help="directory of trace CSVs (all are pooled)")

    s = sub.add_parser("protect", parents=[glob], help="add random delays to trace CSVs")
    s.add_argument("traces", help="directory of unprotected trace CSVs")
    s.add_argument("--delay", type=_delay_arg, default="long", help="auto | reference | long | none | MEAN,VARIANCE")

    s = sub.add_parser("tvla", parents=[glob], help="fixed-vs-random t-tests, unprotected and protected")
    s.add_argument("--delay", type=_delay_arg, dest="tvla_delay")
    s.add_argument("--n", type=int, dest="n_tvla")
    s.add_argument("--fixed-input", type=float)
    s.add_argument("--aggregate", choices=["per-call", "per-layer"], dest="tvla_aggregate")
    s.add_argument("--layer-width", type=int)

    s = sub.add_parser("distinguish", parents=[glob], help="classify a trace, or run an accuracy sweep")
    s.add_argument("trace", nargs="?", help="trace CSV to classify; omit for a sweep")
    s.add_argument("--delay", type=_delay_arg, dest="tvla_delay", help="attacker's delay hypothesis")
    s.add_argument("--queries", type=int, dest="distinguisher_queries")
    s.add_argument("--trials", type=int, dest="distinguisher_trials")

    s = sub.add_parser("overhead", parents=[glob], help="countermeasure overhead for a dense network")
    s.add_argument("--network", help="network description YAML (default: VGG-19 classifier)")
    s.add_argument("--ranges", choices=["reference", "simulated"], dest="overhead_ranges")
    s.add_argument("--delay", type=_delay_arg, dest="protected_delay", help="delay used for --ranges simulated")

    sub.add_parser("repro", parents=[glob], help="full pipeline: tables, calibration, TVLA, distinguisher, overhead")
    return p


_OVERRIDES = (
    "seed", "out", "n_profile", "tvla_delay", "n_tvla", "fixed_input", "tvla_aggregate",
    "layer_width", "distinguisher_queries", "distinguisher_trials", "network", "overhead_ranges", "protected_delay",
)


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    changes = {k: getattr(args, k) for k in _OVERRIDES if getattr(args, k, None) is not None}
    if getattr(args, "kinds", None):
        changes["activations"] = [k.strip() for k in args.kinds.split(",") if k.strip()]
    try:
        cfg = cfg.replace(**changes)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def _read_dir(path) -> dict:
    path = Path(path)
    if not path.is_dir():
        raise TraceIOError(f"{path} is not a directory")
    files = sorted(path.glob("*.csv"))
    if not files:
        raise DataError(f"no trace CSVs in {path}")
    return {f.stem: read_trace(f) for f in files}


def _emit(doc) -> None:
    print(json.dumps(doc, indent=2, sort_keys=True))


def cmd_profile(cfg, args):
    res = run_unprotected(cfg)
    _emit({"summary_ms": res.summary, "out": str(cfg.out_dir)})


def cmd_calibrate(cfg, args):
    traces = _read_dir(args.traces)
    if any(t.protected for t in traces.values()):
        raise DataError("calibration needs unprotected traces")
    report = calibrate(np.concatenate([t.durations for t in traces.values()]))
    doc = {**report.to_dict(), "sources": sorted(traces), "provenance": provenance(cfg)}
    write_json(cfg.out_dir / "calibration.json", doc)
    _emit(doc)


def cmd_protect(cfg, args):
    traces = _read_dir(args.traces)
    dist, _ = resolve_delay(args.delay, cfg, traces)
    if dist is None:
        dist = DelayDistribution(0.0, 0.0, label="identity")
    out = {k: protect_trace(t, dist, derive_seed(cfg.seed, "protect", k)) for k, t in traces.items()}
    summary = {k: summarize_ms(t) for k, t in out.items()}
    _write_campaign(cfg.out_dir, "protected", out, summary, "protected_summary", cfg)
    _emit({"summary_ms": summary, "delay": dist.to_dict(), "out": str(cfg.out_dir)})


def cmd_tvla(cfg, args):
    suite = run_tvla_suite(cfg)
    _emit(suite.to_dict())


def cmd_distinguish(cfg, args):
    if args.trace:
        trace = read_trace(args.trace)
        hyp, _ = resolve_delay(cfg.tvla_delay, cfg, write=False) if trace.protected else (None, None)
        verdict = distinguish(trace.durations, load_profile_set(cfg), hyp)
        # identify the input by content, so the verdict does not depend on where it lives
        doc = {
            **verdict.to_dict(),
            "trace": Path(args.trace).name,
            "trace_digest": file_digest(args.trace),
            "provenance": provenance(cfg),
        }
        write_json(cfg.out_dir / "verdict.json", doc)
        _emit(doc)
    else:
        _emit(run_distinguisher(cfg))


def cmd_overhead(cfg, args):
    _emit(run_overhead(cfg).to_dict())


def cmd_repro(cfg, args):
    doc = run_repro(cfg)
    _emit({"unprotected_ms": doc["unprotected_ms"], "protected_ms": doc["protected_ms"], "out": str(cfg.out_dir)})


COMMANDS = {
    "profile": cmd_profile,
    "calibrate": cmd_calibrate,
    "protect": cmd_protect,
    "tvla": cmd_tvla,
    "distinguish": cmd_distinguish,
    "overhead": cmd_overhead,
    "repro": cmd_repro,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        COMMANDS[args.command](cfg, args)
    except ActDesyncError as exc:
        print(f"actdesync: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"actdesync: I/O error: {exc}", file=sys.stderr)
        return TraceIOError.exit_code
    return 0
