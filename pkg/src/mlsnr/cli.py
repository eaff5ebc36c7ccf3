"""Command-line front end.

Subcommands:

``simulate``  run the Monte Carlo study and write records/stats/histogram CSVs
``estimate``  print every estimate for a single channel read from a text file
``sets``      dump the error-vector sets for a constellation and stream count

Configuration precedence for ``simulate``: built-in defaults, then the
``--desk`` preset, then ``--config`` (JSON), then explicit flags.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .channel import ChannelRealization, rho_from_snr_db
from .errorsets import dump_family, error_set_family
from .estimators import Method, capacity_snr_estimate, per_stream_snr, ph_error_bound
from .harness import (
    VERTICAL,
    ErrorStats,
    SimConfig,
    TrialRecord,
    run_experiment,
    sample_error,
    sample_used,
    search_report,
)
from .modulation import Kind, make_constellation

DESK_PRESET = {"num_channels": 200, "vectors_per_channel": 100_000}
RECORDS_HEADER = ["channel", "stream", "method", "empiric_snr_db", "estimate_db", "error_db", "excluded"]
STATS_HEADER = ["method", "stream", "samples", "mean_error_db", "std_error_db"]
HIST_HEADER = ["method", "bin_low_db", "bin_high_db", "count"]

# flag dest -> SimConfig field
_FLAG_FIELDS = {
    "modulation": "modulation",
    "channels": "num_channels",
    "vectors": "vectors_per_channel",
    "mt": "m_t",
    "mr": "m_r",
    "rho": "rho",
    "snr_db": "snr_db",
    "methods": "methods",
    "qpsk_sets": "qpsk_sets_for_higher_qam",
    "seed": "seed",
    "workers": "workers",
    "bin_db": "hist_bin_db",
    "range_db": "hist_range_db",
}


@dataclass
class OutputBundle:
    records: Path
    stats: Path
    hist: Path
    manifest: Path


def fmt(x) -> str:
    """Nine significant digits; NaN becomes an empty field."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.9g}"


def _methods(text: str) -> tuple[str, ...]:
    names = tuple(m.strip() for m in text.split(",") if m.strip())
    valid = {m.value for m in Method}
    bad = [m for m in names if m not in valid]
    if bad or not names:
        raise argparse.ArgumentTypeError(
            f"unknown method(s) {bad}; choose from {sorted(valid)}"
        )
    return names


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def _add_channel_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--modulation", choices=[k.value for k in Kind])
    noise = p.add_mutually_exclusive_group()
    noise.add_argument("--rho", type=float, help="noise standard deviation")
    noise.add_argument("--snr-db", type=float, help="average antenna SNR in dB (rho = 10^(-snr/20))")
    p.add_argument("--methods", type=_methods, help="comma-separated estimator names")
    p.add_argument("--qpsk-sets", action="store_true", default=None, help="estimate with QPSK error sets")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlsnr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the Monte Carlo estimation-error study")
    _add_channel_flags(sim)
    sim.add_argument("--channels", type=_positive_int)
    sim.add_argument("--vectors", type=_positive_int)
    sim.add_argument("--mt", type=_positive_int)
    sim.add_argument("--mr", type=_positive_int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--workers", type=_positive_int)
    sim.add_argument("--bin-db", type=float)
    sim.add_argument("--range-db", type=float)
    sim.add_argument("--desk", action="store_true", help="200 channels x 1e5 vectors")
    sim.add_argument("--config", type=Path, help="JSON file with SimConfig fields")
    sim.add_argument("--out", type=Path, default=Path("results"))
    sim.set_defaults(handler=_simulate, subparser=sim)

    est = sub.add_parser("estimate", help="estimate SNRs for one channel matrix")
    est.add_argument("matrix", type=Path, help="one matrix row per line, entries like 0.3-1.2i")
    _add_channel_flags(est)
    est.set_defaults(handler=_estimate, subparser=est)

    sets = sub.add_parser("sets", help="dump error-vector sets")
    sets.add_argument("--modulation", choices=[k.value for k in Kind], default="qpsk")
    sets.add_argument("--mt", type=_positive_int, default=2)
    sets.add_argument("--out", type=Path)
    sets.set_defaults(handler=_sets, subparser=sets)
    return parser


def parse_config(args: argparse.Namespace, parser: argparse.ArgumentParser | None = None) -> SimConfig:
    """Merge defaults, preset, config file and flags into a :class:`SimConfig`."""
    values: dict = {}
    if args.desk:
        values.update(DESK_PRESET)
    if args.config is not None:
        try:
            values.update(json.loads(args.config.read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            _usage(parser, f"--config: cannot read {args.config}: {exc}")
    for flag, name in _FLAG_FIELDS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = v
    if args.rho is not None:
        values["snr_db"] = None
    elif args.snr_db is not None:
        values["rho"] = None
    try:
        return SimConfig.from_dict(values)
    except (TypeError, ValueError) as exc:
        _usage(parser, str(exc))


def _usage(parser, message: str):
    if parser is None:
        raise ValueError(message)
    parser.error(message)


def _record_rows(r: TrialRecord, methods) -> list[list[str]]:
    rows = []
    m_t = len(r.stream_errors)
    per_stream = [m for m in methods if Method(m).per_stream]
    joint = [m for m in methods if not Method(m).per_stream]
    for i in range(m_t):
        for m in per_stream:
            used = sample_used(r, m, i)
            rows.append([
                str(r.channel), str(i), m,
                fmt(r.empiric_db[i]),
                fmt(r.estimates[m].per_stream_db[i]),
                fmt(sample_error(r, m, i)) if used else "",
                "0" if used else "1",
            ])
    for m in joint:
        est = r.estimates.get(m)
        used = est is not None and sample_used(r, m, VERTICAL)
        rows.append([
            str(r.channel), VERTICAL, m,
            fmt(r.joint_empiric_db),
            fmt(est.vertical_db) if est is not None else "",
            fmt(sample_error(r, m, VERTICAL)) if used else "",
            "0" if used else "1",
        ])
    return rows


def _open_csv(path: Path, header: list[str]):
    try:
        fh = path.open("w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    return fh, w


def write_outputs(
    records: list[TrialRecord],
    stats: ErrorStats,
    cfg: SimConfig,
    out: Path,
    report: dict | None = None,
) -> OutputBundle:
    """Write records.csv, stats.csv, hist.csv (and ph.csv when requested) plus manifest.json."""
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out}: {exc}") from exc
    bundle = OutputBundle(out / "records.csv", out / "stats.csv", out / "hist.csv", out / "manifest.json")

    fh, w = _open_csv(bundle.records, RECORDS_HEADER)
    with fh:
        for r in records:
            w.writerows(_record_rows(r, cfg.methods))

    fh, w = _open_csv(bundle.stats, STATS_HEADER)
    with fh:
        for s in stats.entries.values():
            w.writerow([s.method, s.stream, s.samples, fmt(s.mean_error_db), fmt(s.std_error_db)])

    fh, w = _open_csv(bundle.hist, HIST_HEADER)
    with fh:
        for s in stats.entries.values():
            for lo, hi, n in zip(s.bin_edges[:-1], s.bin_edges[1:], s.counts):
                w.writerow([f"{s.method}:{s.stream}", fmt(lo), fmt(hi), int(n)])

    if Method.PH.value in cfg.methods:
        fh, w = _open_csv(out / "ph.csv", ["channel", "perr_upper", "lower_d2", "dmin2", "upper_d2"])
        with fh:
            for r in records:
                b = r.ph
                w.writerow([r.channel, fmt(b.perr_upper), fmt(b.lower_d2), fmt(b.dmin2), fmt(b.upper_d2)])

    manifest = {
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "included_channels": stats.included,
        "excluded_channels": stats.excluded,
        "saturated_samples": {f"{s.method}:{s.stream}": s.saturated for s in stats.entries.values()},
        "searches": report or {},
    }
    bundle.manifest.write_text(json.dumps(manifest, indent=2) + "\n")
    return bundle


def load_manifest(path: Path) -> SimConfig:
    return SimConfig.from_dict(json.loads(Path(path).read_text())["config"])


def parse_matrix(text: str) -> np.ndarray:
    """Parse rows of whitespace-separated complex entries written as ``a+bi``."""
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        rows.append([complex(tok.replace("i", "j")) for tok in line.split()])
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValueError("matrix rows must be non-empty and of equal length")
    return np.array(rows, dtype=complex)


def _simulate(args, parser) -> int:
    cfg = parse_config(args, parser)
    records, stats = run_experiment(cfg)
    report = search_report(records, cfg)
    bundle = write_outputs(records, stats, cfg, args.out, report)
    print(f"channels {cfg.num_channels}: {stats.included} included, {stats.excluded} excluded (zero errors)")
    print(f"{'method':16s} {'stream':9s} {'samples':>7s} {'mean dB':>8s} {'std dB':>7s}")
    for s in stats.entries.values():
        print(f"{s.method:16s} {s.stream:9s} {s.samples:7d} {s.mean_error_db:8.3f} {s.std_error_db:7.3f}")
    print(
        f"ML searches: data {report['data_searches']} over {report['data_set_size']} candidates, "
        f"SNR {report['snr_searches']} over {report['snr_set_size']} error vectors"
    )
    if report["snr_searches_per_evaluation"] is not None:
        print(
            f"SNR searches per max-log evaluation: {report['snr_searches_per_evaluation']:g}; "
            f"{report['allocation_symbols']}-symbol allocation overhead "
            f"{report['allocation_snr_searches']}/{report['allocation_data_searches']} = "
            f"{100 * report['allocation_search_ratio']:.2f}% of searches, "
            f"{100 * report['allocation_point_ratio']:.2f}% of candidates visited"
        )
    print(f"wrote {bundle.records}, {bundle.stats}, {bundle.hist}, {bundle.manifest}")
    return 0


def _estimate(args, parser) -> int:
    try:
        h = parse_matrix(args.matrix.read_text())
    except (OSError, ValueError) as exc:
        parser.error(f"matrix: {args.matrix}: {exc}")
    if args.rho is not None:
        rho = args.rho
    elif args.snr_db is not None:
        rho = rho_from_snr_db(args.snr_db)
    else:
        parser.error("one of --rho or --snr-db is required")
    try:
        ch = ChannelRealization(h, rho)
    except ValueError as exc:
        parser.error(str(exc))
    c = make_constellation(args.modulation or "qpsk")
    family = error_set_family(Kind.QPSK if args.qpsk_sets else c.kind, ch.m_t)
    methods = args.methods or tuple(m.value for m in Method)
    print(f"channel {ch.m_r}x{ch.m_t}, rho {rho:.9g}, modulation {c.kind.value}")
    for name in methods:
        method = Method(name)
        if method is Method.PH:
            b = ph_error_bound(ch, c)
            print(
                f"{'ph':16s} perr_upper {b.perr_upper:.9g}  d2 {b.lower_d2:.9g} <= {b.dmin2:.9g} <= {b.upper_d2:.9g}"
            )
            continue
        est = capacity_snr_estimate(ch) if method is Method.CAPACITY else per_stream_snr(method, ch, c, family)
        streams = "-" if est.per_stream_db is None else " ".join(f"{x:.6f}" for x in est.per_stream_db)
        flag = "  (saturated)" if est.any_saturated else ""
        print(f"{name:16s} streams [{streams}] vertical {est.vertical_db:.6f} dB{flag}")
    return 0


def _sets(args, parser) -> int:
    text = dump_family(error_set_family(args.modulation, args.mt))
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.handler(args, args.subparser)


if __name__ == "__main__":
    raise SystemExit(main())
