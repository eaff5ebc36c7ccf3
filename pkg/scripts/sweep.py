"""Estimation-error statistics over a sweep of average antenna SNRs.

Example:
    python3 scripts/sweep.py --modulation qpsk --snr-db 6 10 14 --out sweep_qpsk.csv
    python3 scripts/sweep.py --modulation qam16 --snr-db 13 17 21 --compare-qpsk-sets
"""

import argparse
import csv
import sys
import time
from dataclasses import replace

from mlsnr.harness import VERTICAL, SimConfig, aggregate, reestimate, run_experiment

COLUMNS = ["snr_db", "method", "stream", "samples", "saturated", "mean_error_db", "std_error_db"]


def rows_for(snr, stats, label_suffix=""):
    for s in stats.entries.values():
        yield [snr, s.method + label_suffix, s.stream, s.samples, s.saturated, s.mean_error_db, s.std_error_db]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--modulation", default="qpsk", choices=["qpsk", "qam16", "qam64"])
    p.add_argument("--snr-db", type=float, nargs="+", default=[6.0, 10.0, 14.0])
    p.add_argument("--channels", type=int, default=200)
    p.add_argument("--vectors", type=int, default=100_000)
    p.add_argument("--methods", default="union,fullsum,maxlog,capacity,zf")
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--compare-qpsk-sets", action="store_true",
                   help="also re-estimate max-log with QPSK error sets on the same channels")
    p.add_argument("--out", help="CSV file for the table (default: stdout only)")
    args = p.parse_args(argv)

    table = []
    for snr in args.snr_db:
        cfg = SimConfig(
            modulation=args.modulation, snr_db=snr, num_channels=args.channels,
            vectors_per_channel=args.vectors, methods=tuple(args.methods.split(",")),
            seed=args.seed, workers=args.workers,
        )
        t0 = time.perf_counter()
        records, stats = run_experiment(cfg)
        table.extend(rows_for(snr, stats))
        if args.compare_qpsk_sets:
            alt_cfg = replace(cfg, methods=("maxlog",), qpsk_sets_for_higher_qam=True)
            table.extend(rows_for(snr, aggregate(reestimate(records, alt_cfg)), "@qpsk-sets"))
        print(f"{snr:g} dB: {stats.included} included, {stats.excluded} excluded, "
              f"{time.perf_counter() - t0:.0f} s", file=sys.stderr)

    print(f"{'snr':>5s} {'method':20s} {'stream':9s} {'n':>4s} {'sat':>4s} {'mean':>7s} {'std':>6s}")
    for snr, method, stream, n, sat, mean, std in table:
        print(f"{snr:5g} {method:20s} {stream:9s} {n:4d} {sat:4d} {mean:7.2f} {std:6.2f}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            w.writerows([[f"{x:.9g}" if isinstance(x, float) else x for x in row] for row in table])


if __name__ == "__main__":
    main()
