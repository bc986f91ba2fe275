"""Benchmark summary table: measured edge times against the four published
reference values, with signed deltas."""

from __future__ import annotations

import argparse
import csv
import math
import sys
from typing import List

REFERENCE = [
    ("eta=5 sigma=inf", 5.0, math.inf, 413.0),
    ("eta=5 sigma=1.5", 5.0, 1.5, 417.0),
    ("eta=5 sigma=0.5", 5.0, 0.5, 431.6),
    ("eta=inf", math.inf, math.inf, 455.9),
]


class WrongRowCount(ValueError):
    pass


def read_records(path) -> List[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return rows


def render_table1(records_csv, out_path) -> List[float]:
    """Write a markdown table mirroring the four benchmark conditions;
    returns the signed deltas against the reference values."""
    rows = read_records(records_csv)
    if len(rows) != 4:
        raise WrongRowCount(f"expected exactly 4 condition rows, got {len(rows)}")
    by_key = {(float(r["eta"]), float(r["sigma"])): float(r["eet_time"])
              for r in rows}
    lines = [
        "| condition | EET | reference | delta |",
        "|---|---:|---:|---:|",
    ]
    deltas = []
    for label, eta, sigma, ref in REFERENCE:
        key = (eta, sigma)
        if key not in by_key:
            raise WrongRowCount(f"missing condition row for {label}")
        val = by_key[key]
        delta = val - ref
        deltas.append(delta)
        lines.append(f"| {label} | {val:.1f} | {ref:.1f} | {delta:+.1f} |")
    with open(out_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return deltas


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="render the benchmark summary table")
    ap.add_argument("records_csv")
    ap.add_argument("out_path")
    args = ap.parse_args(argv)
    try:
        deltas = render_table1(args.records_csv, args.out_path)
    except (WrongRowCount, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print("deltas: " + "  ".join(f"{d:+.2f}" for d in deltas))
    return 0


if __name__ == "__main__":
    sys.exit(main())
