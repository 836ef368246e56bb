#!/usr/bin/env python3
"""Render information-gain curves from an experiment metrics table.

Usage: plot_gain.py <metrics.csv> <out.png>

Input columns must be exactly ``seed,cycle,assimilated_bits,
reference_bits,gain_bits``.  One polyline per seed, gain in bits against
cycle number.  Exits nonzero with a message on malformed input.
"""

import csv
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

EXPECTED = ["seed", "cycle", "assimilated_bits", "reference_bits",
            "gain_bits"]


def load_metrics(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != EXPECTED:
            raise ValueError(f"unexpected header {header}")
        series = defaultdict(list)
        for row in reader:
            if len(row) != len(EXPECTED):
                raise ValueError(f"malformed row {row}")
            series[row[0]].append((int(row[1]), float(row[4])))
    if not series:
        raise ValueError("no data rows")
    return series


def render(series, out_path):
    fig, ax = plt.subplots(figsize=(6.4, 4.0), dpi=100)
    for seed in sorted(series, key=str):
        pts = sorted(series[seed])
        cycles = [c for c, _ in pts]
        gains = [g for _, g in pts]
        if len(pts) == 1:
            ax.plot(cycles, gains, marker="o", label=f"seed {seed}")
        else:
            ax.plot(cycles, gains, label=f"seed {seed}")
    ax.axhline(0.0, color="0.7", lw=0.8, zorder=0)
    ax.set_xlabel("assimilation cycle")
    ax.set_ylabel("information gain (bits)")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def main(argv):
    if len(argv) != 3:
        print(f"usage: {argv[0]} <metrics.csv> <out.png>", file=sys.stderr)
        return 2
    try:
        series = load_metrics(argv[1])
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    render(series, argv[2])
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
