#!/usr/bin/env python3
"""Render a posterior heatmap with true agent positions from a snapshot.

Usage: plot_snapshot.py <snapshot.csv> <out.png>

Input columns must be exactly ``x,y,species,lambda,delta,true_count``
with species 0 = prey and 1 = predator.  Background colour encodes the
posterior mean occupancy per cell: the red channel carries prey, the
blue channel predators, with intensity min(1, mean / 1.0) so a mean of
one agent saturates the channel.  Dots mark every true agent position,
dark red for prey and dark blue for predators, offset so both species in
one cell stay visible.  Exits nonzero with a message on malformed input.
"""

import csv
import sys

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt

EXPECTED = ["x", "y", "species", "lambda", "delta", "true_count"]
PREY, PREDATOR = 0, 1


def load_snapshot(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != EXPECTED:
            raise ValueError(f"unexpected header {header}")
        rows = []
        for row in reader:
            if len(row) != len(EXPECTED):
                raise ValueError(f"malformed row {row}")
            rows.append((int(row[0]), int(row[1]), int(row[2]),
                         float(row[3]), int(row[4]), int(row[5])))
    if not rows:
        raise ValueError("no data rows")
    width = max(r[0] for r in rows) + 1
    height = max(r[1] for r in rows) + 1
    mean = np.zeros((height, width, 2))
    count = np.zeros((height, width, 2), dtype=int)
    for x, y, species, lam, delta, true_count in rows:
        if species not in (PREY, PREDATOR):
            raise ValueError(f"unknown species {species}")
        mean[y, x, species] = lam + delta
        count[y, x, species] = true_count
    return mean, count


def render(mean, count, out_path):
    height, width = mean.shape[:2]
    img = np.ones((height, width, 3))
    intensity = np.minimum(1.0, mean)
    img[:, :, 1] -= 0.85 * np.maximum(intensity[:, :, PREY],
                                      intensity[:, :, PREDATOR])
    img[:, :, 2] -= 0.85 * intensity[:, :, PREY]
    img[:, :, 0] -= 0.85 * intensity[:, :, PREDATOR]
    side = max(4.0, 0.3 * max(width, height))
    fig, ax = plt.subplots(figsize=(side, side * height / width), dpi=100)
    ax.imshow(img, origin="lower", extent=(-0.5, width - 0.5,
                                           -0.5, height - 0.5),
              interpolation="nearest")
    for species, color, dx in ((PREY, "darkred", -0.15),
                               (PREDATOR, "darkblue", 0.15)):
        ys, xs = np.nonzero(count[:, :, species])
        if len(xs):
            ax.scatter(xs + dx, ys, s=18, c=color, marker="o",
                       edgecolors="white", linewidths=0.4)
    ax.set_xticks(range(0, width, max(1, width // 8)))
    ax.set_yticks(range(0, height, max(1, height // 8)))
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def main(argv):
    if len(argv) != 3:
        print(f"usage: {argv[0]} <snapshot.csv> <out.png>", file=sys.stderr)
        return 2
    try:
        mean, count = load_snapshot(argv[1])
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    render(mean, count, argv[2])
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
