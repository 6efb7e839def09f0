#!/usr/bin/env python3
"""Writes data/rings350.csv: two noisy concentric rings plus two noise features."""
import csv
import pathlib

import numpy as np

rng = np.random.default_rng(350)
n = 350
labels = np.where(np.arange(n) % 2 == 0, 1, -1)
rng.shuffle(labels)
radius = np.where(labels > 0, 1.0, 2.0) + rng.normal(0.0, 0.3, n)
angle = rng.uniform(0.0, 2.0 * np.pi, n)
x = np.column_stack([radius * np.cos(angle), radius * np.sin(angle), rng.normal(0.0, 1.0, (n, 2))])

out = pathlib.Path(__file__).resolve().parent.parent / "data" / "rings350.csv"
with out.open("w", newline="") as f:
    w = csv.writer(f)
    w.writerow(["x1", "x2", "x3", "x4", "label"])
    for row, y in zip(x, labels):
        w.writerow([f"{v:.6f}" for v in row] + [int(y)])
