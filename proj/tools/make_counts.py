#!/usr/bin/env python3
"""Writes data/counts300.svm: sparse word-count-like features with a rating label.

Ratings depend on a handful of "positive" and "negative" features, so a few
rank-one kernels carry the signal and the rest are noise.
"""
import pathlib

import numpy as np

rng = np.random.default_rng(300)
n, d = 300, 40
rates = rng.uniform(0.05, 0.6, d)
x = rng.poisson(rates, (n, d)).astype(float)
weight = np.zeros(d)
weight[[0, 3, 7]] = [1.0, 0.8, 0.6]
weight[[1, 5]] = [-1.0, -0.7]
rating = x @ weight + rng.normal(0.0, 0.3, n)

out = pathlib.Path(__file__).resolve().parent.parent / "data" / "counts300.svm"
with out.open("w") as f:
    for row, y in zip(x, rating):
        feats = " ".join(f"{j + 1}:{int(v)}" for j, v in enumerate(row) if v != 0)
        f.write(f"{y:.4f} {feats}\n".rstrip() + "\n")
