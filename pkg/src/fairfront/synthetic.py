"""Seeded synthetic distributions and datasets for tests and demos."""

from __future__ import annotations

import csv

import numpy as np

from .dist import JointModel


def random_instance(seed: int, A: int = 2, C: int = 2, D: int = 4, concentration: float = 0.7) -> JointModel:
    """Random ``mu`` (uniform Dirichlet) and ``phi`` rows (Dirichlet(concentration))."""
    rng = np.random.default_rng(seed)
    mu = rng.dirichlet(np.ones(A * C))
    phi = rng.dirichlet(np.full(D, concentration), size=A * C)
    return JointModel.from_arrays(mu, phi, A, C)


def independent_instance(seed: int, A: int = 2, C: int = 2, D: int = 4) -> JointModel:
    """Instance whose features carry no information about ``(S, Y)``."""
    rng = np.random.default_rng(seed)
    mu = rng.dirichlet(np.ones(A * C))
    row = rng.dirichlet(np.ones(D))
    return JointModel.from_arrays(mu, np.tile(row, (A * C, 1)), A, C)


def write_informative_csv(path, n: int = 20000, seed: int = 0) -> None:
    """Two groups, binary label, three 4-level features that track the label.

    Columns: ``group`` (``g0``/``g1``), ``label`` (``0``/``1``), ``f1``..``f3``
    (categorical) and ``age`` (numeric, for binning).
    """
    rng = np.random.default_rng(seed)
    s = (rng.random(n) < 0.55).astype(int)  # 1 -> g1
    y = (rng.random(n) < np.where(s == 0, 0.3, 0.45)).astype(int)
    probs = {0: [0.45, 0.3, 0.15, 0.1], 1: [0.1, 0.15, 0.3, 0.45]}
    feats = np.empty((n, 3), dtype=int)
    for j in range(3):
        p = np.array([probs[v] for v in y])
        u = rng.random(n)[:, None]
        feats[:, j] = (u > np.cumsum(p, axis=1)).sum(axis=1)
    age = np.round(rng.normal(38 + 6 * y, 10, n)).clip(17, 90).astype(int)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["group", "label", "f1", "f2", "f3", "age"])
        for i in range(n):
            w.writerow([f"g{s[i]}", y[i], *(f"c{v}" for v in feats[i]), age[i]])


INFORMATIVE_SCHEMA = {
    "group_column": "group",
    "label_column": "label",
    "features": [
        {"name": "f1"},
        {"name": "f2"},
        {"name": "f3"},
        {"name": "age", "bins": {"edges": [0, 30, 45, 60]}},
    ],
    "missing_token": "",
}
