"""Seeded synthetic tables with groups of correlated numeric features."""

from __future__ import annotations

import numpy as np

from .data import AttributeSchema, Dataset

INFORMATIVE_GROUPS = 3


def _latent(rows: int, group: int, seed: int, distribution: str = "normal") -> np.ndarray:
    rng = np.random.default_rng([seed, 1, group])
    if distribution == "uniform":
        return rng.uniform(size=rows)
    if distribution == "normal":
        return rng.normal(size=rows)
    raise ValueError(f"unknown distribution {distribution!r}")


def correlated_table(rows: int, dims: int, group_size: int = 2, noise: float = 0.3, n_classes: int = 2,
                     class_skew: float = 0.0, seed: int = 0, distribution: str = "normal") -> Dataset:
    """Features come in groups sharing one latent factor; the class depends on the first few latents.

    Every column is drawn from its own seeded stream, so the first ``d``
    columns (and the class) are identical for any ``dims >= d``: dimensionality
    sweeps are nested. ``class_skew`` > 0 makes higher labels rarer.
    ``distribution`` picks normal or uniform latent factors.
    """
    cols = []
    for j in range(dims):
        base = _latent(rows, j // group_size, seed, distribution)
        cols.append(base + noise * np.random.default_rng([seed, 2, j]).normal(size=rows))
    rng = np.random.default_rng([seed, 3])
    weights = rng.normal(size=INFORMATIVE_GROUPS)
    score = sum(w * _latent(rows, g, seed, distribution) for g, w in enumerate(weights)) + 0.5 * rng.normal(size=rows)
    cuts = np.quantile(score, np.linspace(0, 1, n_classes + 1)[1:-1])
    level = np.searchsorted(cuts, score)
    if class_skew > 0:
        keep = rng.random(rows) < 1.0 / (1.0 + class_skew * level)
        level = np.where(keep, level, 0)
    labels = np.array([f"c{int(i)}" for i in level])
    schema = tuple(AttributeSchema(f"f{j}") for j in range(dims)) + (AttributeSchema("cls", "categorical", "class"),)
    return Dataset(schema, tuple(cols) + (labels,))
