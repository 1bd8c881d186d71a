"""Shared builders for small hand-made tables and classes."""

from __future__ import annotations

import sys

import numpy as np
import pytest

from fraganon.data import AttributeSchema, Dataset, Fragment
from fraganon.mondrian import EC_LEVEL, AnonymizedFragment, EquivalenceClass


def make_dataset(features, labels, names=None) -> Dataset:
    features = np.asarray(features, dtype=float)
    if features.ndim == 1:
        features = features[:, None]
    names = names or [f"a{j}" for j in range(features.shape[1])]
    schema = tuple(AttributeSchema(n) for n in names) + (AttributeSchema("cls", "categorical", "class"),)
    return Dataset(schema, tuple(features[:, j] for j in range(features.shape[1])) + (np.asarray(labels, dtype=str),))


def tuple_eq(counts: dict, lower=(0.0,), upper=(0.0,)) -> EquivalenceClass:
    return EquivalenceClass(np.array(lower), np.array(upper), dict(counts), sum(counts.values()))


def ec_eq(values, size: int, counts: dict | None = None) -> EquivalenceClass:
    return EquivalenceClass(np.zeros(1), np.zeros(1), dict(counts or {}), size, mode=EC_LEVEL,
                            ec_values=frozenset(values))


def fragment_of(classes, attrs=(0,), k: int = 2) -> AnonymizedFragment:
    return AnonymizedFragment(Fragment(tuple(attrs)), k, list(classes))


@pytest.fixture
def small_table():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(120, 4))
    x[:, 1] = x[:, 0] + 0.1 * rng.normal(size=120)
    labels = np.where(x[:, 0] + x[:, 2] > 0, "yes", "no")
    return make_dataset(x, labels)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(results):
        status, title, info = results[number]
        terminalreporter.write_line(f"[{status}] criterion {number:2d}: {title} ({info})")
