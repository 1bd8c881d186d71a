"""Utility metrics: information loss, per-fragment k-NN ensemble and weighted F-measure."""

from __future__ import annotations

from collections import Counter
from typing import Mapping, Sequence

import numpy as np

from .data import Dataset
from .mondrian import EC_LEVEL, AnonymizedFragment

METRICS_HEADER = ["run_id", "k", "l", "delta", "dims", "strategy", "info_loss", "weighted_f", "distortions"]


def information_loss(fragments: Sequence[AnonymizedFragment],
                     attribute_ranges: Mapping[int, tuple[float, float]]) -> float:
    """Mean normalized generalization width over all (tuple, feature) cells.

    Constant attributes contribute zero.
    """
    if not fragments:
        raise ValueError("no fragments")
    n = fragments[0].row_count
    m = sum(len(f.fragment) for f in fragments)
    if n == 0 or m == 0:
        return 0.0
    total = 0.0
    for frag in fragments:
        span = np.array([attribute_ranges[a][1] - attribute_ranges[a][0] for a in frag.fragment.feature_indices])
        inv = np.divide(1.0, span, out=np.zeros_like(span), where=span > 0)
        for eq in frag.classes:
            total += eq.size * float(((eq.upper - eq.lower) * inv).sum())
    return total / (n * m)


class _KNNModel:
    """Training tuples of one fragment: class midpoints, expanded per class value."""

    def __init__(self, fragment: AnonymizedFragment):
        if not fragment.classes:
            raise ValueError("empty training fragment")
        lo = np.array([eq.lower for eq in fragment.classes])
        hi = np.array([eq.upper for eq in fragment.classes])
        self.low = lo.min(axis=0)
        span = hi.max(axis=0) - self.low
        self.scale = np.where(span > 0, span, 1.0)
        mids, labels = [], []
        for eq, m in zip(fragment.classes, (lo + hi) / 2):
            if eq.mode == EC_LEVEL:
                expanded = sorted(eq.ec_values)
            else:
                expanded = [c for c in sorted(eq.class_counts) for _ in range(eq.class_counts[c])]
            for c in expanded:
                mids.append(m)
                labels.append(c)
        self.points = (np.array(mids) - self.low) / self.scale
        self.labels = np.array(labels)

    def predict(self, rows: np.ndarray, neighbors: int) -> list[tuple[str, float]]:
        rows = (np.atleast_2d(np.asarray(rows, dtype=float)) - self.low) / self.scale
        n = min(neighbors, len(self.labels))
        out = []
        for r in rows:
            d = np.sqrt(((self.points - r) ** 2).sum(axis=1))
            nearest = np.argsort(d, kind="stable")[:n]
            votes = Counter(self.labels[nearest].tolist())
            label = min(votes, key=lambda c: (-votes[c], c))
            out.append((label, votes[label] / n))
        return out


def knn_predict(train: AnonymizedFragment, test_row: Sequence[float], neighbors: int = 5) -> tuple[str, float]:
    """Majority label of the nearest training tuples and the fraction voting for it.

    Distances use min-max normalized class midpoints; distance ties keep the
    training order.
    """
    return _KNNModel(train).predict(np.asarray(test_row, dtype=float), neighbors)[0]


def _combine(per_fragment: Sequence[tuple[str, float]]) -> str:
    scores: dict[str, float] = {}
    for label, score in per_fragment:
        scores[label] = scores.get(label, 0.0) + score
    return min(scores, key=lambda c: (-scores[c], c))


def _project_rows(rows: np.ndarray, fragment: AnonymizedFragment, feature_pos: Mapping[int, int]) -> np.ndarray:
    return rows[:, [feature_pos[a] for a in fragment.fragment.feature_indices]]


def ensemble_predict(fragments: Sequence[AnonymizedFragment], test_row: Mapping[int, float] | Sequence[float],
                     neighbors: int = 5) -> str:
    """Score-weighted vote of per-fragment k-NN classifiers.

    ``test_row`` maps attribute index to value (a sequence is indexed by attribute index).
    """
    votes = []
    for frag in fragments:
        x = [test_row[a] for a in frag.fragment.feature_indices]
        votes.append(knn_predict(frag, x, neighbors))
    return _combine(votes)


def predict_dataset(fragments: Sequence[AnonymizedFragment], test: Dataset, neighbors: int = 5) -> list[str]:
    rows = test.features()
    feature_pos = {a: j for j, a in enumerate(test.feature_origin())}
    per_fragment = [
        _KNNModel(frag).predict(_project_rows(rows, frag, feature_pos), neighbors) for frag in fragments
    ]
    return [_combine(votes) for votes in zip(*per_fragment)]


def weighted_f(actual: Sequence[str], predicted: Sequence[str]) -> float:
    """One-vs-rest F1 per class, weighted by the class's share of ``actual``."""
    actual = list(actual)
    predicted = list(predicted)
    if len(actual) != len(predicted) or not actual:
        raise ValueError("need equal, non-empty label sequences")
    freq = Counter(actual)
    total = 0.0
    for c, n in freq.items():
        tp = sum(1 for a, p in zip(actual, predicted) if a == c and p == c)
        fp = sum(1 for a, p in zip(actual, predicted) if a != c and p == c)
        fn = n - tp
        f1 = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
        total += n / len(actual) * f1
    return total


def weighted_f_measure(fragments: Sequence[AnonymizedFragment], test: Dataset, neighbors: int = 5) -> float:
    return weighted_f(test.labels.tolist(), predict_dataset(fragments, test, neighbors))


def distortion_count(before: Sequence[AnonymizedFragment], after: Sequence[AnonymizedFragment]) -> int:
    """Tuple-level class values changed plus EC-level class values removed."""
    if len(before) != len(after):
        raise ValueError("fragment count mismatch")
    total = 0
    for fb, fa in zip(before, after):
        if len(fb.classes) != len(fa.classes):
            raise ValueError("class count mismatch")
        for b, a in zip(fb.classes, fa.classes):
            if b.size != a.size:
                raise ValueError("class size mismatch")
            if a.mode == EC_LEVEL:
                total += len(b.class_values - a.class_values)
            else:
                total += sum(max(0, n - a.class_counts.get(c, 0)) for c, n in b.class_counts.items())
    return total
