"""Fragmentation-based distinct l-diversity.

Rows are first clustered top-down into segments (decision-tree style median
cuts chosen by Gini gain), each segment is cut into per-fragment chunks, and
every chunk is anonymized so that each of its classes holds the segment's full
set of class values. Chunks of one fragment are then merged and published
together.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import Dataset, Fragmentation, project
from .infotheory import DEFAULT_BINS, build_mi_matrix, construct_fragments_recursive
from .mondrian import AnonymizedFragment, EquivalenceClass, mondrian_l_diverse
from .reconstruct.joins import eq_join_size


@dataclass(frozen=True)
class Segment:
    row_ids: tuple[int, ...]
    diversity_level: int
    class_values: frozenset[str] = frozenset()

    def __len__(self):
        return len(self.row_ids)


def _gini(labels: np.ndarray) -> float:
    if len(labels) == 0:
        return 0.0
    _, counts = np.unique(labels, return_counts=True)
    p = counts / counts.sum()
    return float(1.0 - (p * p).sum())


def segment(dataset: Dataset, k: int, l: int) -> list[Segment]:
    """Top-down binary clustering with the k / l stop rule.

    A segment is split at the (feature, median) cut with the largest weighted
    Gini reduction among cuts leaving both halves with at least k rows and l
    distinct class values; it is final when no such cut exists.
    """
    labels = dataset.labels
    if dataset.row_count < k:
        raise ValueError(f"{dataset.row_count} rows, need at least k={k}")
    if len(set(labels.tolist())) < l:
        raise ValueError(f"fewer than l={l} distinct class values")
    values = dataset.features()

    def ok(rows):
        return len(rows) >= k and len(set(labels[rows].tolist())) >= l

    done: list[np.ndarray] = []
    stack = [np.arange(dataset.row_count)]
    while stack:
        rows = stack.pop()
        parent = _gini(labels[rows])
        best, best_gain = None, -np.inf
        for d in range(values.shape[1]):
            col = values[rows, d]
            mask = col <= np.median(col)
            if mask.all() or not mask.any():
                continue
            left, right = rows[mask], rows[~mask]
            if not (ok(left) and ok(right)):
                continue
            n = len(rows)
            gain = parent - (len(left) * _gini(labels[left]) + len(right) * _gini(labels[right])) / n
            if gain > best_gain + 1e-12:
                best, best_gain = (left, right), gain
        if best is None:
            done.append(rows)
        else:
            stack.append(best[1])
            stack.append(best[0])

    segments = []
    for rows in sorted(done, key=lambda r: int(r.min())):
        present = frozenset(labels[rows].tolist())
        segments.append(Segment(tuple(int(r) for r in dataset.row_ids[rows]), len(present), present))
    return segments


@dataclass
class LDiversityResult:
    fragmentation: Fragmentation
    segments: list[Segment]
    fragments: list[AnonymizedFragment]
    # chunks[s][f]: anonymized chunk of segment s on fragment f
    chunks: list[list[AnonymizedFragment]] = field(default_factory=list)


def ldiverse_pipeline(dataset: Dataset, k: int, l: int, bins: int = DEFAULT_BINS, parts: int = 2,
                      seed: int = 0, fragmentation: Fragmentation | None = None) -> LDiversityResult:
    if len(dataset.feature_indices) < 2 and parts > 1:
        raise ValueError("need at least 2 features")
    if fragmentation is None:
        mi = build_mi_matrix(dataset, bins)
        fragmentation = construct_fragments_recursive(mi, parts)
    segments = segment(dataset, k, l)
    position = {int(r): i for i, r in enumerate(dataset.row_ids)}

    chunks: list[list[AnonymizedFragment]] = []
    for s, seg in enumerate(segments):
        part = dataset.take([position[r] for r in seg.row_ids])
        row = []
        for frag in fragmentation:
            chunk = project(part, frag)
            if chunk.row_count < k:
                raise AssertionError(f"segment {s} chunk has {chunk.row_count} < k rows")
            row.append(mondrian_l_diverse(chunk, k, seg.diversity_level, seg.class_values, segment_id=s))
        chunks.append(row)

    rng = np.random.default_rng(seed)
    published = []
    for f, frag in enumerate(fragmentation):
        classes = [eq.copy() for row in chunks for eq in row[f].classes]
        order = rng.permutation(len(classes))
        published.append(AnonymizedFragment(chunks[0][f].fragment, k, [classes[i] for i in order], l))
    return LDiversityResult(fragmentation, segments, published, chunks)


@dataclass(frozen=True)
class LDivFailure:
    eq_a: int
    eq_b: int
    join_size: int
    distinct: int
    expected: int


def verify_ldiv_join(chunk_a: Sequence[EquivalenceClass] | AnonymizedFragment,
                     chunk_b: Sequence[EquivalenceClass] | AnonymizedFragment,
                     k: int, level: int | None = None) -> list[LDivFailure]:
    """Check every class pair across two same-segment chunks: the join has at
    least k tuples and exactly ``level`` distinct class values.

    ``level`` defaults to the number of distinct values across both chunks.
    """
    a = chunk_a.classes if isinstance(chunk_a, AnonymizedFragment) else list(chunk_a)
    b = chunk_b.classes if isinstance(chunk_b, AnonymizedFragment) else list(chunk_b)
    if level is None:
        level = len(set().union(*(eq.class_values for eq in a + b)))
    out = []
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            size = eq_join_size(x, y)
            distinct = sum(1 for c, n in x.class_counts.items() if n and y.class_counts.get(c, 0))
            if size < k or distinct != level:
                out.append(LDivFailure(i, j, size, distinct, level))
    return out


def group_by_segment(fragment: AnonymizedFragment) -> dict:
    """Classes grouped by segment id when known, otherwise by class-value set."""
    groups: dict = {}
    for eq in fragment.classes:
        key = ("segment", eq.segment_id) if eq.segment_id is not None else ("values", tuple(sorted(eq.class_values)))
        groups.setdefault(key, []).append(eq)
    return groups


def verify_pipeline(fragments: Sequence[AnonymizedFragment], k: int) -> list[tuple[tuple, int, int, LDivFailure]]:
    """Run the join check on every same-group chunk pair across fragments."""
    grouped = [group_by_segment(f) for f in fragments]
    out = []
    for x in range(len(fragments)):
        for y in range(x + 1, len(fragments)):
            for key, eqs in grouped[x].items():
                other = grouped[y].get(key, [])
                for fail in verify_ldiv_join(eqs, other, k):
                    out.append((key, x, y, fail))
    return out


def diversity_counts(fragment: AnonymizedFragment) -> Counter:
    return Counter(len(eq.class_values) for eq in fragment.classes)
