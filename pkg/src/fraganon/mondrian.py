"""Strict median Mondrian: multidimensional k-anonymity and its distinct l-diversity variant.

Partitions are split at the median of one feature; rows equal to the median go
left. A partition becomes an equivalence class when no feature admits an
allowable split. The published box of a class is the tight min/max envelope of
its members.
"""

from __future__ import annotations

import copy
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .data import Dataset, Fragment

TUPLE_LEVEL = "tuple"
EC_LEVEL = "ec"


@dataclass(frozen=True)
class GeneralizedValue:
    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"lower {self.lower} > upper {self.upper}")

    @property
    def is_point(self) -> bool:
        return self.lower == self.upper

    def contains(self, v: float) -> bool:
        return self.lower <= v <= self.upper


@dataclass(eq=False)
class EquivalenceClass:
    """Generalized QI box plus the class values of its members.

    Under tuple-level publishing ``class_counts`` is the published multiset.
    Under EC-level publishing only ``ec_values`` (a set) and ``size`` are
    published; ``class_counts`` then holds the pre-conversion frequencies,
    which are private and used only to pick which value to drop.
    """

    lower: np.ndarray
    upper: np.ndarray
    class_counts: dict[str, int]
    size: int
    row_ids: tuple[int, ...] = ()
    mode: str = TUPLE_LEVEL
    ec_values: frozenset[str] | None = None
    segment_id: int | None = None

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.lower.shape != self.upper.shape or np.any(self.lower > self.upper):
            raise ValueError("invalid box")
        if self.mode == TUPLE_LEVEL:
            self.class_counts = {c: n for c, n in self.class_counts.items() if n > 0}
            if sum(self.class_counts.values()) != self.size:
                raise ValueError("class counts do not sum to the class size")
        elif self.mode == EC_LEVEL:
            if self.ec_values is None:
                raise ValueError("EC-level class needs ec_values")
            self.ec_values = frozenset(self.ec_values)
            if not self.ec_values or len(self.ec_values) > self.size:
                raise ValueError("EC-level class values must be non-empty and at most the class size")
        else:
            raise ValueError(f"unknown publish mode {self.mode!r}")

    @classmethod
    def from_rows(cls, values: np.ndarray, labels: Sequence[str], row_ids: Iterable[int], **kw) -> "EquivalenceClass":
        values = np.asarray(values, dtype=float)
        counts = Counter(str(c) for c in labels)
        return cls(values.min(axis=0), values.max(axis=0), dict(counts), len(labels),
                   tuple(int(r) for r in row_ids), **kw)

    @property
    def box(self) -> tuple[GeneralizedValue, ...]:
        return tuple(GeneralizedValue(float(a), float(b)) for a, b in zip(self.lower, self.upper))

    @property
    def class_values(self) -> frozenset[str]:
        if self.mode == EC_LEVEL:
            return self.ec_values
        return frozenset(self.class_counts)

    @property
    def ambiguous_slots(self) -> int:
        if self.mode == EC_LEVEL:
            return self.size - len(self.ec_values)
        return 0

    def majority(self) -> str:
        """Most frequent class value; lexicographically smallest on ties."""
        return min(self.class_counts, key=lambda c: (-self.class_counts[c], c))

    def contains(self, point: Sequence[float]) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(self.lower <= p) and np.all(p <= self.upper))

    def copy(self) -> "EquivalenceClass":
        return copy.deepcopy(self)


@dataclass(eq=False)
class AnonymizedFragment:
    fragment: Fragment
    k: int
    classes: list[EquivalenceClass] = field(default_factory=list)
    l: int | None = None

    @property
    def mode(self) -> str:
        modes = {eq.mode for eq in self.classes}
        return modes.pop() if len(modes) == 1 else TUPLE_LEVEL

    @property
    def row_count(self) -> int:
        return sum(eq.size for eq in self.classes)

    @property
    def class_domain(self) -> set[str]:
        return {c for eq in self.classes for c in eq.class_values}

    def copy(self) -> "AnonymizedFragment":
        return copy.deepcopy(self)

    def locate(self, point: Sequence[float]) -> list[int]:
        """Indices of the classes whose box contains ``point``."""
        p = np.asarray(point, dtype=float)
        return [i for i, eq in enumerate(self.classes) if eq.contains(p)]


def _split(values: np.ndarray, labels: np.ndarray, rows: np.ndarray, order: Sequence[int],
           admissible) -> tuple[np.ndarray, np.ndarray] | None:
    for d in order:
        col = values[rows, d]
        median = np.median(col)
        left_mask = col <= median
        if left_mask.all() or not left_mask.any():
            continue
        left, right = rows[left_mask], rows[~left_mask]
        if admissible(left) and admissible(right):
            return left, right
    return None


def _partition(values: np.ndarray, labels: np.ndarray, scale: np.ndarray, admissible) -> list[np.ndarray]:
    leaves = []
    stack = [np.arange(len(values))]
    while stack:
        rows = stack.pop()
        sub = values[rows]
        width = (sub.max(axis=0) - sub.min(axis=0)) / scale
        # widest normalized dimension first, lowest index on ties; zero-width dims cannot split
        order = [d for d in sorted(range(values.shape[1]), key=lambda d: (-width[d], d)) if width[d] > 0]
        parts = _split(values, labels, rows, order, admissible)
        if parts is None:
            leaves.append(rows)
        else:
            stack.append(parts[1])
            stack.append(parts[0])
    return leaves


def _build(data: Dataset, k: int, admissible, l: int | None = None, segment_id: int | None = None) -> AnonymizedFragment:
    values = data.features()
    labels = data.labels
    if values.shape[1] == 0:
        raise ValueError("dataset has no feature attributes")
    span = values.max(axis=0) - values.min(axis=0)
    scale = np.where(span > 0, span, 1.0)
    leaves = _partition(values, labels, scale, admissible)
    classes = [
        EquivalenceClass.from_rows(values[rows], labels[rows], data.row_ids[rows], segment_id=segment_id)
        for rows in leaves
    ]
    classes.sort(key=lambda eq: (tuple(eq.lower), tuple(eq.upper), eq.row_ids))
    return AnonymizedFragment(Fragment(data.feature_origin()), k, classes, l)


def mondrian_k_anonymize(data: Dataset, k: int) -> AnonymizedFragment:
    """Median Mondrian k-anonymization of all feature columns of ``data``."""
    if k < 1:
        raise ValueError("k must be positive")
    if data.row_count < k:
        raise ValueError(f"{data.row_count} rows cannot be {k}-anonymized")
    return _build(data, k, lambda rows: len(rows) >= k)


def mondrian_l_diverse(data: Dataset, k: int, l: int, required_classes: Iterable[str] | None = None,
                       segment_id: int | None = None) -> AnonymizedFragment:
    """Mondrian with a distinct l-diversity split guard.

    With ``required_classes`` a split is also rejected unless both sides keep
    every one of those class values.
    """
    if l < 1:
        raise ValueError("l must be positive")
    if data.row_count < k:
        raise ValueError(f"{data.row_count} rows cannot be {k}-anonymized")
    labels = data.labels
    distinct = len(set(labels.tolist()))
    if distinct < l:
        raise ValueError(f"only {distinct} distinct class values, cannot reach l={l}")
    required = frozenset(required_classes) if required_classes is not None else None
    if required is not None and not required <= set(labels.tolist()):
        raise ValueError("required class values are not all present in the data")

    def admissible(rows):
        if len(rows) < k:
            return False
        present = set(labels[rows].tolist())
        if len(present) < l:
            return False
        return required is None or required <= present

    return _build(data, k, admissible, l=l, segment_id=segment_id)
