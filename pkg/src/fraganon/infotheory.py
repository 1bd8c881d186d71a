"""Mutual information estimation and FMRMR-driven fragment construction.

Numeric attributes are discretized with equal-width binning before any
entropy is computed; categorical codes are used as-is. All quantities are in
bits.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import Dataset, Fragment, Fragmentation

log = logging.getLogger(__name__)

DEFAULT_BINS = 10


def discretize(column, bins: int = DEFAULT_BINS, categorical: bool = False) -> np.ndarray:
    """Map a column to small non-negative integer codes."""
    col = np.asarray(column)
    if col.size == 0:
        raise ValueError("empty column")
    if bins < 1:
        raise ValueError("bins must be positive")
    if categorical or col.dtype.kind in "USO":
        _, codes = np.unique(col, return_inverse=True)
        return codes.ravel()
    col = col.astype(float)
    lo, hi = col.min(), col.max()
    if hi == lo:
        return np.zeros(len(col), dtype=np.int64)
    codes = np.floor((col - lo) / (hi - lo) * bins).astype(np.int64)
    return np.clip(codes, 0, bins - 1)


def _entropy_of_counts(counts: np.ndarray) -> float:
    # sorted so that permuted inputs give bit-identical sums
    counts = np.sort(counts[counts > 0])
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum()) + 0.0


def _joint_codes(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a * (int(b.max()) + 1) + b


def entropy(column, bins: int = DEFAULT_BINS, categorical: bool = False) -> float:
    codes = discretize(column, bins, categorical)
    return _entropy_of_counts(np.bincount(codes))


def mutual_information(x, y, bins: int = DEFAULT_BINS, x_categorical: bool = False,
                       y_categorical: bool = False) -> float:
    """I(X;Y) = H(X) + H(Y) - H(X,Y) over the binned joint histogram."""
    x = np.asarray(x)
    y = np.asarray(y)
    if len(x) == 0 or len(y) == 0:
        raise ValueError("empty input")
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    cx = discretize(x, bins, x_categorical)
    cy = discretize(y, bins, y_categorical)
    return _mi_codes(cx, cy)


def _mi_codes(cx: np.ndarray, cy: np.ndarray) -> float:
    hx = _entropy_of_counts(np.bincount(cx))
    hy = _entropy_of_counts(np.bincount(cy))
    _, joint = np.unique(_joint_codes(cx, cy), return_counts=True)
    hxy = _entropy_of_counts(joint)
    return max(0.0, (hx + hy) - hxy)


@dataclass(frozen=True, eq=False)
class MIMatrix:
    """Pairwise mutual information among the features and the class.

    ``attributes`` lists the source attribute index of each row/column;
    ``class_index`` is the matrix position of the class attribute.
    """

    values: np.ndarray
    attributes: tuple[int, ...]
    class_index: int
    names: tuple[str, ...] = ()

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] != len(self.attributes):
            raise ValueError("MI matrix must be square and match the attribute list")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "attributes", tuple(int(a) for a in self.attributes))
        if not self.names:
            object.__setattr__(self, "names", tuple(str(a) for a in self.attributes))
        object.__setattr__(self, "_pos", {a: i for i, a in enumerate(self.attributes)})

    @classmethod
    def from_array(cls, values, class_index: int | None = None) -> "MIMatrix":
        """Matrix whose attribute ids are its positions; class defaults to the last one."""
        values = np.asarray(values, dtype=float)
        n = values.shape[0]
        return cls(values, tuple(range(n)), n - 1 if class_index is None else class_index)

    @property
    def dim(self) -> int:
        return len(self.attributes)

    @property
    def class_attribute(self) -> int:
        return self.attributes[self.class_index]

    @property
    def feature_ids(self) -> list[int]:
        return [a for i, a in enumerate(self.attributes) if i != self.class_index]

    def mi(self, a: int, b: int) -> float:
        return float(self.values[self._pos[a], self._pos[b]])

    def relevance(self, a: int) -> float:
        return float(self.values[self.class_index, self._pos[a]])

    def submatrix(self, features: Sequence[int]) -> "MIMatrix":
        keep = [self._pos[a] for a in features] + [self.class_index]
        return MIMatrix(
            self.values[np.ix_(keep, keep)],
            tuple(self.attributes[i] for i in keep),
            len(keep) - 1,
            tuple(self.names[i] for i in keep),
        )

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([""] + list(self.names))
            for name, row in zip(self.names, self.values):
                w.writerow([name] + [repr(float(v)) for v in row])


def build_mi_matrix(dataset: Dataset, bins: int = DEFAULT_BINS) -> MIMatrix:
    features = dataset.feature_indices
    if not features:
        raise ValueError("dataset has no feature attributes")
    order = features + [dataset.class_index]
    codes = []
    for i in order:
        attr = dataset.schema[i]
        categorical = attr.kind == "categorical" or attr.role == "class"
        codes.append(discretize(dataset.columns[i], bins, categorical))
    n = len(order)
    values = np.zeros((n, n))
    for i in range(n):
        values[i, i] = _entropy_of_counts(np.bincount(codes[i]))
        for j in range(i + 1, n):
            values[i, j] = values[j, i] = _mi_codes(codes[i], codes[j])
    log.debug("built %dx%d MI matrix with %d bins", n, n, bins)
    return MIMatrix(values, tuple(dataset.origin[i] for i in order), n - 1,
                    tuple(dataset.names[i] for i in order))


def _fragment_score(features: Sequence[int], mi: MIMatrix) -> float:
    if not features:
        raise ValueError("empty fragment")
    pos = [mi._pos[a] for a in features]
    n = len(pos)
    relevance = mi.values[mi.class_index, pos].sum() / n
    redundancy = mi.values[np.ix_(pos, pos)].sum() / (n * n)
    return float(relevance - redundancy)


def fmrmr(fragmentation: Fragmentation, mi: MIMatrix) -> float:
    """Sum over fragments of (mean class relevance - mean pairwise redundancy).

    The redundancy term averages over all ordered pairs of the fragment's
    features, diagonal (entropies) included.
    """
    return float(sum(_fragment_score(f.feature_indices, mi) for f in fragmentation))


def fmrmr_contribution(attr: int, target: int, fragmentation: Fragmentation, mi: MIMatrix) -> float:
    """Change in FMRMR when ``attr`` joins fragment ``target``."""
    if attr in fragmentation.attributes:
        raise ValueError(f"attribute {attr} is already assigned")
    current = fragmentation.fragments[target].feature_indices
    return _fragment_score(current + (attr,), mi) - _fragment_score(current, mi)


def seed_pair(mi: MIMatrix) -> tuple[int, int]:
    """The two features with maximal mutual information (lowest index pair on ties)."""
    feats = sorted(mi.feature_ids)
    best, best_val = None, -np.inf
    for i, a in enumerate(feats):
        for b in feats[i + 1:]:
            v = mi.mi(a, b)
            if v > best_val:
                best, best_val = (a, b), v
    return best


def construct_fragments(mi: MIMatrix) -> Fragmentation:
    """Greedy binary fragmentation maximizing FMRMR.

    The max-MI feature pair seeds the two fragments, then the unassigned
    feature with the largest FMRMR contribution is placed, one at a time.
    Contributions may be negative, so the running maximum starts at -inf.
    """
    feats = sorted(mi.feature_ids)
    if len(feats) < 2:
        raise ValueError("need at least 2 features to fragment")
    s1, s2 = seed_pair(mi)
    frag = Fragmentation((Fragment((s1,)), Fragment((s2,))))
    remaining = [a for a in feats if a not in (s1, s2)]
    while remaining:
        best = None
        best_val = -np.inf
        for a in remaining:
            for t in range(2):
                c = fmrmr_contribution(a, t, frag, mi)
                if c > best_val:
                    best, best_val = (a, t), c
        frag = frag.assign(*best)
        remaining.remove(best[0])
    log.debug("fragmentation %s, FMRMR %.4f", [f.feature_indices for f in frag], fmrmr(frag, mi))
    return frag


def construct_fragments_recursive(mi: MIMatrix, parts: int = 2) -> Fragmentation:
    """Split the largest fragment in two until ``parts`` fragments exist."""
    n = len(mi.feature_ids)
    if parts < 1:
        raise ValueError("parts must be at least 1")
    if parts > n:
        raise ValueError(f"cannot make {parts} fragments from {n} features")
    if parts == 1:
        return Fragmentation((Fragment(tuple(sorted(mi.feature_ids))),))
    frags = list(construct_fragments(mi).fragments)
    while len(frags) < parts:
        i = max(range(len(frags)), key=lambda j: (len(frags[j]), -j))
        sub = construct_fragments(mi.submatrix(frags[i].feature_indices))
        frags[i:i + 1] = list(sub.fragments)
    return Fragmentation(tuple(frags))
