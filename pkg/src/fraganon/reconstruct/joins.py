"""Class-attribute joins between anonymized fragments and the k-anonymity check on them."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from ..mondrian import TUPLE_LEVEL, AnonymizedFragment, EquivalenceClass


@dataclass(frozen=True)
class Violation:
    fragment_a: str
    eq_a: tuple[int, ...]
    fragment_b: str
    eq_b: tuple[int, ...]
    value: float
    threshold: float
    stage: int = 1

    def row(self) -> list:
        return [self.fragment_a, ":".join(map(str, self.eq_a)), self.fragment_b,
                ":".join(map(str, self.eq_b)), self.value, self.threshold]


VIOLATION_HEADER = ["fragment_a", "eq_a", "fragment_b", "eq_b", "join_size_or_eta", "threshold"]


def eq_join_size(a: EquivalenceClass, b: EquivalenceClass) -> int:
    """Number of tuples produced by joining two classes on the class attribute."""
    if a.mode != TUPLE_LEVEL or b.mode != TUPLE_LEVEL:
        raise ValueError("join size needs tuple-level class counts")
    if len(a.class_counts) > len(b.class_counts):
        a, b = b, a
    return sum(n * b.class_counts.get(c, 0) for c, n in a.class_counts.items())


def count_matrix(fragment: AnonymizedFragment, domain: Sequence[str]) -> np.ndarray:
    """(classes x domain) matrix of per-class-value frequencies."""
    pos = {c: i for i, c in enumerate(domain)}
    m = np.zeros((len(fragment.classes), len(domain)), dtype=np.int64)
    for i, eq in enumerate(fragment.classes):
        if eq.mode != TUPLE_LEVEL:
            raise ValueError("join checks need tuple-level class counts")
        for c, n in eq.class_counts.items():
            m[i, pos[c]] = n
    return m


def _domain(fragments: Sequence[AnonymizedFragment]) -> list[str]:
    return sorted(set().union(*(f.class_domain for f in fragments)))


def join_size_matrix(f1: AnonymizedFragment, f2: AnonymizedFragment) -> np.ndarray:
    domain = _domain([f1, f2])
    return count_matrix(f1, domain) @ count_matrix(f2, domain).T


def check_non_reconstructability(f1: AnonymizedFragment, f2: AnonymizedFragment, k: int,
                                 names: tuple[str, str] = ("F1", "F2")) -> list[Violation]:
    """Every EQ pair whose class join is non-empty but smaller than k."""
    sizes = join_size_matrix(f1, f2)
    bad = np.argwhere((sizes > 0) & (sizes < k))
    return [Violation(names[0], (int(i),), names[1], (int(j),), int(sizes[i, j]), k) for i, j in bad]


def check_multiway(fragments: Sequence[AnonymizedFragment], k: int,
                   names: Sequence[str] | None = None) -> list[Violation]:
    """Check the consecutive joins I1 = F1 x F2, I2 = I1 x F3, ...

    Each intermediate relation is kept as per-cell class-count vectors; cells
    with an empty join are dropped since they contribute no tuples.
    """
    if len(fragments) < 2:
        raise ValueError("need at least 2 fragments")
    names = list(names) if names is not None else [f"F{i + 1}" for i in range(len(fragments))]
    domain = _domain(fragments)
    counts = count_matrix(fragments[0], domain)
    keys: list[tuple[int, ...]] = [(i,) for i in range(len(counts))]
    label = names[0]
    out: list[Violation] = []
    for stage, (frag, name) in enumerate(zip(fragments[1:], names[1:]), start=1):
        other = count_matrix(frag, domain)
        sizes = counts @ other.T
        for i, j in np.argwhere((sizes > 0) & (sizes < k)):
            out.append(Violation(label, keys[i], name, (int(j),), int(sizes[i, j]), k, stage))
        if stage == len(fragments) - 1:
            break
        nz = np.argwhere(sizes > 0)
        counts = counts[nz[:, 0]] * other[nz[:, 1]]
        keys = [keys[i] + (int(j),) for i, j in nz]
        label = f"I{stage}"
    return out


def check_all_subsets(fragments: Sequence[AnonymizedFragment], k: int,
                      names: Sequence[str] | None = None) -> list[Violation]:
    """Consecutive-join check for every subset of two or more fragments."""
    names = list(names) if names is not None else [f"F{i + 1}" for i in range(len(fragments))]
    out: list[Violation] = []
    for size in range(2, len(fragments) + 1):
        for subset in combinations(range(len(fragments)), size):
            out.extend(check_multiway([fragments[i] for i in subset], k, [names[i] for i in subset]))
    return out
