"""Equivalence-class-level publishing, class versions and equijoin selectivity (eta).

A version of an EC-level class is a multiset of its class values of the
class's size in which every published value occurs at least once. Versions
are counted as multisets, so a version is identified by its frequency vector.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

from ..mondrian import EC_LEVEL, TUPLE_LEVEL, AnonymizedFragment, EquivalenceClass

ENUMERATION_LIMIT = 10**5


class EtaUndefinedError(ValueError):
    """Raised for a pair of classes that share no class value."""


def to_ec_level(fragment: AnonymizedFragment) -> AnonymizedFragment:
    """Publish each class's values once; the remaining tuples become ambiguous slots."""
    out = fragment.copy()
    for eq in out.classes:
        if eq.mode == TUPLE_LEVEL:
            eq.ec_values = frozenset(eq.class_counts)
            eq.mode = EC_LEVEL
    return out


def _compositions(total: int, parts: int) -> int:
    """Ways to write ``total`` as an ordered sum of ``parts`` positive integers."""
    if parts == 0:
        return 1 if total == 0 else 0
    if total < parts:
        return 0
    return comb(total - 1, parts - 1)


def count_versions(eq: EquivalenceClass) -> int:
    """C((|EQ| - |C|) + |C| - 1, |EQ| - |C|) by stars and bars."""
    if eq.mode != EC_LEVEL:
        raise ValueError("versions are defined for EC-level classes")
    return _count_versions(eq.size, len(eq.ec_values))


def _count_versions(size: int, n_values: int) -> int:
    slots = size - n_values
    return comb(slots + n_values - 1, slots)


def _shape(a: EquivalenceClass, b: EquivalenceClass) -> tuple[int, int, int, int, int]:
    for eq in (a, b):
        if eq.mode != EC_LEVEL:
            raise ValueError("eta is defined for EC-level classes")
    shared = len(a.ec_values & b.ec_values)
    if shared == 0:
        raise EtaUndefinedError("classes share no class value")
    return a.size, len(a.ec_values), b.size, len(b.ec_values), shared


def _shared_frequency_table(size: int, n_values: int, shared: int) -> tuple[np.ndarray, np.ndarray]:
    """Distinct frequency vectors over the shared values, with the number of versions behind each."""
    slots = size - n_values
    private = n_values - shared
    vecs, weights = [], []
    # extras placed on the shared values: compositions of e <= slots into `shared` non-negative parts
    for e in range(slots + 1):
        w = comb(slots - e + private - 1, private - 1) if private else int(e == slots)
        if w == 0:
            continue
        for bars in combinations(range(e + shared - 1), shared - 1):
            prev, extras = -1, []
            for b in bars:
                extras.append(b - prev - 1)
                prev = b
            extras.append(e + shared - 1 - prev - 1)
            vecs.append([1 + x for x in extras])
            weights.append(w)
    return np.array(vecs, dtype=np.int64), np.array(weights, dtype=object)


@lru_cache(maxsize=None)
def _enumerate_count(size_a: int, n_a: int, size_b: int, n_b: int, shared: int, k: int) -> int:
    va, wa = _shared_frequency_table(size_a, n_a, shared)
    vb, wb = _shared_frequency_table(size_b, n_b, shared)
    ok = (va @ vb.T) >= k
    total = 0
    for i in range(len(va)):
        row = ok[i]
        if row.any():
            total += wa[i] * int(sum(wb[row]))
    return total


@lru_cache(maxsize=None)
def _vector_count(size_a: int, n_a: int, size_b: int, n_b: int, shared: int, k: int) -> int:
    """Count version pairs through constrained frequency vectors (a_d, b_d) on shared values.

    a_d ranges over [1, 1 + slots_a] with sum(a_d - 1) <= slots_a, likewise
    b_d, and the pair is k-preserving when sum(a_d * b_d) >= k. Each vector
    pair is weighted by the number of ways the leftover slots can be spread
    over the non-shared values, so the total equals the number of version
    pairs. The count goes through the complement: a table indexed by
    (extra slots used in A, extra slots used in B, partial join size < k)
    accumulates the vectors that stay below k.
    """
    slots_a, slots_b = size_a - n_a, size_b - n_b
    priv_a, priv_b = n_a - shared, n_b - shared
    total = _count_versions(size_a, n_a) * _count_versions(size_b, n_b)
    if shared >= k:
        return total

    def spread(left: int, bins: int) -> int:
        # ways to distribute `left` extra tuples over `bins` values, each >= 0
        if bins == 0:
            return int(left == 0)
        return comb(left + bins - 1, bins - 1)

    # the table entries are bounded by the number of shared-value vector pairs
    bound = comb(slots_a + shared, shared) * comb(slots_b + shared, shared)
    dtype = np.int64 if bound < 2**62 else object
    below = np.zeros((slots_a + 1, slots_b + 1, k), dtype=dtype)
    below[0, 0, 0] = 1
    for _ in range(shared):
        nxt = np.zeros_like(below)
        for ea in range(min(slots_a + 1, k - 1)):
            for eb in range(slots_b + 1):
                p = (1 + ea) * (1 + eb)
                if p >= k:
                    break
                nxt[ea:, eb:, p:] += below[: slots_a + 1 - ea, : slots_b + 1 - eb, : k - p]
        below = nxt
    per_used = below.sum(axis=2).astype(object)
    wa = np.array([spread(slots_a - u, priv_a) for u in range(slots_a + 1)], dtype=object)
    wb = np.array([spread(slots_b - u, priv_b) for u in range(slots_b + 1)], dtype=object)
    return total - int(wa @ per_used @ wb)


def _counts(shape: tuple[int, int, int, int, int], k: int, method: str = "auto") -> tuple[int, int]:
    size_a, n_a, size_b, n_b, _ = shape
    total = _count_versions(size_a, n_a) * _count_versions(size_b, n_b)
    if method == "auto":
        method = "enumerate" if total <= ENUMERATION_LIMIT else "vectors"
    if method == "enumerate":
        good = _enumerate_count(*shape, k)
    elif method == "vectors":
        good = _vector_count(*shape, k)
    else:
        raise ValueError(f"unknown eta method {method!r}")
    return good, total


def eta_counts(a: EquivalenceClass, b: EquivalenceClass, k: int, method: str = "auto") -> tuple[int, int]:
    """(k-anonymity-preserving version pairs, all version pairs)."""
    return _counts(_shape(a, b), k, method)


def eta(a: EquivalenceClass, b: EquivalenceClass, k: int, method: str = "auto") -> Fraction:
    """Fraction of version pairs of ``a`` and ``b`` whose join has at least k tuples."""
    good, total = eta_counts(a, b, k, method)
    return Fraction(good, total)


@lru_cache(maxsize=None)
def eta_shape_at_least(shape: tuple[int, int, int, int, int], k: int, num: int, den: int) -> bool:
    """eta >= num/den for classes of the given (size_a, |C_a|, size_b, |C_b|, shared) shape."""
    good, total = _counts(shape, k)
    return good * den >= num * total


def eta_at_least(a: EquivalenceClass, b: EquivalenceClass, k: int, delta: Fraction) -> bool:
    return eta_shape_at_least(_shape(a, b), k, delta.numerator, delta.denominator)
