import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraganon.reconstruct import (
    check_all_subsets,
    check_multiway,
    check_non_reconstructability,
    eq_join_size,
    join_size_matrix,
)
from fraganon.reconstruct.joins import VIOLATION_HEADER

from conftest import fragment_of, tuple_eq


def test_join_size_hand_case():
    a = tuple_eq({"x": 2, "y": 2})
    b = tuple_eq({"x": 1, "y": 3})
    assert eq_join_size(a, b) == 2 * 1 + 2 * 3 == 8
    assert eq_join_size(a, tuple_eq({"z": 4})) == 0


def test_violation_thresholds():
    f1 = fragment_of([tuple_eq({"x": 2, "y": 2})])
    f2 = fragment_of([tuple_eq({"x": 1, "y": 3})])
    assert check_non_reconstructability(f1, f2, 5) == []
    (v,) = check_non_reconstructability(f1, f2, 10)
    assert (v.fragment_a, v.eq_a, v.fragment_b, v.eq_b, v.value, v.threshold) == ("F1", (0,), "F2", (0,), 8, 10)
    assert len(v.row()) == len(VIOLATION_HEADER)


def _materialized_join(fragments):
    """Expand every class into tuples and join on the class value."""
    tuples = [[(i, c) for i, eq in enumerate(f.classes) for c, n in eq.class_counts.items() for _ in range(n)]
              for f in fragments]
    out = {}
    for combo in itertools.product(*tuples):
        if len({c for _, c in combo}) == 1:
            key = tuple(i for i, _ in combo)
            out[key] = out.get(key, 0) + 1
    return out


def _random_fragment(rng, n_classes, values="abc"):
    classes = []
    for _ in range(n_classes):
        size = int(rng.integers(1, 5))
        counts = {}
        for c in rng.choice(list(values), size):
            counts[str(c)] = counts.get(str(c), 0) + 1
        classes.append(tuple_eq(counts))
    return fragment_of(classes)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 12))
def test_pairwise_matrix_matches_materialized_join(seed, k):
    rng = np.random.default_rng(seed)
    f1, f2 = _random_fragment(rng, 3), _random_fragment(rng, 3)
    sizes = join_size_matrix(f1, f2)
    brute = _materialized_join([f1, f2])
    for i in range(3):
        for j in range(3):
            assert sizes[i, j] == brute.get((i, j), 0) == eq_join_size(f1.classes[i], f2.classes[j])
    expected = sorted((i, j) for (i, j), n in brute.items() if n < k)
    got = sorted(v.eq_a + v.eq_b for v in check_non_reconstructability(f1, f2, k))
    assert got == expected


def test_three_way_join_catches_stage_two_violation():
    k = 5
    f1 = fragment_of([tuple_eq({"x": 1, "y": 4, "z": 4})])
    f2 = fragment_of([tuple_eq({"x": 1, "y": 4, "w": 4})])
    f3 = fragment_of([tuple_eq({"x": 1, "z": 4, "w": 4})])
    for a, b in itertools.combinations([f1, f2, f3], 2):
        assert check_non_reconstructability(a, b, k) == []
    (v,) = check_multiway([f1, f2, f3], k)
    assert v.stage == 2 and v.fragment_a == "I1" and v.eq_a == (0, 0) and v.fragment_b == "F3" and v.value == 1
    assert len(check_all_subsets([f1, f2, f3], k)) == 1


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 30))
def test_multiway_final_stage_matches_materialized_join(seed, k):
    rng = np.random.default_rng(seed)
    frags = [_random_fragment(rng, 2, "ab") for _ in range(3)]
    brute = _materialized_join(frags)
    final = sorted((v.eq_a + v.eq_b, v.value) for v in check_multiway(frags, k) if v.stage == 2)
    assert final == sorted((key, n) for key, n in brute.items() if n < k)


def test_multiway_needs_two_fragments():
    with pytest.raises(ValueError):
        check_multiway([fragment_of([tuple_eq({"a": 2})])], 2)
