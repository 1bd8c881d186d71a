import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraganon.mondrian import EquivalenceClass, GeneralizedValue, mondrian_k_anonymize, mondrian_l_diverse
from fraganon.synthetic import correlated_table

from conftest import make_dataset


def _boxes(frag):
    return [(eq.lower.tolist(), eq.upper.tolist()) for eq in frag.classes]


def test_hand_case_two_clusters():
    frag = mondrian_k_anonymize(make_dataset([0, 1, 10, 11], list("abab")), 2)
    assert _boxes(frag) == [([0.0], [1.0]), ([10.0], [11.0])]
    assert [eq.row_ids for eq in frag.classes] == [(0, 1), (2, 3)]


def test_median_rows_go_left():
    # median of [1, 2, 2, 2, 3, 4] is 2: the three 2s stay with the 1
    frag = mondrian_k_anonymize(make_dataset([1, 2, 2, 2, 3, 4], list("aaaaaa")), 2)
    assert _boxes(frag) == [([1.0], [2.0]), ([3.0], [4.0])]


def test_no_split_when_sides_too_small():
    frag = mondrian_k_anonymize(make_dataset([0, 1, 10], list("abc")), 2)
    assert len(frag.classes) == 1
    assert frag.classes[0].class_counts == {"a": 1, "b": 1, "c": 1}


def test_widest_dimension_is_split_first():
    x = [[0, 0], [1, 100], [2, 0], [3, 100]]
    frag = mondrian_k_anonymize(make_dataset(x, list("aaaa")), 2)
    # both dims span their range fully; tie on normalized width -> dim 0
    assert _boxes(frag) == [([0.0, 0.0], [1.0, 100.0]), ([2.0, 0.0], [3.0, 100.0])]


def test_l_diverse_hand_cases():
    frag = mondrian_l_diverse(make_dataset([0, 1, 10, 11], list("abab")), 2, 2)
    assert _boxes(frag) == [([0.0], [1.0]), ([10.0], [11.0])]
    assert all(len(eq.class_values) == 2 for eq in frag.classes)
    pure = mondrian_l_diverse(make_dataset([0, 1, 10, 11], list("aabb")), 2, 2)
    assert len(pure.classes) == 1


def test_l_diverse_required_classes():
    d = make_dataset([0, 1, 2, 10, 11, 12], list("abcabc"))
    assert len(mondrian_l_diverse(d, 2, 2).classes) == 2
    assert len(mondrian_l_diverse(d, 2, 2, required_classes={"a", "b", "c"}).classes) == 2
    assert len(mondrian_l_diverse(make_dataset([0, 1, 2, 10, 11, 12], list("abcabb")), 2, 2,
                                  required_classes={"a", "b", "c"}).classes) == 1


def test_errors():
    with pytest.raises(ValueError):
        mondrian_k_anonymize(make_dataset([0, 1], list("ab")), 3)
    with pytest.raises(ValueError):
        mondrian_l_diverse(make_dataset([0, 1, 2], list("aaa")), 2, 2)


def test_class_helpers():
    eq = EquivalenceClass.from_rows(np.array([[0.0, 5.0], [2.0, 3.0]]), ["b", "a"], [4, 9])
    assert eq.box == (GeneralizedValue(0.0, 2.0), GeneralizedValue(3.0, 5.0))
    assert eq.majority() == "a"
    assert eq.contains([1.0, 4.0]) and not eq.contains([3.0, 4.0])
    with pytest.raises(ValueError):
        GeneralizedValue(2.0, 1.0)
    with pytest.raises(ValueError):
        EquivalenceClass(np.zeros(1), np.zeros(1), {"a": 1}, 2)


def _check_partition(frag, data, k, l=None):
    ids = sorted(r for eq in frag.classes for r in eq.row_ids)
    assert ids == sorted(data.row_ids.tolist())
    x = data.features()
    pos = {int(r): i for i, r in enumerate(data.row_ids)}
    for eq in frag.classes:
        assert eq.size >= k
        if l is not None:
            assert len(eq.class_values) >= l
        rows = x[[pos[r] for r in eq.row_ids]]
        assert np.array_equal(eq.lower, rows.min(axis=0)) and np.array_equal(eq.upper, rows.max(axis=0))
        assert sum(eq.class_counts.values()) == eq.size == len(eq.row_ids)


@pytest.mark.parametrize("k", [2, 5, 10, 40])
def test_guarantees_on_synthetic_data(k):
    data = correlated_table(600, 6, n_classes=3, seed=k)
    _check_partition(mondrian_k_anonymize(data, k), data, k)
    _check_partition(mondrian_l_diverse(data, k, 2), data, k, 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 80), st.integers(1, 3), st.integers(1, 8), st.integers(0, 10**6))
def test_guarantees_property(rows, dims, k, seed):
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 6, size=(rows, dims))
    data = make_dataset(x, rng.choice(["p", "q", "r"], rows))
    if rows < k:
        with pytest.raises(ValueError):
            mondrian_k_anonymize(data, k)
        return
    _check_partition(mondrian_k_anonymize(data, k), data, k)
    if len(set(data.labels.tolist())) >= 2:
        _check_partition(mondrian_l_diverse(data, k, 2), data, k, 2)


def test_deterministic_class_order(small_table):
    a = mondrian_k_anonymize(small_table, 5)
    b = mondrian_k_anonymize(small_table, 5)
    assert _boxes(a) == _boxes(b)
    keys = [(tuple(eq.lower), tuple(eq.upper)) for eq in a.classes]
    assert keys == sorted(keys)
