import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraganon.data import (
    AttributeSchema,
    DataFormatError,
    Fragment,
    Fragmentation,
    SchemaError,
    attribute_ranges,
    format_schema,
    load_csv,
    parse_schema,
    project,
    read_csv_text,
    write_csv,
)

from conftest import make_dataset

SCHEMA = parse_schema("age=numeric,feature\ncity=categorical,feature\nincome=numeric,feature\ny=categorical,class\n")


def test_schema_round_trip():
    assert parse_schema(format_schema(SCHEMA)) == SCHEMA


def test_schema_needs_exactly_one_class():
    with pytest.raises(SchemaError):
        parse_schema("a=numeric,feature\n")
    with pytest.raises(SchemaError):
        parse_schema("a=numeric,class\nb=numeric,class\n")


def test_schema_rejects_bad_kind_and_duplicates():
    with pytest.raises(SchemaError):
        parse_schema("a=text,feature\ny=categorical,class\n")
    with pytest.raises(SchemaError):
        parse_schema("a=numeric,feature\na=numeric,feature\ny=categorical,class\n")


def test_sensitive_role_is_accepted():
    schema = parse_schema("a=numeric,feature\ns=categorical,sensitive\ny=categorical,class\n")
    assert schema[1].role == "sensitive"


def test_csv_ingest_encodes_categoricals_by_first_appearance():
    d = read_csv_text(["age,city,income,y", "30,Oslo,10,a", "40,Rome,20,b", "50,Oslo,30,a"], SCHEMA)
    assert d.row_count == 3
    assert d.column("city").tolist() == [0.0, 1.0, 0.0]
    assert d.categories["city"] == ("Oslo", "Rome")
    assert d.labels.tolist() == ["a", "b", "a"]
    assert d.feature_indices == [0, 1, 2]


def test_csv_missing_value_names_row_and_column():
    with pytest.raises(DataFormatError, match=r"row 3, column 'income'"):
        read_csv_text(["age,city,income,y", "30,Oslo,10,a", "40,Rome,,b"], SCHEMA)


def test_csv_header_mismatch():
    with pytest.raises(SchemaError):
        read_csv_text(["age,town,income,y", "30,Oslo,10,a"], SCHEMA)


def test_csv_empty_and_unparseable():
    with pytest.raises(DataFormatError):
        read_csv_text([], SCHEMA)
    with pytest.raises(DataFormatError):
        read_csv_text(["age,city,income,y"], SCHEMA)
    with pytest.raises(DataFormatError, match="cannot parse"):
        read_csv_text(["age,city,income,y", "x,Oslo,10,a"], SCHEMA)
    with pytest.raises(DataFormatError, match="fields"):
        read_csv_text(["age,city,income,y", "1,Oslo,10"], SCHEMA)


def test_load_csv_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "nope.csv", SCHEMA)


def test_write_then_load_round_trip(tmp_path):
    d = read_csv_text(["age,city,income,y", "30,Oslo,10.5,a", "40,Rome,20,b"], SCHEMA)
    write_csv(d, tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().splitlines() == ["age,city,income,y", "30,Oslo,10.5,a", "40,Rome,20,b"]
    again = load_csv(tmp_path / "t.csv", SCHEMA)
    for a, b in zip(d.columns, again.columns):
        assert a.tolist() == b.tolist()


def test_dataset_is_immutable():
    d = make_dataset([[1, 2], [3, 4]], ["a", "b"])
    with pytest.raises(ValueError):
        d.columns[0][0] = 5


def test_project_keeps_rows_and_class():
    d = make_dataset([[1, 2, 3], [4, 5, 6]], ["a", "b"])
    p = project(d, Fragment((2, 0)))
    assert p.names == ["a2", "a0", "cls"]
    assert p.features().tolist() == [[3, 1], [6, 4]]
    assert p.labels.tolist() == ["a", "b"]
    assert p.feature_origin() == (2, 0)
    with pytest.raises(IndexError):
        project(d, Fragment((7,)))
    with pytest.raises(ValueError):
        project(d, Fragment((3,)))


def test_project_of_a_column_subset_uses_source_ids():
    d = make_dataset([[1, 2, 3], [4, 5, 6]], ["a", "b"]).select([2, 0, 3])
    assert project(d, Fragment((2,))).features().tolist() == [[3], [6]]
    assert attribute_ranges(d) == {2: (3.0, 6.0), 0: (1.0, 4.0)}


def test_fragment_validation():
    with pytest.raises(ValueError):
        Fragment(())
    with pytest.raises(ValueError):
        Fragment((1, 1))
    with pytest.raises(ValueError):
        Fragmentation((Fragment((0, 1)), Fragment((1, 2))))


@given(st.lists(st.integers(0, 3), min_size=2, max_size=12))
def test_fragmentation_assignment_is_disjoint_cover(assignment):
    groups = {}
    for attr, g in enumerate(assignment):
        groups.setdefault(g, []).append(attr)
    frag = Fragmentation(tuple(Fragment(tuple(v)) for v in groups.values()))
    assert frag.covers(range(len(assignment)))
    assert sum(len(f) for f in frag) == len(assignment)
    frag.check_cover(range(len(assignment)))
    with pytest.raises(ValueError):
        frag.check_cover(range(len(assignment) + 1))


@settings(max_examples=50)
@given(st.integers(1, 30), st.integers(1, 5), st.integers(0, 1000))
def test_take_preserves_row_identity(rows, cols, seed):
    rng = np.random.default_rng(seed)
    d = make_dataset(rng.normal(size=(rows, cols)), rng.choice(["a", "b"], rows))
    pick = rng.permutation(rows)[: max(1, rows // 2)]
    sub = d.take(pick)
    assert sub.row_ids.tolist() == pick.tolist()
    assert np.array_equal(sub.features(), d.features()[pick])
