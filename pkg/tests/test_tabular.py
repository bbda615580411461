import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taskdv.errors import CsvParseError, SchemaError
from taskdv.tabular import (
    Batch,
    Dataset,
    ValueKind,
    column_from_values,
    dataset_from_rows,
    infer_types,
    list_batches,
    load_batch,
    load_table,
    parse_csv_text,
    render_csv_text,
    save_batch,
    select_columns,
    take_rows,
)


def test_load_simple_table(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("name,revenue\na,1.5\nb,2.0\nc,3.25\n")
    d = load_table(path)
    assert d.row_count == 3
    assert d.column_names == ["name", "revenue"]
    assert d.column("revenue").inferred_type is ValueKind.REAL


def test_empty_string_is_null():
    d = parse_csv_text("x\n1\n2\n\n")
    col = d.column("x")
    assert col.inferred_type is ValueKind.INTEGER
    assert col.values == (1, 2, None)
    assert col.null_mask == (False, False, True)


def test_mixed_values_demote_to_text():
    d = parse_csv_text("x\n1\n2\nx\n")
    assert d.column("x").inferred_type is ValueKind.TEXT
    assert d.column("x").values == ("1", "2", "x")


@pytest.mark.parametrize(
    "cells,expected",
    [
        (["1", "2", "3"], ValueKind.INTEGER),
        (["1.5", "2"], ValueKind.REAL),
        (["true", "FALSE", ""], ValueKind.BOOLEAN),
        (["1", "yes"], ValueKind.TEXT),
        (["NaN", "2.0"], ValueKind.REAL),
        ([], ValueKind.INTEGER),  # vacuous: all-empty column
    ],
)
def test_infer_types(cells, expected):
    assert infer_types([cells]) == [expected]


def test_int64_overflow_demotes_to_real():
    big = str(2**63)
    assert infer_types([[big, "1"]]) == [ValueKind.REAL]
    assert infer_types([[str(2**63 - 1), "1"]]) == [ValueKind.INTEGER]


def test_nan_token_becomes_null_in_real_column():
    d = parse_csv_text("x\n1.5\nNaN\n")
    assert d.column("x").values == (1.5, None)


def test_duplicate_header_rejected():
    with pytest.raises(SchemaError):
        parse_csv_text("a,a\n1,2\n")


def test_ragged_row_is_parse_error_with_line():
    with pytest.raises(CsvParseError) as err:
        parse_csv_text("a,b\n1,2\n3\n")
    assert err.value.line == 3


def test_empty_file_is_parse_error():
    with pytest.raises(CsvParseError):
        parse_csv_text("")


def test_select_columns_reorders_and_projects():
    d = parse_csv_text("a,b\n1,2\n3,4\n")
    assert select_columns(d, ["b", "a"]).column_names == ["b", "a"]
    empty = select_columns(d, [])
    assert empty.column_names == []
    assert empty.row_count == 2
    with pytest.raises(SchemaError):
        select_columns(d, ["nope"])


def test_take_rows_preserves_masks():
    d = parse_csv_text("a\n1\n\n3\n")
    picked = take_rows(d, [2, 0])
    assert picked.column("a").values == (3, 1)
    assert take_rows(d, []).row_count == 0


def test_null_count_matches_mask():
    d = parse_csv_text("a\n1\n\n\n4\n")
    col = d.column("a")
    assert col.null_count == sum(col.null_mask) == 2


def test_round_trip_booking(fixtures_dir):
    original = load_table(fixtures_dir / "booking" / "sample.csv")
    assert parse_csv_text(render_csv_text(original)) == original


def test_load_does_not_mutate_source(tmp_path):
    path = tmp_path / "t.csv"
    content = "a,b\n1,x\n"
    path.write_text(content)
    load_table(path)
    assert path.read_text() == content


_cell = st.one_of(
    st.just(""),
    st.integers(min_value=-(10**6), max_value=10**6).map(str),
    st.floats(allow_nan=False, allow_infinity=False, width=32).map(repr),
    st.sampled_from(["true", "false", "x", "hello, world", 'quo"te', "a\nb", "über"]),
)


@settings(max_examples=150, deadline=None)
@given(
    st.integers(min_value=1, max_value=4).flatmap(
        lambda width: st.lists(
            st.lists(_cell, min_size=width, max_size=width), min_size=0, max_size=12
        )
    )
)
def test_round_trip_property(rows):
    width = len(rows[0]) if rows else 2
    header = [f"c{i}" for i in range(width)]
    import csv as _csv
    import io

    buf = io.StringIO()
    writer = _csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    original = parse_csv_text(buf.getvalue())
    assert parse_csv_text(render_csv_text(original)) == original


def test_column_from_values_rejects_mixed_kinds():
    with pytest.raises(ValueError):
        column_from_values("x", [1, "a"])


def test_dataset_rejects_unequal_columns():
    with pytest.raises(SchemaError):
        Dataset(
            (
                column_from_values("a", [1, 2]),
                column_from_values("b", [1]),
            )
        )


def test_batch_registry_round_trip(tmp_path):
    d = dataset_from_rows(["a", "b"], [[1, "x"], [None, "y"]])
    save_batch(tmp_path, Batch(id="b1", data=d, provenance="test-config"))
    loaded = load_batch(tmp_path, "b1")
    assert loaded.data == d
    assert loaded.provenance == "test-config"
    assert list_batches(tmp_path) == ["b1"]
