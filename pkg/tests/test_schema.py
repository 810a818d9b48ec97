"""Schema construction, field-name validation, record conforming, serialization."""

from __future__ import annotations

import re

import pytest
from hypothesis import given, strategies as st

from sempipe.schema import (
    BUILTIN_SCHEMAS,
    PDF_FILE,
    TEXT_FILE,
    DuplicateField,
    EmptyFields,
    FieldSpec,
    InvalidFieldName,
    LengthMismatch,
    Record,
    Schema,
    SchemaError,
    conform_record,
    make_schema,
    record_from_json,
    record_to_json,
    schema_from_json,
    schema_to_json,
    validate_field_name,
)

CLINICAL = make_schema(
    "ClinicalData",
    "A schema for extracting clinical data datasets from papers.",
    ["name", "description", "url"],
    [
        "The name of the clinical data dataset",
        "A short description of the content of the dataset",
        "The public URL where the dataset can be accessed",
    ],
)


# -- make_schema --------------------------------------------------------------


def test_make_schema_author():
    schema = make_schema(
        "Author",
        "author info",
        ["name", "email", "affiliation"],
        ["Full name", "Contact email", "Home institution"],
    )
    assert schema.name == "Author"
    assert schema.field_names == ("name", "email", "affiliation")
    assert all(spec.kind == "text" for spec in schema.fields)


def test_make_schema_clinical_data():
    assert CLINICAL.field_names == ("name", "description", "url")
    assert len(CLINICAL.fields) == 3


def test_make_schema_empty_fields():
    with pytest.raises(EmptyFields):
        make_schema("X", "d", [], [])


def test_make_schema_length_mismatch():
    with pytest.raises(LengthMismatch):
        make_schema("X", "d", ["a", "b"], ["only one"])


def test_make_schema_invalid_name_names_offender():
    with pytest.raises(InvalidFieldName, match="my field!"):
        make_schema("X", "d", ["ok", "my field!"], ["fine", "bad"])


def test_make_schema_duplicate_field():
    with pytest.raises(DuplicateField):
        make_schema("X", "d", ["a", "a"], ["one", "two"])


@given(
    names=st.lists(
        st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,8}", fullmatch=True),
        min_size=1,
        max_size=6,
        unique=True,
    ),
    docs=st.data(),
)
def test_make_schema_round_trip(names, docs):
    """Field names and descriptions read back exactly as given."""
    descriptions = [f"describes {n}" for n in names]
    schema = make_schema("RT", "round trip", names, descriptions)
    assert list(schema.field_names) == names
    assert [spec.description for spec in schema.fields] == descriptions


# -- validate_field_name -----------------------------------------------------


def test_validate_field_name_examples():
    assert validate_field_name("dataset_name") is True
    assert validate_field_name("") is False
    assert validate_field_name("my field!") is False


@given(st.text(max_size=12))
def test_validate_field_name_matches_reference_regex(name):
    reference = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
    assert validate_field_name(name) == bool(reference.match(name))


# -- schema invariants ---------------------------------------------------------


def test_builtin_schemas_exist():
    assert set(BUILTIN_SCHEMAS) == {"PDFFile", "TextFile"}
    assert PDF_FILE.field_names == ("filename", "contents")
    assert TEXT_FILE.field_names == ("filename", "contents")


def test_schema_equality_ignores_doc():
    a = Schema("S", "one doc", (FieldSpec("x", "d"),))
    b = Schema("S", "another doc", (FieldSpec("x", "d"),))
    assert a == b
    assert hash(a) == hash(b)


def test_schema_equality_is_structural():
    a = Schema("S", "d", (FieldSpec("x", "d"),))
    b = Schema("S", "d", (FieldSpec("y", "d"),))
    assert a != b


def test_schema_rejects_duplicate_and_empty():
    with pytest.raises(DuplicateField):
        Schema("S", "d", (FieldSpec("x", "d"), FieldSpec("x", "d")))
    with pytest.raises(EmptyFields):
        Schema("S", "d", ())


def test_field_spec_validation():
    with pytest.raises(InvalidFieldName):
        FieldSpec("9bad", "d")
    with pytest.raises(SchemaError):
        FieldSpec("ok", "")
    with pytest.raises(SchemaError):
        FieldSpec("ok", "d", kind="no-such-kind")


# -- conform_record ------------------------------------------------------------


def test_conform_missing_field_is_null():
    record = conform_record({"name": "TCGA", "url": "http://x"}, CLINICAL, parents=["r1"])
    assert record.values == {"name": "TCGA", "description": None, "url": "http://x"}
    assert record.parents == ("r1",)


def test_conform_empty_input_all_null():
    record = conform_record({}, CLINICAL, parents=["r1"])
    assert record.values == {"name": None, "description": None, "url": None}


def test_conform_drops_extraneous_keys():
    record = conform_record({"name": "A", "junk": 1}, CLINICAL)
    assert "junk" not in record.values
    assert set(record.values) == set(CLINICAL.field_names)


def test_conform_coerces_kinds():
    schema = Schema(
        "K",
        "kinds",
        (
            FieldSpec("t", "text", "text"),
            FieldSpec("n", "number", "number"),
            FieldSpec("b", "boolean", "boolean"),
            FieldSpec("l", "list", "list-of-text"),
        ),
    )
    record = conform_record({"t": 7, "n": "3.5", "b": "yes", "l": "solo"}, schema)
    assert record.values == {"t": "7", "n": 3.5, "b": True, "l": ["solo"]}


def test_conform_boolean_is_not_a_number():
    schema = Schema("N", "num", (FieldSpec("n", "number", "number"),))
    assert conform_record({"n": True}, schema).values["n"] is None


def test_conform_fresh_ids_unless_given():
    a = conform_record({}, CLINICAL)
    b = conform_record({}, CLINICAL)
    assert a.id != b.id
    assert conform_record({}, CLINICAL, rid="fixed").id == "fixed"


@given(
    raw=st.dictionaries(
        st.text(max_size=8),
        st.one_of(
            st.none(),
            st.booleans(),
            st.integers(-1000, 1000),
            st.floats(allow_nan=True, allow_infinity=True),
            st.text(max_size=20),
            st.lists(st.text(max_size=5), max_size=4),
        ),
        max_size=8,
    )
)
def test_conform_record_invariants(raw):
    """Every schema field present, no extraneous keys, total over arbitrary maps."""
    record = conform_record(raw, CLINICAL, parents=["p"])
    assert set(record.values) == set(CLINICAL.field_names)
    for value in record.values.values():
        assert value is None or isinstance(value, str)
    assert record.parents == ("p",)


# -- serialization -------------------------------------------------------------


def test_schema_json_round_trip():
    doc = schema_to_json(CLINICAL)
    assert doc["name"] == "ClinicalData"
    assert [f["name"] for f in doc["fields"]] == ["name", "description", "url"]
    assert schema_from_json(doc) == CLINICAL


def test_record_json_round_trip():
    record = conform_record(
        {"name": "A", "description": "B", "url": "C"},
        CLINICAL,
        parents=["r1"],
        source="paper.pdf",
        rid="r2/0",
    )
    doc = record_to_json(record)
    back = record_from_json(doc, {"ClinicalData": CLINICAL})
    assert back.id == record.id
    assert back.values == record.values
    assert back.parents == record.parents
    assert back.source == record.source
    assert back.source_error is None


def test_record_is_immutable():
    record = conform_record({}, CLINICAL)
    with pytest.raises(AttributeError):
        record.id = "other"
