"""Schemas, fields, and records: the type system every pipeline operator consumes and produces.

Schemas are immutable and structurally compared (name + ordered fields), which is
what lets a convert onto the current schema be detected as an identity. Records
are immutable after construction; a failed extraction is an explicit null value,
never a rejected record.
"""

from __future__ import annotations

import math
import re
import uuid
from dataclasses import dataclass, field

FIELD_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

KIND_TEXT = "text"
KIND_NUMBER = "number"
KIND_BOOLEAN = "boolean"
KIND_LIST_OF_TEXT = "list-of-text"
FIELD_KINDS = frozenset({KIND_TEXT, KIND_NUMBER, KIND_BOOLEAN, KIND_LIST_OF_TEXT})


class SchemaError(ValueError):
    """Base class for schema construction failures."""


class LengthMismatch(SchemaError):
    """Field name and description lists differ in length."""


class InvalidFieldName(SchemaError):
    """A field name is not a bare identifier."""


class DuplicateField(SchemaError):
    """Two fields share a name within one schema."""


class EmptyFields(SchemaError):
    """A schema was declared with no fields."""


def validate_field_name(name: str) -> bool:
    """True iff name is letters/digits/underscore and does not start with a digit."""
    return isinstance(name, str) and bool(FIELD_NAME_RE.fullmatch(name))


@dataclass(frozen=True)
class FieldSpec:
    """One named, described attribute of a schema."""

    name: str
    description: str
    kind: str = KIND_TEXT

    def __post_init__(self) -> None:
        if not validate_field_name(self.name):
            raise InvalidFieldName(f"invalid field name: {self.name!r}")
        if not self.description:
            raise SchemaError(f"field {self.name!r} requires a non-empty description")
        if self.kind not in FIELD_KINDS:
            raise SchemaError(f"unknown field kind {self.kind!r} for field {self.name!r}")


@dataclass(frozen=True)
class Schema:
    """Named, ordered set of described fields.

    Equality and hashing are structural over (name, fields); doc is display-only.
    """

    name: str
    doc: str = field(compare=False)
    fields: tuple[FieldSpec, ...] = field()

    def __post_init__(self) -> None:
        if not validate_field_name(self.name):
            raise SchemaError(f"invalid schema name: {self.name!r}")
        if not self.fields:
            raise EmptyFields(f"schema {self.name!r} has no fields")
        seen = set()
        for spec in self.fields:
            if spec.name in seen:
                raise DuplicateField(f"duplicate field {spec.name!r} in schema {self.name!r}")
            seen.add(spec.name)

    @property
    def field_names(self) -> tuple[str, ...]:
        return tuple(spec.name for spec in self.fields)

    def field(self, name: str) -> FieldSpec:
        for spec in self.fields:
            if spec.name == name:
                return spec
        raise KeyError(name)


PDF_FILE = Schema(
    "PDFFile",
    "A PDF document: its file name and the text extracted from it.",
    (
        FieldSpec("filename", "Base name of the source file"),
        FieldSpec("contents", "Text extracted from the document"),
    ),
)

TEXT_FILE = Schema(
    "TextFile",
    "A plain-text file: its file name and raw text contents.",
    (
        FieldSpec("filename", "Base name of the source file"),
        FieldSpec("contents", "Raw text contents of the file"),
    ),
)

BUILTIN_SCHEMAS = {PDF_FILE.name: PDF_FILE, TEXT_FILE.name: TEXT_FILE}


def make_schema(
    name: str,
    doc: str,
    field_names: list[str],
    field_descriptions: list[str],
) -> Schema:
    """Build a Schema from parallel name/description lists; every field is text-kind."""
    if len(field_names) != len(field_descriptions):
        raise LengthMismatch(
            f"{len(field_names)} field names but {len(field_descriptions)} descriptions"
        )
    if not field_names:
        raise EmptyFields(f"schema {name!r} declared with no fields")
    for fname in field_names:
        if not validate_field_name(fname):
            raise InvalidFieldName(f"invalid field name: {fname!r}")
    if len(set(field_names)) != len(field_names):
        dupes = sorted({n for n in field_names if field_names.count(n) > 1})
        raise DuplicateField(f"duplicate field names: {', '.join(dupes)}")
    specs = tuple(
        FieldSpec(fname, desc) for fname, desc in zip(field_names, field_descriptions)
    )
    return Schema(name, doc, specs)


@dataclass(frozen=True, eq=False)
class Record:
    """One data item: field values plus lineage back to its parent records.

    `parents` is empty only for scan-produced records. `source_error` carries a
    per-file read failure noted during scanning.
    """

    id: str
    schema: Schema
    values: dict
    parents: tuple[str, ...] = ()
    source: str | None = None
    source_error: str | None = None


def _coerce_text(value) -> str | None:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return str(value)
    return None


def _coerce_number(value) -> float | int | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return value if math.isfinite(value) else None
    if isinstance(value, str):
        try:
            parsed = float(value)
        except ValueError:
            return None
        return parsed if math.isfinite(parsed) else None
    return None


def _coerce_boolean(value) -> bool | None:
    if isinstance(value, bool):
        return value
    if isinstance(value, int) and value in (0, 1):
        return bool(value)
    if isinstance(value, str):
        lowered = value.strip().lower()
        if lowered in ("true", "yes"):
            return True
        if lowered in ("false", "no"):
            return False
    return None


def _coerce_list_of_text(value) -> list[str] | None:
    if isinstance(value, str):
        return [value]
    if isinstance(value, (list, tuple)):
        items = [_coerce_text(item) for item in value]
        return [item for item in items if item is not None]
    return None


_COERCERS = {
    KIND_TEXT: _coerce_text,
    KIND_NUMBER: _coerce_number,
    KIND_BOOLEAN: _coerce_boolean,
    KIND_LIST_OF_TEXT: _coerce_list_of_text,
}


def conform_record(
    raw_values,
    schema: Schema,
    parents: list[str] | tuple[str, ...] = (),
    source: str | None = None,
    source_error: str | None = None,
    rid: str | None = None,
) -> Record:
    """Shape an arbitrary raw mapping into a Record for `schema`.

    Total: missing or non-coercible values become explicit nulls, extraneous
    keys are dropped. A fresh id is assigned unless `rid` is given.
    """
    raw = raw_values if isinstance(raw_values, dict) else {}
    values = {
        spec.name: _COERCERS[spec.kind](raw.get(spec.name)) for spec in schema.fields
    }
    return Record(
        id=rid if rid is not None else uuid.uuid4().hex,
        schema=schema,
        values=values,
        parents=tuple(parents),
        source=source,
        source_error=source_error,
    )


def schema_to_json(schema: Schema) -> dict:
    return {
        "name": schema.name,
        "doc": schema.doc,
        "fields": [
            {"name": spec.name, "description": spec.description, "kind": spec.kind}
            for spec in schema.fields
        ],
    }


def schema_from_json(doc: dict) -> Schema:
    fields = tuple(
        FieldSpec(entry["name"], entry["description"], entry.get("kind", KIND_TEXT))
        for entry in doc.get("fields", [])
    )
    return Schema(doc["name"], doc.get("doc", ""), fields)


def record_to_json(record: Record) -> dict:
    return {
        "id": record.id,
        "schema": record.schema.name,
        "values": record.values,
        "parents": list(record.parents),
        "source": record.source,
        "source_error": record.source_error,
    }


def record_from_json(doc: dict, schemas_by_name: dict[str, Schema]) -> Record:
    schema = schemas_by_name[doc["schema"]]
    return Record(
        id=doc["id"],
        schema=schema,
        values=dict(doc["values"]),
        parents=tuple(doc.get("parents", ())),
        source=doc.get("source"),
        source_error=doc.get("source_error"),
    )
