"""Dataset registration and scanning.

A data source is either a directory (one record per file) or an in-memory list
(one record per item). Directory sources get a built-in schema picked by file
extension; PDF text extraction is pluggable, and the default extractor reads a
plaintext sidecar `<name>.pdf.txt` so scans stay deterministic and dependency-free.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator

from .schema import BUILTIN_SCHEMAS, PDF_FILE, TEXT_FILE, Record, Schema

# Returns extracted text, or None when no text can be produced for the file.
TextExtractor = Callable[[Path], "str | None"]


class IngestError(ValueError):
    """Base class for dataset registration/scanning failures."""


class PathNotFound(IngestError):
    pass


class NotADirectory(IngestError):
    pass


class EmptyDirectory(IngestError):
    pass


class UnknownSource(IngestError):
    """A source id is not present in the registry."""


def sidecar_text_extractor(path: Path) -> str | None:
    """Default extractor: sidecar text for PDFs, raw text for everything else."""
    if path.suffix.lower() == ".pdf":
        sidecar = path.with_name(path.name + ".txt")
        if sidecar.is_file():
            return sidecar.read_text(encoding="utf-8")
        return None
    return path.read_text(encoding="utf-8")


@dataclass(frozen=True)
class DataSource:
    """A registered input dataset with its auto-detected built-in schema."""

    id: str
    kind: str  # "directory" | "memory"
    root: str | None = None
    items: tuple[str, ...] = ()
    detected_schema: Schema = TEXT_FILE


def _is_sidecar(path: Path) -> bool:
    return path.name.lower().endswith(".pdf.txt")


def _scannable_files(root: Path) -> list[Path]:
    """Regular files under root, skipping hidden files and PDF text sidecars."""
    files = [
        p
        for p in root.iterdir()
        if p.is_file() and not p.name.startswith(".") and not _is_sidecar(p)
    ]
    return sorted(files, key=lambda p: p.name.encode("utf-8"))


def detect_schema(source: DataSource) -> Schema:
    """PDFFile when most files are .pdf, otherwise TextFile; ties go to TextFile."""
    if source.kind == "memory":
        return TEXT_FILE
    files = _scannable_files(Path(source.root))
    if not files:
        raise EmptyDirectory(f"no regular files under {source.root!r}")
    pdf_count = sum(1 for p in files if p.suffix.lower() == ".pdf")
    return PDF_FILE if pdf_count * 2 > len(files) else TEXT_FILE


class DatasetRegistry:
    """Named data sources; registration replaces any prior source with the same id."""

    def __init__(self) -> None:
        self._sources: dict[str, DataSource] = {}
        self._lock = threading.Lock()

    def register_dataset(self, source_id: str, path: str | Path) -> DataSource:
        root = Path(path)
        if not root.exists():
            raise PathNotFound(f"dataset path does not exist: {root}")
        if not root.is_dir():
            raise NotADirectory(f"dataset path is not a directory: {root}")
        probe = DataSource(id=source_id, kind="directory", root=str(root))
        source = DataSource(
            id=source_id, kind="directory", root=str(root), detected_schema=detect_schema(probe)
        )
        with self._lock:
            self._sources[source_id] = source
        return source

    def register_memory(self, source_id: str, items) -> DataSource:
        source = DataSource(
            id=source_id,
            kind="memory",
            items=tuple(str(item) for item in items),
            detected_schema=TEXT_FILE,
        )
        with self._lock:
            self._sources[source_id] = source
        return source

    def get(self, source_id: str) -> DataSource:
        with self._lock:
            try:
                return self._sources[source_id]
            except KeyError:
                raise UnknownSource(f"unknown dataset: {source_id!r}") from None

    def __contains__(self, source_id: str) -> bool:
        with self._lock:
            return source_id in self._sources

    def ids(self) -> list[str]:
        with self._lock:
            return sorted(self._sources)

    def to_json(self) -> list[dict]:
        with self._lock:
            sources = [self._sources[sid] for sid in sorted(self._sources)]
        return [
            {
                "id": s.id,
                "kind": s.kind,
                "root": s.root if s.kind == "directory" else list(s.items),
                "schema_name": s.detected_schema.name,
            }
            for s in sources
        ]

    @classmethod
    def from_json(cls, docs: list[dict]) -> "DatasetRegistry":
        registry = cls()
        for doc in docs:
            if doc["kind"] == "memory":
                registry.register_memory(doc["id"], doc["root"])
            else:
                source = DataSource(
                    id=doc["id"],
                    kind="directory",
                    root=doc["root"],
                    detected_schema=BUILTIN_SCHEMAS[doc["schema_name"]],
                )
                with registry._lock:
                    registry._sources[doc["id"]] = source
        return registry


def count_records(source: DataSource) -> int:
    """Number of records a scan will produce, without reading any contents."""
    if source.kind == "memory":
        return len(source.items)
    return len(_scannable_files(Path(source.root)))


def scan(source: DataSource, extractor: TextExtractor | None = None) -> Iterator[Record]:
    """One record per file (filename-ascending) or per memory item, parents empty.

    A per-file read failure is noted on the record (`source_error`) with null
    contents; the scan itself never aborts.
    """
    schema = source.detected_schema
    if source.kind == "memory":
        for i, item in enumerate(source.items):
            yield Record(
                id=f"rec-{i:04d}",
                schema=schema,
                values={"filename": f"mem-{i}", "contents": item},
                parents=(),
                source=f"mem-{i}",
            )
        return

    extract = extractor or sidecar_text_extractor
    for i, path in enumerate(_scannable_files(Path(source.root))):
        contents: str | None
        error: str | None = None
        try:
            contents = extract(path)
        except (OSError, UnicodeDecodeError, ValueError) as exc:
            contents = None
            error = f"{type(exc).__name__}: {exc}"
        # Base name, not full path: runs over the same files from different
        # directories must produce byte-identical records.
        yield Record(
            id=f"rec-{i:04d}",
            schema=schema,
            values={"filename": path.name, "contents": contents},
            parents=(),
            source=path.name,
            source_error=error,
        )
