"""Persistence and export of query records.

A QueryRecord captures one search: the query text, which platforms were
asked, each platform's outcome, and the merged ranked results. Records
are immutable once persisted and addressed by a 26-character
Crockford-base32 identifier that sorts in creation order.

Two backends implement the same five operations: an append-only file of
canonical JSON lines with an in-memory index rebuilt on open (the
zero-dependency default), and a sqlite-backed document table ("docdb").
"""

from __future__ import annotations

import json
import os
import sqlite3
import threading
import time
from dataclasses import dataclass, replace
from datetime import datetime
from pathlib import Path
from typing import Any

from .matching import RankedResult, ranking_key
from .model import PlatformId, format_timestamp, parse_timestamp

CSV_HEADER = [
    "query_id",
    "query",
    "platform",
    "handle",
    "display_name",
    "bio",
    "followers",
    "following",
    "location",
    "retrieved_at",
]

EXPORT_FORMATS = ("jsonlines", "csv")
EXPORT_MEDIA_TYPES = {
    "jsonlines": "application/x-ndjson",
    "csv": "text/csv; charset=utf-8",
}


class StorageError(Exception):
    """Backend I/O failure."""


@dataclass(frozen=True)
class PlatformStatus:
    """Outcome of one platform within one query: ok(count) or error."""

    state: str  # "ok" | "error"
    count: int = 0
    kind: str = ""
    detail: str = ""

    @classmethod
    def ok(cls, count: int) -> "PlatformStatus":
        return cls(state="ok", count=count)

    @classmethod
    def error(cls, kind: str, detail: str) -> "PlatformStatus":
        return cls(state="error", kind=kind, detail=detail)

    @property
    def is_error(self) -> bool:
        return self.state == "error"

    def to_json(self) -> dict[str, Any]:
        if self.state == "ok":
            return {"state": "ok", "count": self.count}
        return {"state": "error", "kind": self.kind, "detail": self.detail}

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "PlatformStatus":
        if doc["state"] == "ok":
            return cls.ok(doc["count"])
        return cls.error(doc["kind"], doc["detail"])


@dataclass(frozen=True)
class QueryRecord:
    query: str
    requested_platforms: tuple[PlatformId, ...]
    created_at: datetime
    statuses: dict[PlatformId, PlatformStatus]
    results: list[RankedResult]
    id: str | None = None

    def validate(self) -> None:
        if set(self.statuses) != set(self.requested_platforms):
            raise ValueError("statuses must cover exactly the requested platforms")
        for platform in self.requested_platforms:
            status = self.statuses[platform]
            if status.state == "ok":
                actual = sum(
                    1 for r in self.results if r.profile.platform is platform
                )
                if status.count != actual:
                    raise ValueError(
                        f"{platform.value}: status count {status.count} != "
                        f"{actual} results"
                    )
        keys = [ranking_key(r) for r in self.results]
        if keys != sorted(keys):
            raise ValueError("results must be sorted by the ranking order")

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "query": self.query,
            "requested_platforms": [p.value for p in self.requested_platforms],
            "created_at": format_timestamp(self.created_at),
            "statuses": {
                p.value: self.statuses[p].to_json() for p in self.requested_platforms
            },
            "results": [r.to_json() for r in self.results],
        }

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "QueryRecord":
        platforms = tuple(PlatformId.parse(p) for p in doc["requested_platforms"])
        return cls(
            id=doc["id"],
            query=doc["query"],
            requested_platforms=platforms,
            created_at=parse_timestamp(doc["created_at"]),
            statuses={
                p: PlatformStatus.from_json(doc["statuses"][p.value])
                for p in platforms
            },
            results=[RankedResult.from_json(r) for r in doc["results"]],
        )

    def summary(self) -> dict[str, Any]:
        """History-page form: per-platform counts, null where errored."""
        return {
            "id": self.id,
            "query": self.query,
            "created_at": format_timestamp(self.created_at),
            "platform_counts": {
                p.value: (None if self.statuses[p].is_error else self.statuses[p].count)
                for p in self.requested_platforms
            },
        }


_CROCKFORD = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"


def _encode_base32(value: int) -> str:
    chars = []
    for _ in range(26):
        chars.append(_CROCKFORD[value & 0x1F])
        value >>= 5
    return "".join(reversed(chars))


class RecordIdGenerator:
    """Time-ordered 26-char ids: 48-bit millisecond timestamp + 80 random bits.

    Within one process, ids are strictly increasing even when the clock
    stalls or steps backwards (the previous id is incremented instead).
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._last = -1

    def generate(self, now_ms: int | None = None) -> str:
        if now_ms is None:
            now_ms = time.time_ns() // 1_000_000
        with self._lock:
            value = (now_ms & (2**48 - 1)) << 80
            value |= int.from_bytes(os.urandom(10), "big")
            if value <= self._last:
                value = self._last + 1
            self._last = value
            return _encode_base32(value)


_id_generator = RecordIdGenerator()


class QueryStore:
    """Five-operation document store contract for query records."""

    def persist_query(self, record: QueryRecord) -> str:
        raise NotImplementedError

    def get_query(self, record_id: str) -> QueryRecord | None:
        raise NotImplementedError

    def list_queries(
        self, offset: int = 0, page_size: int = 50
    ) -> tuple[int, list[dict[str, Any]]]:
        raise NotImplementedError

    def export(self, record_id: str, format: str) -> bytes | None:
        record = self.get_query(record_id)
        if record is None:
            return None
        return export_record(record, format)

    def close(self) -> None:
        pass

    @staticmethod
    def _prepare(record: QueryRecord) -> QueryRecord:
        if record.id is not None:
            raise ValueError("record id is assigned by the store")
        record.validate()
        return replace(record, id=_id_generator.generate())

    @staticmethod
    def _check_page(offset: int, page_size: int) -> None:
        if offset < 0:
            raise ValueError("offset must be non-negative")
        if not 1 <= page_size <= 500:
            raise ValueError("page_size must be in 1..500")


class FileStore(QueryStore):
    """Append-only JSON-lines file with an in-memory id index."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: dict[str, QueryRecord] = {}
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            if self.path.exists():
                for line_no, line in enumerate(
                    self.path.read_text(encoding="utf-8").splitlines(), 1
                ):
                    if not line.strip():
                        continue
                    try:
                        record = QueryRecord.from_json(json.loads(line))
                    except (ValueError, KeyError) as exc:
                        raise StorageError(
                            f"{self.path}:{line_no}: corrupt record: {exc}"
                        ) from exc
                    self._records[record.id] = record
        except OSError as exc:
            raise StorageError(f"cannot open store at {self.path}: {exc}") from exc

    def persist_query(self, record: QueryRecord) -> str:
        stored = self._prepare(record)
        line = json.dumps(stored.to_json(), ensure_ascii=False)
        with self._lock:
            try:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(line + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageError(f"append failed: {exc}") from exc
            self._records[stored.id] = stored
        return stored.id

    def get_query(self, record_id: str) -> QueryRecord | None:
        with self._lock:
            return self._records.get(record_id)

    def list_queries(
        self, offset: int = 0, page_size: int = 50
    ) -> tuple[int, list[dict[str, Any]]]:
        self._check_page(offset, page_size)
        with self._lock:
            ids = sorted(self._records, reverse=True)
            page = [self._records[i].summary() for i in ids[offset : offset + page_size]]
            return len(ids), page


class SqliteStore(QueryStore):
    """Document-database backend: one table of (id, canonical JSON doc)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._conn = sqlite3.connect(str(self.path), check_same_thread=False)
            self._conn.execute(
                "CREATE TABLE IF NOT EXISTS query_records "
                "(id TEXT PRIMARY KEY, doc TEXT NOT NULL)"
            )
            self._conn.commit()
        except (OSError, sqlite3.Error) as exc:
            raise StorageError(f"cannot open store at {self.path}: {exc}") from exc

    def persist_query(self, record: QueryRecord) -> str:
        stored = self._prepare(record)
        doc = json.dumps(stored.to_json(), ensure_ascii=False)
        with self._lock:
            try:
                self._conn.execute(
                    "INSERT INTO query_records (id, doc) VALUES (?, ?)",
                    (stored.id, doc),
                )
                self._conn.commit()
            except sqlite3.Error as exc:
                raise StorageError(f"insert failed: {exc}") from exc
        return stored.id

    def get_query(self, record_id: str) -> QueryRecord | None:
        with self._lock:
            try:
                row = self._conn.execute(
                    "SELECT doc FROM query_records WHERE id = ?", (record_id,)
                ).fetchone()
            except sqlite3.Error as exc:
                raise StorageError(f"lookup failed: {exc}") from exc
        if row is None:
            return None
        return QueryRecord.from_json(json.loads(row[0]))

    def list_queries(
        self, offset: int = 0, page_size: int = 50
    ) -> tuple[int, list[dict[str, Any]]]:
        self._check_page(offset, page_size)
        with self._lock:
            try:
                total = self._conn.execute(
                    "SELECT COUNT(*) FROM query_records"
                ).fetchone()[0]
                rows = self._conn.execute(
                    "SELECT doc FROM query_records ORDER BY id DESC LIMIT ? OFFSET ?",
                    (page_size, offset),
                ).fetchall()
            except sqlite3.Error as exc:
                raise StorageError(f"listing failed: {exc}") from exc
        return total, [QueryRecord.from_json(json.loads(r[0])).summary() for r in rows]

    def close(self) -> None:
        self._conn.close()


def open_store(backend: str, path: str | Path) -> QueryStore:
    if backend == "file":
        return FileStore(path)
    if backend == "docdb":
        return SqliteStore(path)
    raise ValueError(f"unknown store backend: {backend!r}")


def export_record(record: QueryRecord, format: str) -> bytes:
    """Serialize one record for download; deterministic byte-for-byte."""
    if format == "jsonlines":
        return _export_jsonlines(record)
    if format == "csv":
        return _export_csv(record)
    raise ValueError(f"unknown export format: {format!r}")


def _export_jsonlines(record: QueryRecord) -> bytes:
    header = {
        "id": record.id,
        "query": record.query,
        "created_at": format_timestamp(record.created_at),
    }
    lines = [json.dumps(header, ensure_ascii=False)]
    lines.extend(
        json.dumps(r.profile.to_json(), ensure_ascii=False) for r in record.results
    )
    return ("\n".join(lines) + "\n").encode("utf-8")


def _csv_field(value: str) -> str:
    # Minimal quoting, LF rows: a field is quoted iff it contains the
    # delimiter, a quote, or a newline character (LF or CR); inner
    # quotes are doubled. csv.writer with an LF terminator would leave
    # bare CRs unquoted, which standard readers then misparse.
    if any(c in value for c in ',"\n\r'):
        return '"' + value.replace('"', '""') + '"'
    return value


def _export_csv(record: QueryRecord) -> bytes:
    lines = [",".join(CSV_HEADER)]
    for ranked in record.results:
        p = ranked.profile
        fields = [
            record.id,
            record.query,
            p.platform.value,
            p.handle,
            p.display_name,
            p.bio,
            str(p.followers),
            str(p.following),
            p.location if p.location is not None else "",
            format_timestamp(p.retrieved_at),
        ]
        lines.append(",".join(_csv_field(f) for f in fields))
    return ("\n".join(lines) + "\n").encode("utf-8")
