"""Line-delimited corpus store.

Format "ndcorpus/1": a one-line version header followed by one JSON object
per record, UTF-8, fixed field order, compact separators.  The bytes are a
pure function of the record sequence, so stores can be diffed and re-written
byte-identically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .records import AuthorMention, BibRecord

STORE_VERSION = "ndcorpus/1"


class CorpusStoreError(Exception):
    """Store-level failure; carries the offending path and line number."""

    def __init__(self, message: str, path: str | Path, line_no: int | None = None):
        at = f"{path}" if line_no is None else f"{path}:{line_no}"
        super().__init__(f"{message} ({at})")
        self.path = str(path)
        self.line_no = line_no


@dataclass(frozen=True)
class StoreSummary:
    records: int
    author_mentions: int


def record_to_json(record: BibRecord) -> str:
    payload = {
        "key": record.record_key,
        "kind": record.kind,
        "title": record.title,
        "source": record.source,
        "year": record.year,
        "authors": [m.display_name for m in record.authors],
    }
    return json.dumps(payload, ensure_ascii=False, separators=(",", ":"))


def record_from_json(payload: dict) -> BibRecord:
    return BibRecord(
        record_key=payload["key"],
        kind=payload["kind"],
        title=payload["title"],
        source=payload["source"],
        year=payload["year"],
        authors=tuple(AuthorMention.from_raw(a) for a in payload["authors"]),
    )


def write_corpus_store(records: Iterable[BibRecord], path: str | Path) -> StoreSummary:
    """Write records to ``path``; returns (record count, author-mention count).

    Fails on the first duplicate record key, naming it.
    """
    path = Path(path)
    seen: set[str] = set()
    n_records = 0
    n_mentions = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(STORE_VERSION + "\n")
        for record in records:
            if record.record_key in seen:
                raise CorpusStoreError(f"duplicate record key {record.record_key!r}", path)
            seen.add(record.record_key)
            fh.write(record_to_json(record) + "\n")
            n_records += 1
            n_mentions += record.n_authors
    return StoreSummary(records=n_records, author_mentions=n_mentions)


def read_corpus_store(path: str | Path) -> Iterator[BibRecord]:
    """Yield the records of a store file in their written order."""
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        header = fh.readline()
        if header.rstrip("\n") != STORE_VERSION:
            raise CorpusStoreError(
                f"bad store header {header.rstrip() or '<empty>'!r}, expected {STORE_VERSION!r}", path, 1
            )
        for line_no, line in enumerate(fh, start=2):
            if not line.endswith("\n"):
                raise CorpusStoreError("truncated final line", path, line_no)
            try:
                payload = json.loads(line)
                record = record_from_json(payload)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorpusStoreError(f"corrupt record line: {exc}", path, line_no) from exc
            yield record


def load_corpus(path: str | Path) -> list[BibRecord]:
    return list(read_corpus_store(path))
