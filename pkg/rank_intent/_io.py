"""File formats: JSONL corpora, TSV queries / intents / tables, atomic writes."""

from __future__ import annotations

import contextlib
import csv
import io
import json
import os
import tempfile
from collections.abc import Iterable, Iterator, Sequence
from pathlib import Path
from typing import Any

from rank_intent._errors import DataError


def read_corpus(path: str | os.PathLike[str]) -> Iterator[tuple[str, str]]:
    """Yield ``(doc_id, text)`` from a file holding one ``{"id", "text"}`` object per line."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                doc_id, text = obj["id"], obj["text"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: bad corpus record ({exc})") from None
            if not isinstance(text, str):
                raise DataError(f"{path}:{lineno}: 'text' must be a string")
            yield str(doc_id), text


def write_corpus(path: str | os.PathLike[str], documents: Iterable[tuple[str, str]]) -> None:
    lines = [json.dumps({"id": doc_id, "text": text}) for doc_id, text in documents]
    atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def read_queries(path: str | os.PathLike[str]) -> list[tuple[str, str]]:
    """Read ``query_id<TAB>text`` lines."""
    queries: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            query_id, sep, text = line.partition("\t")
            if not sep or not query_id:
                raise DataError(f"{path}:{lineno}: expected 'query_id<TAB>text'")
            queries.append((query_id, text))
    return queries


def write_queries(path: str | os.PathLike[str], queries: Iterable[tuple[str, str]]) -> None:
    atomic_write_text(path, "".join(f"{qid}\t{text}\n" for qid, text in queries))


def read_intents(path: str | os.PathLike[str]) -> dict[str, tuple[str, ...]]:
    """Read ``query_id<TAB>term1<TAB>...`` lines into a query_id -> terms map."""
    intents: dict[str, tuple[str, ...]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = [f for f in line.rstrip("\n").split("\t") if f]
            if not fields:
                continue
            if len(fields) < 2:
                raise DataError(f"{path}:{lineno}: intent line has no terms")
            if fields[0] in intents:
                raise DataError(f"{path}:{lineno}: duplicate query id {fields[0]!r}")
            intents[fields[0]] = tuple(fields[1:])
    return intents


def write_intents(
    path: str | os.PathLike[str], intents: Iterable[tuple[str, Sequence[str]]]
) -> None:
    atomic_write_text(path, "".join("\t".join([qid, *terms]) + "\n" for qid, terms in intents))


def write_table(
    path: str | os.PathLike[str],
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    *,
    delimiter: str = "\t",
) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    atomic_write_text(path, buf.getvalue())


def read_table(
    path: str | os.PathLike[str], *, delimiter: str = "\t"
) -> tuple[list[str], list[list[str]]]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty table") from None
        return header, [row for row in reader if row]


def dump_json(obj: Any) -> str:
    # sorted keys + fixed separators: identical inputs give identical bytes
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def atomic_write_text(path: str | os.PathLike[str], text: str) -> None:
    """Write via a sibling temp file and ``os.replace`` so readers never see a partial file."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def _cell(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)

