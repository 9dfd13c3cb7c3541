"""Reading frames from CSV and JSONL, one record at a time."""

from __future__ import annotations

import csv
import json
from typing import IO, Iterator, Optional

from .core import Frame, SamplingError, UnitRecord


class RecordError(SamplingError):
    """A malformed input record; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _number(raw, line: int, name: str, optional: bool = False) -> Optional[float]:
    if raw is None or (isinstance(raw, str) and raw.strip() == ""):
        if optional:
            return None
        raise RecordError(line, f"missing {name!r}")
    if isinstance(raw, bool):
        raise RecordError(line, f"{name!r} must be a number, got {raw!r}")
    if isinstance(raw, (int, float)):
        return float(raw)
    try:
        # float() accepts only '.' as decimal separator regardless of locale
        return float(raw.strip())
    except ValueError:
        raise RecordError(line, f"{name!r} is not a number: {raw!r}") from None


def _record(d: dict, line: int, value_key: str) -> UnitRecord:
    if "id" not in d or d["id"] in (None, ""):
        raise RecordError(line, "missing 'id'")
    value = _number(d.get(value_key), line, value_key)
    y = _number(d.get("y"), line, "y", optional=True)
    try:
        return UnitRecord(str(d["id"]), value, y)
    except SamplingError as exc:
        raise RecordError(line, str(exc)) from None


def _csv_rows(stream: IO[str], value_key: str) -> Iterator[tuple[int, dict]]:
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        return
    missing = {"id", value_key} - set(reader.fieldnames)
    if missing:
        raise RecordError(1, f"header lacks column(s) {sorted(missing)}")
    for row in reader:
        yield reader.line_num, row


def _jsonl_rows(stream: IO[str]) -> Iterator[tuple[int, dict]]:
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RecordError(line_no, f"invalid JSON ({exc.msg})") from None
        if not isinstance(d, dict):
            raise RecordError(line_no, "expected a JSON object")
        yield line_no, d


def iter_csv(stream: IO[str], value_key: str = "pi") -> Iterator[UnitRecord]:
    for line, row in _csv_rows(stream, value_key):
        yield _record(row, line, value_key)


def iter_jsonl(stream: IO[str], value_key: str = "pi") -> Iterator[UnitRecord]:
    for line, d in _jsonl_rows(stream):
        yield _record(d, line, value_key)


def iter_sizes(stream: IO[str], fmt: str = "csv") -> Iterator[tuple[str, float, Optional[float]]]:
    """``(id, x, y)`` triples for a size variable ``x`` (any positive value)."""
    rows = _csv_rows(stream, "x") if fmt == "csv" else _jsonl_rows(stream)
    for line, d in rows:
        if "id" not in d or d["id"] in (None, ""):
            raise RecordError(line, "missing 'id'")
        x = _number(d.get("x"), line, "x")
        if not x > 0:
            raise RecordError(line, f"size x must be positive, got {x}")
        yield str(d["id"]), x, _number(d.get("y"), line, "y", optional=True)


def iter_records(stream: IO[str], fmt: str = "csv", value_key: str = "pi") -> Iterator[UnitRecord]:
    """Lazily parse ``stream``; nothing is buffered beyond the current record."""
    if fmt == "csv":
        return iter_csv(stream, value_key)
    if fmt == "jsonl":
        return iter_jsonl(stream, value_key)
    raise ValueError(f"unknown format {fmt!r}")


def read_frame(stream: IO[str], fmt: str = "csv") -> Frame:
    return Frame(tuple(iter_records(stream, fmt)))


def write_frame_csv(frame: Frame, stream: IO[str]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    has_y = any(u.y is not None for u in frame.units)
    w.writerow(["id", "pi", "y"] if has_y else ["id", "pi"])
    for u in frame.units:
        row = [u.id, repr(u.pi)]
        if has_y:
            row.append("" if u.y is None else repr(u.y))
        w.writerow(row)
