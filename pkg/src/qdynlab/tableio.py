"""Streamed result tables with reproducible bytes.

Both formats carry a metadata header and then plain rows.  CSV puts the
metadata on a single leading ``#`` line (JSON-encoded) so the rest of the
file is an RFC-4180 table; JSON nests the same metadata next to a columns
list and a row array.  Floats are rendered with repr, the shortest
round-tripping form, so identical runs produce identical bytes.  Rows are
consumed lazily from any iterable and written as they come - tables never
need to fit in memory.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from typing import IO, Dict, Iterable, Iterator, List, Sequence, Tuple

from .errors import ConfigError, ValidationError

FORMATS = ("csv", "json")


def config_hash(config: Dict[str, object]) -> str:
    """sha256 over the canonical JSON form of a flat config mapping."""
    try:
        canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config is not hashable as JSON: {exc}") from None
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _cell(value: object) -> object:
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValidationError(f"non-finite value {value!r} cannot be emitted")
        return value
    raise ValidationError(f"unsupported cell type {type(value).__name__}")


def _format_cell(value: object) -> str:
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def emit_table(stream: IO[str], meta: Dict[str, object], columns: Sequence[str],
               rows: Iterable[Sequence[object]], fmt: str = "csv") -> int:
    """Write one table; returns the number of data rows written."""
    if fmt not in FORMATS:
        raise ConfigError(f"unknown output format {fmt!r}; choose from {FORMATS}")
    columns = list(columns)
    if not columns:
        raise ValidationError("a table needs at least one column")
    n = 0
    if fmt == "csv":
        stream.write("# " + json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n")
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            cells = [_format_cell(_cell(v)) for v in row]
            if len(cells) != len(columns):
                raise ValidationError(
                    f"row has {len(cells)} cells for {len(columns)} columns")
            writer.writerow(cells)
            n += 1
    else:
        stream.write('{"meta": ')
        stream.write(json.dumps(meta, sort_keys=True, separators=(",", ":")))
        stream.write(', "columns": ')
        stream.write(json.dumps(columns, separators=(",", ":")))
        stream.write(', "rows": [')
        for row in rows:
            cells = [_cell(v) for v in row]
            if len(cells) != len(columns):
                raise ValidationError(
                    f"row has {len(cells)} cells for {len(columns)} columns")
            if n:
                stream.write(", ")
            stream.write(json.dumps(cells, separators=(",", ":")))
            n += 1
        stream.write("]}\n")
    return n


def parse_table(stream: IO[str]) -> Tuple[Dict[str, object], List[str], List[List[object]]]:
    """Read back either format, sniffing by the first character."""
    first = stream.read(1)
    if not first:
        raise ValidationError("empty table stream")
    rest = stream.read()
    text = first + rest
    if first == "{":
        doc = json.loads(text)
        for key in ("meta", "columns", "rows"):
            if key not in doc:
                raise ValidationError(f"JSON table missing {key!r}")
        return doc["meta"], list(doc["columns"]), [list(r) for r in doc["rows"]]
    if first != "#":
        raise ValidationError("table must start with '#' (csv) or '{' (json)")
    lines = text.splitlines()
    meta = json.loads(lines[0][1:].strip())
    reader = csv.reader(lines[1:])
    table = [row for row in reader if row]
    if not table:
        raise ValidationError("csv table has no header row")
    columns = table[0]
    rows: List[List[object]] = []
    for raw in table[1:]:
        rows.append([_parse_cell(c) for c in raw])
    return meta, columns, rows


def _parse_cell(text: str) -> object:
    if text == "":
        return None
    if text == "True":
        return True
    if text == "False":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def dict_rows(rows: Iterable[Dict[str, object]],
              columns: Sequence[str]) -> Iterator[List[object]]:
    """Adapt an iterable of row dicts to the positional layout emit_table wants."""
    for row in rows:
        yield [row[c] for c in columns]
