"""CSV ingestion/export and the key-value config format."""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError, MalformedInput, NonFiniteInput
from .lasso import Dataset, standardize


def read_dataset_csv(path, response: str, columns=None) -> Dataset:
    """Read a header-row CSV of numeric columns and standardize it.

    ``columns`` restricts the covariates (default: every column except the
    response). Errors name the file line and column.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MalformedInput(f"{path}: empty file") from None
        if len(set(header)) != len(header):
            raise MalformedInput(f"{path}: duplicate column names in header")
        if response not in header:
            raise MalformedInput(f"{path}: response column {response!r} not in header")
        if columns is None:
            columns = [h for h in header if h != response]
        missing = [c for c in columns if c not in header]
        if missing:
            raise MalformedInput(f"{path}: unknown columns {missing}")
        if not columns:
            raise MalformedInput(f"{path}: no covariate columns")
        pos = [header.index(c) for c in columns]
        y_pos = header.index(response)
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise MalformedInput(
                    f"{path}: line {line_no} has {len(row)} fields, header has {len(header)}")
            values = []
            for j in pos + [y_pos]:
                cell = row[j].strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise MalformedInput(
                        f"{path}: line {line_no}, column {header[j]!r}: "
                        f"not a number: {cell!r}") from None
                if not math.isfinite(v):
                    err = NonFiniteInput(line_no, header[j])
                    err.args = (f"{path}: line {line_no}, column {header[j]!r}: "
                                f"non-finite value {cell!r}",)
                    raise err
                values.append(v)
            rows.append(values)
    if len(rows) < 2:
        raise MalformedInput(f"{path}: need at least 2 data rows, found {len(rows)}")
    arr = np.array(rows)
    return standardize(arr[:, :-1], arr[:, -1], names=list(columns), response_name=response)


def fmt(value) -> str:
    """Shortest text that parses back to exactly the same float."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return repr(v) if math.isfinite(v) else ("nan" if math.isnan(v) else str(v))
    return str(value)


def write_csv(path, header, rows, comments=()) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def read_csv_rows(path) -> tuple[list[str], list[list[str]]]:
    """Header and rows of a CSV written by :func:`write_csv` (comments skipped)."""
    with Path(path).open(newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    return header, [row for row in reader]


def parse_kv_config(text: str) -> dict[str, tuple[str, int]]:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Returns ``{key: (value, line_number)}``.
    """
    out: dict[str, tuple[str, int]] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=line_no)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError("missing key before '='", line=line_no)
        if key in out:
            raise ConfigError(f"duplicate key {key!r} (first set on line {out[key][1]})",
                              line=line_no, key=key)
        out[key] = (value, line_no)
    return out
