"""Tabular output: CSV with '#' comment headers, JSON, atomic writes."""

from __future__ import annotations

import io
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np

FLOAT_FORMAT = "%.11e"


@dataclass
class Table:
    columns: List[str]
    data: np.ndarray

    def __post_init__(self):
        self.data = np.atleast_2d(np.asarray(self.data, dtype=float))
        if self.data.size == 0:
            self.data = self.data.reshape(0, len(self.columns))
        if self.data.shape[1] != len(self.columns):
            raise ValueError(f"{len(self.columns)} columns but data has {self.data.shape[1]}")

    @classmethod
    def from_rows(cls, rows: Sequence[Dict[str, float]], columns: Sequence[str] = None) -> "Table":
        if columns is None:
            columns = []
            for row in rows:
                columns.extend(k for k in row if k not in columns)
        data = [[float(row.get(c, np.nan)) for c in columns] for row in rows]
        return cls(list(columns), np.array(data, dtype=float).reshape(len(rows), len(columns)))


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(table: Table, comments: Dict[str, str]) -> str:
    buf = io.StringIO()
    for key, val in comments.items():
        buf.write(f"# {key}: {val}\n")
    buf.write(",".join(table.columns) + "\n")
    if len(table.data):
        np.savetxt(buf, table.data, fmt=FLOAT_FORMAT, delimiter=",")
    return buf.getvalue()


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def json_text(obj, sort_keys: bool = True) -> str:
    return json.dumps(obj, indent=2, sort_keys=sort_keys, default=_json_default, allow_nan=True) + "\n"


def table_json(table: Table, comments: Dict[str, str]) -> str:
    # repr-exact floats; nan becomes null
    cols = {c: [None if np.isnan(x) else float(x) for x in table.data[:, i]]
            for i, c in enumerate(table.columns)}
    return json_text({"comments": comments, "columns": table.columns, "data": cols})


def write_table(path_stem: Path, table: Table, comments: Dict[str, str], fmt: str) -> Path:
    if fmt == "csv":
        path = Path(f"{path_stem}.csv")
        atomic_write(path, csv_text(table, comments))
    else:
        path = Path(f"{path_stem}.json")
        atomic_write(path, table_json(table, comments))
    return path


def read_csv_table(path) -> Table:
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    columns = lines[0].strip().split(",")
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2) if len(lines) > 1 else np.empty((0, len(columns)))
    return Table(columns, data)
