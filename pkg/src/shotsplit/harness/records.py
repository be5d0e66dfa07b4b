"""Shot-record and series files.

A shot record is stored as a CSV with header ``t,shot,z1..zQ,x1..xQ`` (rows
sorted by ``(t, shot)``, values in {-1, 1}) next to a JSON sidecar
``<name>.meta.json`` holding ``Q, N_shots, T, reservoir_seed,
sampling_seed, task`` and optionally ``series_seed`` / ``series_params``.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..quantum import ShotRecord

REQUIRED_META = ("Q", "N_shots", "T", "reservoir_seed", "sampling_seed", "task")


class RecordFormatError(ValueError):
    """Malformed shot-record file; ``row`` and ``column`` locate the problem (1-based row incl. header)."""

    def __init__(self, message, path=None, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        where = f" at {', '.join(loc)}" if loc else ""
        super().__init__(f"{path or '<record>'}{where}: {message}")
        self.path = path
        self.row = row
        self.column = column


def sidecar_path(path):
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def record_header(n_qubits):
    return ["t", "shot"] + [f"z{i}" for i in range(1, n_qubits + 1)] + [f"x{i}" for i in range(1, n_qubits + 1)]


def export_shot_record(record, path, **extra_meta):
    """Write ``record`` as CSV plus JSON sidecar; returns the sidecar path."""
    path = Path(path)
    t_steps, n_shots, width = record.outcomes.shape
    t_idx, s_idx = np.meshgrid(np.arange(t_steps), np.arange(n_shots), indexing="ij")
    table = np.column_stack([t_idx.ravel(), s_idx.ravel(), record.outcomes.reshape(-1, width)])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(record_header(record.n_qubits)) + "\n")
        np.savetxt(fh, table, fmt="%d", delimiter=",")
    meta = {
        "Q": record.n_qubits,
        "N_shots": n_shots,
        "T": t_steps,
        "reservoir_seed": record.reservoir_seed,
        "sampling_seed": record.sampling_seed,
        "task": record.task,
    }
    meta.update(record.extra or {})
    meta.update(extra_meta)
    side = sidecar_path(path)
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return side


def read_sidecar(path):
    side = sidecar_path(path)
    if not side.exists():
        raise RecordFormatError("missing sidecar file " + side.name, path=path)
    try:
        meta = json.loads(side.read_text())
    except json.JSONDecodeError as exc:
        raise RecordFormatError(f"sidecar is not valid JSON ({exc})", path=side) from None
    missing = [k for k in REQUIRED_META if k not in meta]
    if missing:
        raise RecordFormatError(f"sidecar lacks fields {missing}", path=side)
    return meta


def import_shot_record(path):
    """Parse a shot-record CSV and its sidecar, validating every cell."""
    path = Path(path)
    meta = read_sidecar(path)
    q, n_shots, t_steps = int(meta["Q"]), int(meta["N_shots"]), int(meta["T"])
    header = record_header(q)
    out = np.empty((t_steps, n_shots, 2 * q), dtype=np.int8)
    expected_rows = t_steps * n_shots
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        got = next(reader, None)
        if got != header:
            raise RecordFormatError(f"header {got} does not match expected {header}", path=path, row=1)
        n_rows = 0
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise RecordFormatError(f"expected {len(header)} fields, got {len(row)}", path=path, row=line_no)
            i = n_rows
            if i >= expected_rows:
                raise RecordFormatError(f"more than T*N_shots={expected_rows} data rows", path=path, row=line_no)
            want_t, want_s = divmod(i, n_shots)
            try:
                t, s = int(row[0]), int(row[1])
            except ValueError:
                raise RecordFormatError("t and shot must be integers", path=path, row=line_no, column="t") from None
            if (t, s) != (want_t, want_s):
                raise RecordFormatError(f"expected (t, shot) = ({want_t}, {want_s}), got ({t}, {s})", path=path, row=line_no, column="t")
            for j, cell in enumerate(row[2:]):
                try:
                    v = int(cell)
                except ValueError:
                    v = None
                if v not in (-1, 1):
                    raise RecordFormatError(f"value {cell!r} is not -1 or 1", path=path, row=line_no, column=header[2 + j])
                out[t, s, j] = v
            n_rows += 1
    if n_rows != expected_rows:
        raise RecordFormatError(f"found {n_rows} data rows, sidecar implies T*N_shots={expected_rows}", path=path)
    extra = {k: v for k, v in meta.items() if k not in REQUIRED_META}
    return ShotRecord(
        outcomes=out,
        n_qubits=q,
        n_shots=n_shots,
        reservoir_seed=meta["reservoir_seed"],
        sampling_seed=meta["sampling_seed"],
        task=meta["task"],
        executions=2 * n_shots * t_steps,
        extra=extra or None,
    )


def export_series(values, path):
    """Write a scalar series as CSV with columns ``t,value``."""
    values = np.asarray(values, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "value"])
        for t, v in enumerate(values):
            w.writerow([t, repr(float(v))])


def import_series(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["t", "value"]:
            raise RecordFormatError(f"series header must be ['t', 'value'], got {header}", path=path, row=1)
        return np.array([float(row[1]) for row in reader])
