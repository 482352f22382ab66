"""On-disk formats: field snapshots, ledger CSV and the run manifest."""

from __future__ import annotations

import csv
import hashlib
import json
import os
from pathlib import Path
from typing import Iterable

import numpy as np

from .diagnostics import CSV_COLUMNS, NormLedgerEntry, csv_row
from .errors import GdnlsError
from .grid import ComplexField, Grid

MANIFEST = "manifest.json"
LEDGER = "ledger.csv"
CONFIG_ECHO = "config.yaml"
SNAPSHOT_DIR = "snapshots"


def sha256_bytes(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def write_snapshot(path: Path, u: ComplexField, t: float) -> str:
    """One JSON header line ``{n, L, t, checksum}`` then little-endian (re, im) float64 pairs."""
    payload = np.ascontiguousarray(u.values, dtype="<c16").tobytes()
    checksum = sha256_bytes(payload)
    header = json.dumps({"n": u.grid.n, "L": u.grid.L, "t": float(t), "checksum": checksum})
    with open(path, "wb") as fh:
        fh.write(header.encode() + b"\n")
        fh.write(payload)
    return checksum


def read_snapshot(path: Path) -> tuple[ComplexField, float]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        payload = fh.read()
    if sha256_bytes(payload) != header["checksum"]:
        raise GdnlsError(f"snapshot {path} fails its checksum")
    values = np.frombuffer(payload, dtype="<c16")
    if values.size != header["n"]:
        raise GdnlsError(f"snapshot {path} holds {values.size} values, header says {header['n']}")
    return ComplexField(Grid(header["L"], header["n"]), values.astype(np.complex128)), header["t"]


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(int(v))
    return repr(float(v))


class LedgerWriter:
    """Appends ledger rows and flushes each one, so an interrupted run leaves a parseable file."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._fh = open(self.path, "w", newline="")
        self._csv = csv.writer(self._fh, lineterminator="\n")
        self._csv.writerow(CSV_COLUMNS)
        self._fh.flush()
        self.rows = 0

    def write(self, entry: NormLedgerEntry, inside: bool | None, lower: bool | None) -> None:
        self._csv.writerow([_fmt(v) for v in csv_row(entry, inside, lower)])
        self._fh.flush()
        self.rows += 1

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_ledger(path: Path) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise GdnlsError(f"{path} does not have the ledger column layout")
        for row in reader:
            rows.append({
                k: (float(v) if k not in ("inside_ball", "lower_bound_ok") else (bool(int(v)) if v else None))
                for k, v in row.items()
            })
    return rows


def write_json_atomic(path: Path, obj) -> None:
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialise {type(o).__name__}")


def checksums(run_dir: Path, names: Iterable[str]) -> dict[str, str]:
    return {name: sha256_file(run_dir / name) for name in sorted(names) if (run_dir / name).exists()}


def read_manifest(run_dir: Path) -> dict:
    path = Path(run_dir) / MANIFEST
    if not path.exists():
        raise GdnlsError(f"{run_dir} has no {MANIFEST}")
    return json.loads(path.read_text())
