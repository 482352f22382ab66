import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gdnls import storage
from gdnls.diagnostics import CSV_COLUMNS, NormLedgerEntry
from gdnls.errors import GdnlsError
from gdnls.grid import ComplexField, Grid

G = Grid(10.0, 64)


@settings(max_examples=30, deadline=None)
@given(arrays(np.complex128, 64, elements=st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False)),
       st.floats(0, 100))
def test_snapshot_round_trip_is_bit_exact(tmp_path_factory, values, t):
    path = tmp_path_factory.mktemp("snap") / "u.bin"
    storage.write_snapshot(path, ComplexField(G, values), t)
    u, t2 = storage.read_snapshot(path)
    assert t2 == t and u.grid == G
    assert u.values.tobytes() == np.asarray(values, dtype=np.complex128).tobytes()


def test_snapshot_layout(tmp_path):
    path = tmp_path / "u.bin"
    u = ComplexField(G, np.arange(64) + 1j)
    checksum = storage.write_snapshot(path, u, 0.5)
    raw = path.read_bytes()
    header, payload = raw.split(b"\n", 1)
    meta = json.loads(header)
    assert meta == {"n": 64, "L": 10.0, "t": 0.5, "checksum": checksum}
    pairs = np.frombuffer(payload, dtype="<f8")
    assert pairs[0] == 0.0 and pairs[1] == 1.0 and pairs[2] == 1.0


def test_snapshot_corruption_detected(tmp_path):
    path = tmp_path / "u.bin"
    storage.write_snapshot(path, ComplexField(G, np.ones(64)), 0.0)
    raw = bytearray(path.read_bytes())
    raw[-1] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(GdnlsError, match="checksum"):
        storage.read_snapshot(path)


def _entry(t):
    return NormLedgerEntry(t, 1.0, float("nan"), 0.1, 2.0, 0.3, 0.4, 0.5, 0.6, 0.01)


def test_ledger_round_trip(tmp_path):
    path = tmp_path / "ledger.csv"
    with storage.LedgerWriter(path) as w:
        w.write(_entry(0.0), True, True)
        w.write(_entry(0.1), False, None)
    rows = storage.read_ledger(path)
    assert path.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
    assert len(rows) == 2
    assert rows[1]["t"] == 0.1 and rows[1]["inside_ball"] is False and rows[1]["lower_bound_ok"] is None
    assert np.isnan(rows[0]["energy"])


def test_ledger_is_readable_while_open(tmp_path):
    path = tmp_path / "ledger.csv"
    w = storage.LedgerWriter(path)
    w.write(_entry(0.0), True, True)
    assert len(storage.read_ledger(path)) == 1
    w.close()


def test_ledger_rejects_foreign_csv(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(GdnlsError):
        storage.read_ledger(path)


def test_json_atomic_and_checksums(tmp_path):
    storage.write_json_atomic(tmp_path / "m.json", {"x": np.float64(1.5), "b": np.bool_(True), "z": 1j})
    assert json.loads((tmp_path / "m.json").read_text()) == {"x": 1.5, "b": True, "z": [0.0, 1.0]}
    assert not (tmp_path / "m.json.tmp").exists()
    sums = storage.checksums(tmp_path, ["m.json", "absent"])
    assert list(sums) == ["m.json"] and sums["m.json"].startswith("sha256:")


def test_read_manifest_missing(tmp_path):
    with pytest.raises(GdnlsError):
        storage.read_manifest(tmp_path)
