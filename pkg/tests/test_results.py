import csv
import json
import math

import pytest

from src.core.errors import ConfigurationError, EmitError
from src.harness.results import CSV_HEADER, emit_results, format_number

ROWS = [
    {"axis": "K", "value": 25, "seed": 0, "scheme": "hybrid", "rate_bps_hz": 0.1 + 0.2,
     "outer_iters": 7, "wall_ms": 0.0, "flags": "", "success": True},
    {"axis": "K", "value": 25, "seed": 0, "scheme": "tdma", "rate_bps_hz": math.nan,
     "outer_iters": 0, "wall_ms": 0.0, "flags": "error:DomainError", "success": False},
]


def test_format_number():
    assert format_number(True) == "1"
    assert format_number(12) == "12"
    assert format_number(0.1) == "0.1"
    assert format_number(math.nan) == "nan"
    assert format_number("hybrid") == "hybrid"


def test_empty_table_writes_header_only(tmp_path):
    (path,) = emit_results([], tmp_path / "empty", "csv")
    assert path.name == "empty.csv"
    assert path.read_bytes() == (",".join(CSV_HEADER) + "\n").encode("utf-8")


def test_csv_round_trips_floats(tmp_path):
    (path,) = emit_results(ROWS, tmp_path / "table")
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert float(rows[0]["rate_bps_hz"]) == 0.1 + 0.2
    assert rows[1]["rate_bps_hz"] == "nan"
    assert rows[1]["flags"] == "error:DomainError"
    assert "success" not in rows[0]
    assert b"\r\n" not in path.read_bytes()


def test_identical_tables_give_identical_bytes(tmp_path):
    summary = {"rows": 2, "mean": 0.5}
    a = emit_results(ROWS, tmp_path / "a" / "t", summary=summary)
    b = emit_results(ROWS, tmp_path / "b" / "t", summary=summary)
    assert [p.read_bytes() for p in a] == [p.read_bytes() for p in b]


def test_json_format_and_summary(tmp_path):
    paths = emit_results(ROWS, tmp_path / "table", "json", summary={"gain": math.inf, "rows": 2})
    assert [p.name for p in paths] == ["table.json", "table_summary.json"]

    rows = json.loads(paths[0].read_text(encoding="utf-8"))
    assert rows[0]["rate_bps_hz"] == 0.1 + 0.2
    assert rows[1]["rate_bps_hz"] is None
    assert list(rows[0]) == list(CSV_HEADER)

    summary = json.loads(paths[1].read_text(encoding="utf-8"))
    assert summary == {"gain": None, "rows": 2}


def test_custom_columns(tmp_path):
    (path,) = emit_results([{"iteration": 0, "F": 1.5}], tmp_path / "trace", columns=("iteration", "F"))
    assert path.read_text(encoding="utf-8") == "iteration,F\n0,1.5\n"


def test_unknown_format(tmp_path):
    with pytest.raises(ConfigurationError):
        emit_results(ROWS, tmp_path / "t", "xlsx")


def test_unwritable_target_raises(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("", encoding="utf-8")
    with pytest.raises(EmitError):
        emit_results(ROWS, blocker / "t")
