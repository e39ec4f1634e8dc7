"""
Result emission - BD-IRS THz Simulator

CSV layout (UTF-8, LF line endings, '.' decimal point, no locale):

    axis,value,seed,scheme,rate_bps_hz,outer_iters,wall_ms,flags

Floats are written with repr() so they round-trip exactly; failed rows carry
rate 'nan' and an 'error:<Type>' flag. Summaries are JSON with sorted keys.
Identical tables give byte-identical files.
"""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from src.core.errors import ConfigurationError, EmitError

logger = logging.getLogger(__name__)

CSV_HEADER = ("axis", "value", "seed", "scheme", "rate_bps_hz", "outer_iters", "wall_ms", "flags")
FORMATS = ("csv", "json")


def format_number(x: Any) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return repr(x)
    return str(x)


def _json_safe(obj: Any) -> Any:
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _open_for_write(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as e:
        logger.error(f"[Results] Cannot write {path}: {e}")
        raise EmitError(f"Cannot open output file: {e.strerror or e}", path) from e


def write_csv(rows: Sequence[Dict[str, Any]], path: Union[str, Path], columns: Sequence[str] = CSV_HEADER) -> Path:
    path = Path(path)
    f = _open_for_write(path)
    try:
        with f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([format_number(row.get(col, "")) for col in columns])
    except OSError as e:
        logger.error(f"[Results] Write failed for {path}: {e}")
        raise EmitError(f"Write failed: {e}", path) from e
    return path


def write_json(obj: Any, path: Union[str, Path]) -> Path:
    path = Path(path)
    f = _open_for_write(path)
    try:
        with f:
            json.dump(_json_safe(obj), f, indent=2, sort_keys=True, ensure_ascii=False)
            f.write("\n")
    except (OSError, TypeError, ValueError) as e:
        logger.error(f"[Results] Write failed for {path}: {e}")
        raise EmitError(f"Write failed: {e}", path) from e
    return path


def emit_results(
    table: Sequence[Dict[str, Any]],
    path: Union[str, Path],
    fmt: str = "csv",
    summary: Optional[Dict[str, Any]] = None,
    columns: Sequence[str] = CSV_HEADER,
) -> List[Path]:
    """
    Write the table to path (suffix follows fmt) and, if given, the summary
    next to it as <stem>_summary.json. Returns the written paths.
    """
    if fmt not in FORMATS:
        raise ConfigurationError(f"Unknown output format '{fmt}' (expected one of {FORMATS})")

    path = Path(path)
    target = path.with_suffix(f".{fmt}")
    if fmt == "csv":
        written = [write_csv(table, target, columns)]
    else:
        rows = [{col: row.get(col) for col in columns} for row in table]
        written = [write_json(rows, target)]

    if summary is not None:
        written.append(write_json(summary, target.with_name(f"{target.stem}_summary.json")))

    for p in written:
        logger.info(f"[Results] Wrote {p}")
    return written
