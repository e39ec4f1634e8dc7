"""
Parameter sweeps - BD-IRS THz Simulator

A sweep spec names one axis, the values to visit, the schemes to compare and
the seeds to average over:

    sweeps:
      - name: rate_vs_k
        axis: K
        values: [25, 49, 64, 100]
        schemes: [hybrid, tdma, fdma]
        seeds: [0, 1, 2]
        overrides: {P_max_dbm: 20}

Axes K, M, P_max (dBm) and f_c (Hz) produce one row per
(value, seed, scheme). The `iterations` axis produces convergence traces:
values holds a single iteration cap and each row is one outer iteration.

Rows are always returned sorted by (value index, seed index, scheme index),
whatever order the workers finish in.
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import yaml
from tqdm import tqdm

from src.baselines.schemes import SCHEMES, run_scheme
from src.core.errors import ConfigurationError
from src.core.system_config import SystemConfig
from src.harness.scenario import build_channels
from src.solver.bcd import SolveOptions

logger = logging.getLogger(__name__)

ITERATIONS = "iterations"
AXIS_KEYS = {"K": "K", "M": "M", "P_max": "P_max_dbm", "f_c": "f_c"}
AXES = tuple(AXIS_KEYS) + (ITERATIONS,)
INTEGER_AXES = {"K", "M", ITERATIONS}


@dataclass(frozen=True)
class SweepSpec:
    name: str
    axis: str
    values: Tuple[Union[int, float], ...]
    schemes: Tuple[str, ...] = SCHEMES
    seeds: Tuple[int, ...] = (0,)
    overrides: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.name or any(c in self.name for c in "/\\"):
            raise ConfigurationError(f"Sweep name must be a plain file stem (got {self.name!r})")
        if self.axis not in AXES:
            raise ConfigurationError(f"Sweep '{self.name}': unknown axis '{self.axis}' (expected one of {AXES})")
        if not self.values:
            raise ConfigurationError(f"Sweep '{self.name}': values must be nonempty")
        if not self.seeds:
            raise ConfigurationError(f"Sweep '{self.name}': seeds must be nonempty")
        if not self.schemes:
            raise ConfigurationError(f"Sweep '{self.name}': schemes must be nonempty")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise ConfigurationError(f"Sweep '{self.name}': unknown scheme(s) {bad}")
        if self.axis == ITERATIONS and len(self.values) != 1:
            raise ConfigurationError(f"Sweep '{self.name}': the iterations axis takes a single iteration cap")
        if self.axis != ITERATIONS and AXIS_KEYS[self.axis] in self.overrides:
            raise ConfigurationError(f"Sweep '{self.name}': overrides must not fix the swept key")

        try:
            cast = int if self.axis in INTEGER_AXES else float
            values = tuple(cast(float(v)) for v in self.values)
            seeds = tuple(int(s) for s in self.seeds)
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"Sweep '{self.name}': non-numeric value or seed ({e})") from e
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "seeds", seeds)
        object.__setattr__(self, "schemes", tuple(self.schemes))
        object.__setattr__(self, "overrides", dict(self.overrides))

    @classmethod
    def from_mapping(cls, data: Dict[str, Any]) -> "SweepSpec":
        known = {"name", "axis", "values", "schemes", "seeds", "overrides"}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"Unknown sweep key(s): {sorted(unknown)}")
        try:
            return cls(
                name=str(data["name"]),
                axis=str(data["axis"]),
                values=tuple(data["values"]),
                schemes=tuple(data.get("schemes", SCHEMES)),
                seeds=tuple(data.get("seeds", (0,))),
                overrides=dict(data.get("overrides") or {}),
            )
        except KeyError as e:
            raise ConfigurationError(f"Sweep entry is missing required key {e}") from e
        except TypeError as e:
            raise ConfigurationError(f"Malformed sweep entry: {e}") from e


def load_sweep_specs(path: Union[str, Path]) -> List[SweepSpec]:
    path = Path(path)
    if not path.is_absolute() and not path.exists():
        path = Path(__file__).resolve().parents[2] / path
    if not path.exists():
        raise ConfigurationError(f"Sweep spec file not found: {path}")

    with open(path, "r", encoding="utf-8") as f:
        try:
            data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Sweep spec {path} is not valid YAML: {e}") from e

    entries = data.get("sweeps") if isinstance(data, dict) else None
    if not isinstance(entries, list) or not entries:
        raise ConfigurationError(f"Sweep spec {path} needs a nonempty 'sweeps:' list")

    specs = [SweepSpec.from_mapping(entry) for entry in entries]
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ConfigurationError(f"Duplicate sweep names in {path}: {names}")

    logger.info(f"[Sweep] Loaded {len(specs)} sweep spec(s) from {path.name}")
    return specs


# ---------------------------------------------------------------------
# Single point
# ---------------------------------------------------------------------
def point_config(spec: SweepSpec, cfg: SystemConfig, value: Union[int, float], seed: int) -> SystemConfig:
    overrides = dict(spec.overrides)
    overrides["seed"] = seed
    if spec.axis == ITERATIONS:
        overrides["max_outer"] = int(value)
    else:
        overrides[AXIS_KEYS[spec.axis]] = value
    return cfg.with_overrides(**overrides)


def _failed_row(spec: SweepSpec, value, seed: int, scheme: str, error: Exception) -> Dict[str, Any]:
    return {
        "axis": spec.axis,
        "value": value,
        "seed": seed,
        "scheme": scheme,
        "rate_bps_hz": math.nan,
        "outer_iters": 0,
        "wall_ms": 0.0,
        "flags": f"error:{type(error).__name__}",
        "success": False,
        "error": str(error),
    }


def run_point(task: Tuple[SweepSpec, SystemConfig, int, int, str]) -> List[Dict[str, Any]]:
    """
    Solve one (value, seed, scheme). Returns one row, or one row per outer
    iteration on the iterations axis. Exceptions become a single flagged row.
    """
    spec, cfg, value_index, seed, scheme = task
    value = spec.values[value_index]
    try:
        point = point_config(spec, cfg, value, seed)
        start = time.perf_counter()
        result = run_scheme(scheme, build_channels(point, seed), point, SolveOptions.from_config(point))
        wall_ms = (time.perf_counter() - start) * 1000.0 if point.timing else 0.0
    except Exception as e:
        logger.warning(f"[SweepRunner] {spec.name}: {spec.axis}={value} seed={seed} {scheme} failed: {e}")
        return [_failed_row(spec, value, seed, scheme, e)]

    flags = ";".join(result.flags)
    if spec.axis == ITERATIONS:
        return [
            {
                "axis": spec.axis,
                "value": i,
                "seed": seed,
                "scheme": scheme,
                "rate_bps_hz": F,
                "outer_iters": result.outer_iterations,
                "wall_ms": wall_ms,
                "flags": flags,
                "success": True,
            }
            for i, F in enumerate(_padded(result.combined_trace(), int(value) + 1))
        ]

    return [{
        "axis": spec.axis,
        "value": value,
        "seed": seed,
        "scheme": scheme,
        "rate_bps_hz": result.rate,
        "outer_iters": result.outer_iterations,
        "wall_ms": wall_ms,
        "flags": flags,
        "success": True,
    }]


def _padded(trace: Sequence[float], length: int) -> List[float]:
    trace = list(trace)
    return trace + [trace[-1]] * (length - len(trace))


# ---------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------
class SweepRunner:
    """Runs sweep specs serially or on a process pool; failures are recorded, not raised."""

    def __init__(self, cfg: SystemConfig, workers: int = 1, progress: bool = True):
        if workers < 1:
            raise ConfigurationError(f"workers must be >= 1 (got {workers})")
        self.cfg = cfg
        self.workers = workers
        self.progress = progress

    def _tasks(self, spec: SweepSpec) -> List[Tuple[SweepSpec, SystemConfig, int, int, str]]:
        return [
            (spec, self.cfg, vi, seed, scheme)
            for vi in range(len(spec.values))
            for seed in spec.seeds
            for scheme in spec.schemes
        ]

    def run_sweep(self, spec: SweepSpec) -> List[Dict[str, Any]]:
        tasks = self._tasks(spec)
        logger.info("=" * 80)
        logger.info(
            f"[SweepRunner] {spec.name}: axis={spec.axis}, {len(spec.values)} value(s) x "
            f"{len(spec.seeds)} seed(s) x {len(spec.schemes)} scheme(s), workers={self.workers}"
        )
        logger.info("=" * 80)

        bar = tqdm(total=len(tasks), desc=spec.name, disable=not self.progress or None, leave=False)
        results: List[List[Dict[str, Any]]] = []
        if self.workers == 1:
            for task in tasks:
                results.append(run_point(task))
                bar.update(1)
        else:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                for rows in pool.map(run_point, tasks):
                    results.append(rows)
                    bar.update(1)
        bar.close()

        seed_index = {s: i for i, s in enumerate(spec.seeds)}
        scheme_index = {s: i for i, s in enumerate(spec.schemes)}
        keyed = []
        for (_, _, vi, seed, scheme), rows in zip(tasks, results):
            for row in rows:
                keyed.append(((vi, seed_index[seed], scheme_index[scheme], row["value"]), row))
        keyed.sort(key=lambda kv: kv[0])
        table = [row for _, row in keyed]

        failures = sum(1 for row in table if not row["success"])
        if failures:
            logger.warning(f"[SweepRunner] {spec.name}: {failures} flagged row(s)")
        logger.info(f"[SweepRunner] {spec.name}: {len(table)} row(s)")
        return table

    def run_all(self, specs: Sequence[SweepSpec]) -> Dict[str, List[Dict[str, Any]]]:
        return {spec.name: self.run_sweep(spec) for spec in specs}


def run_sweep(spec: SweepSpec, cfg: SystemConfig, workers: int = 1, progress: bool = False) -> List[Dict[str, Any]]:
    return SweepRunner(cfg, workers=workers, progress=progress).run_sweep(spec)


def convergence_rows(spec: SweepSpec, cfg: SystemConfig, workers: int = 1) -> List[Dict[str, Any]]:
    """Surrogate value per outer iteration for each (seed, scheme); spec.axis must be iterations."""
    if spec.axis != ITERATIONS:
        raise ConfigurationError(f"convergence_rows needs the '{ITERATIONS}' axis (got '{spec.axis}')")
    return run_sweep(spec, cfg, workers=workers)


# ---------------------------------------------------------------------
# Aggregates
# ---------------------------------------------------------------------
def _pct_change(new: float, old: float) -> Optional[float]:
    if old is None or new is None or old <= 0:
        return None
    return 100.0 * (new - old) / old


def summarize(table: Sequence[Dict[str, Any]], spec: Optional[SweepSpec] = None) -> Dict[str, Any]:
    """
    Per (axis value, scheme): mean/std/count/failures of the rate. Also the
    mean gain of hybrid over each orthogonal scheme per axis value and the
    average percentage change between consecutive axis values per scheme.
    """
    values: List[Any] = []
    schemes: List[str] = []
    groups: Dict[Tuple[Any, str], List[Dict[str, Any]]] = {}
    for row in table:
        if row["value"] not in values:
            values.append(row["value"])
        if row["scheme"] not in schemes:
            schemes.append(row["scheme"])
        groups.setdefault((row["value"], row["scheme"]), []).append(row)

    points = []
    means: Dict[Tuple[Any, str], Optional[float]] = {}
    for value in values:
        for scheme in schemes:
            rows = groups.get((value, scheme), [])
            if not rows:
                continue
            rates = np.array([r["rate_bps_hz"] for r in rows if r["success"]], dtype=float)
            mean = float(np.mean(rates)) if rates.size else None
            means[(value, scheme)] = mean
            points.append({
                "value": value,
                "scheme": scheme,
                "mean": mean,
                "std": float(np.std(rates)) if rates.size else None,
                "count": int(rates.size),
                "failures": len(rows) - int(rates.size),
            })

    gains = []
    if "hybrid" in schemes:
        for value in values:
            for other in schemes:
                if other == "hybrid":
                    continue
                gain = _pct_change(means.get((value, "hybrid")), means.get((value, other)))
                gains.append({"value": value, "versus": other, "gain_pct": gain})

    axis_change = {}
    for scheme in schemes:
        steps = [
            _pct_change(means.get((b, scheme)), means.get((a, scheme)))
            for a, b in zip(values, values[1:])
        ]
        steps = [s for s in steps if s is not None]
        axis_change[scheme] = float(np.mean(steps)) if steps else None

    summary = {
        "rows": len(table),
        "failures": sum(1 for r in table if not r["success"]),
        "points": points,
        "hybrid_gain": gains,
        "mean_change_pct_per_step": axis_change,
    }
    if spec is not None:
        summary.update({"name": spec.name, "axis": spec.axis, "seeds": list(spec.seeds)})
    return summary
