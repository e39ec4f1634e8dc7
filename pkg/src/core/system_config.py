"""
Scenario configuration - BD-IRS THz Simulator

SystemConfig is the single source of scenario and solver settings. It is
loaded from a flat YAML mapping (configs/system.yaml) and is frozen; sweeps
and baselines derive variants through with_overrides(), which revalidates.

Unit handling: powers are given in dBm and noise density in dBm/Hz in the
file; both are converted to Watts once, here, and everything downstream works
in SI units.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import yaml

from src.core.errors import ConfigurationError

logger = logging.getLogger(__name__)

REFLECTIVE = "reflective"
TRANSMISSIVE = "transmissive"


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


@dataclass(frozen=True)
class SystemConfig:
    # Users (first N_r reflective, remaining N_t transmissive)
    N_r: int = 2
    N_t: int = 2

    # Arrays
    M: int = 100
    M_RF: int = 4
    K: int = 64

    # Radio
    f_c: float = 0.3e12
    B: float = 1.0e6
    N0_dbm_hz: float = -174.0
    P_max_dbm: float = 20.0

    # Geometry sampling (synthetic; see harness.scenario)
    d1: float = 30.0
    d2_min: float = 5.0
    d2_max: float = 20.0
    angle_min: float = -math.pi / 2
    angle_max: float = math.pi / 2

    # Solver tolerances
    eps_outer: float = 1e-4
    max_outer: int = 100
    analog_tol: float = 1e-9
    max_analog_sweeps: int = 20
    grad_tol: Optional[float] = None
    max_inner: int = 500
    max_halvings: int = 30
    mu0: float = 1.0

    seed: int = 0
    absorption_table: Optional[str] = None
    timing: bool = False

    # Derived once at ingestion
    N: int = field(init=False)
    p_max_w: float = field(init=False)
    sigma2: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "N", int(self.N_r) + int(self.N_t))
        self._validate()
        object.__setattr__(self, "p_max_w", dbm_to_watts(self.P_max_dbm))
        object.__setattr__(self, "sigma2", dbm_to_watts(self.N0_dbm_hz) * self.B)

    # ------------------------------------------------------------------
    # Validation
    # ------------------------------------------------------------------
    def _validate(self):
        if self.N_r < 0 or self.N_t < 0:
            raise ConfigurationError(f"User counts must be non-negative (N_r={self.N_r}, N_t={self.N_t})")
        if self.N < 1:
            raise ConfigurationError("At least one user is required (N_r + N_t >= 1)")
        if self.K < 1:
            raise ConfigurationError(f"IRS needs at least one element (K={self.K})")
        if self.M < 1 or self.M_RF < 1:
            raise ConfigurationError(f"BS needs antennas and RF chains (M={self.M}, M_RF={self.M_RF})")
        if self.M_RF > self.M:
            raise ConfigurationError(f"M_RF={self.M_RF} exceeds the antenna count M={self.M}")
        if self.N > self.M_RF:
            raise ConfigurationError(
                f"N={self.N} users exceed M_RF={self.M_RF} RF chains; "
                "the number of users served is limited by the number of RF chains"
            )

        for name in ("f_c", "B", "d1", "d2_min", "d2_max"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive (got {getattr(self, name)})")
        if self.d2_min > self.d2_max:
            raise ConfigurationError(f"d2_min={self.d2_min} > d2_max={self.d2_max}")
        half_pi = math.pi / 2 + 1e-12
        if not (-half_pi <= self.angle_min <= self.angle_max <= half_pi):
            raise ConfigurationError(
                f"Angle range [{self.angle_min}, {self.angle_max}] must lie inside [-pi/2, pi/2]"
            )

        for name in ("eps_outer", "analog_tol", "mu0"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive (got {getattr(self, name)})")
        if self.grad_tol is not None and not self.grad_tol > 0:
            raise ConfigurationError(f"grad_tol must be positive (got {self.grad_tol})")
        for name in ("max_outer", "max_analog_sweeps", "max_inner", "max_halvings"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1 (got {getattr(self, name)})")

    # ------------------------------------------------------------------
    # Derived views
    # ------------------------------------------------------------------
    @property
    def groups(self) -> Tuple[str, ...]:
        return (REFLECTIVE,) * self.N_r + (TRANSMISSIVE,) * self.N_t

    @property
    def effective_grad_tol(self) -> float:
        return self.grad_tol if self.grad_tol is not None else 1e-6 * self.K

    def with_overrides(self, **overrides: Any) -> "SystemConfig":
        unknown = set(overrides) - _input_fields()
        if unknown:
            raise ConfigurationError(f"Unknown config key(s): {sorted(unknown)}")
        return dataclasses.replace(self, **overrides)

    def to_dict(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in sorted(_input_fields())}

    # ------------------------------------------------------------------
    # Loading
    # ------------------------------------------------------------------
    @classmethod
    def from_mapping(cls, data: Optional[Mapping[str, Any]]) -> "SystemConfig":
        data = dict(data or {})
        unknown = set(data) - _input_fields()
        if unknown:
            raise ConfigurationError(f"Unknown config key(s): {sorted(unknown)}")
        for key, value in data.items():
            if isinstance(value, (dict, list)):
                raise ConfigurationError(f"Config key '{key}' must be a scalar (flat key: value file)")
        try:
            return cls(**_coerce(data))
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigurationError):
                raise
            raise ConfigurationError(f"Invalid config value: {e}") from e


def _input_fields():
    return {f.name for f in dataclasses.fields(SystemConfig) if f.init}


_INT_KEYS = {"N_r", "N_t", "M", "M_RF", "K", "max_outer", "max_analog_sweeps",
             "max_inner", "max_halvings", "seed"}


def _coerce(data: Dict[str, Any]) -> Dict[str, Any]:
    out = {}
    for key, value in data.items():
        if value is None:
            out[key] = None
        elif key in _INT_KEYS:
            if isinstance(value, bool) or float(value) != int(float(value)):
                raise ConfigurationError(f"Config key '{key}' must be an integer (got {value!r})")
            out[key] = int(float(value))
        elif key == "absorption_table":
            out[key] = str(value)
        elif key == "timing":
            out[key] = bool(value)
        else:
            out[key] = float(value)
    return out


def load_config(path: Optional[Union[str, Path]] = None) -> SystemConfig:
    """
    Load a flat YAML config. A missing path gives the built-in defaults.
    Relative paths are resolved against the project root.
    """
    if path is None:
        logger.info("[Config] No config file given, using defaults")
        return SystemConfig()

    path = Path(path)
    if not path.is_absolute() and not path.exists():
        path = Path(__file__).resolve().parents[2] / path
    if not path.exists():
        raise ConfigurationError(f"Config file not found: {path}")

    with open(path, "r", encoding="utf-8") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Config file {path} is not valid YAML: {e}") from e

    if data is not None and not isinstance(data, dict):
        raise ConfigurationError(f"Config file {path} must hold a key: value mapping")

    cfg = SystemConfig.from_mapping(data)
    logger.info(
        f"[Config] Loaded {path.name}: N={cfg.N} (r={cfg.N_r}, t={cfg.N_t}), M={cfg.M}, "
        f"M_RF={cfg.M_RF}, K={cfg.K}, f_c={cfg.f_c:.3g} Hz, P_max={cfg.P_max_dbm} dBm"
    )
    return cfg
