"""
Scenario generation - BD-IRS THz Simulator

Geometry is synthetic: the BS-IRS distance is fixed at cfg.d1, user
distances are uniform in [d2_min, d2_max] and every angle is uniform in
[angle_min, angle_max]. The first N_r users are reflective, the rest
transmissive.

Random streams
--------------
All randomness comes from numpy's PCG64 seeded with
SeedSequence(seed, spawn_key=(stream,)):

    stream 0      scenario geometry
    stream 1 + k  analog-network initialization of sub-solve k
                  (hybrid: k = 0; TDMA/FDMA: k = 0 reflective, 1 transmissive)

A stream depends only on (seed, stream), so serial and parallel sweeps draw
the same numbers.
"""

import logging
from typing import Optional

import numpy as np

from src.channel.absorption import AbsorptionTable, load_absorption_table
from src.channel.thz_channel import ChannelSet, Geometry, synthesize_channels
from src.core.errors import ConfigurationError
from src.core.system_config import SystemConfig

logger = logging.getLogger(__name__)

GEOMETRY_STREAM = 0
ANALOG_INIT_STREAM = 1


def scenario_rng(seed: int, stream: int) -> np.random.Generator:
    if seed < 0 or stream < 0:
        raise ConfigurationError(f"seed and stream must be non-negative (got {seed}, {stream})")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


def sample_scenario(cfg: SystemConfig, seed: int) -> Geometry:
    rng = scenario_rng(seed, GEOMETRY_STREAM)
    N = cfg.N

    d2 = rng.uniform(cfg.d2_min, cfg.d2_max, size=N)
    angles = rng.uniform(cfg.angle_min, cfg.angle_max, size=N + 2)

    return Geometry(
        d1=float(cfg.d1),
        d2=tuple(float(d) for d in d2),
        phi_tx=float(angles[0]),
        phi_rx=float(angles[1]),
        phi_users=tuple(float(a) for a in angles[2:]),
        groups=cfg.groups,
    )


def build_channels(cfg: SystemConfig, seed: int, table: Optional[AbsorptionTable] = None) -> ChannelSet:
    """Geometry for seed, then channels at cfg's carrier."""
    if table is None:
        table = load_absorption_table(cfg.absorption_table)
    return synthesize_channels(cfg, sample_scenario(cfg, seed), table)
