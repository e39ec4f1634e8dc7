"""
Shared fixtures. Puts the project root on sys.path the same way main.py does.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

project_root = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(project_root))

from src.channel.thz_channel import ChannelSet  # noqa: E402
from src.core.system_config import SystemConfig  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def crandn(rng):
    """Circularly-symmetric complex Gaussian draws with unit variance."""

    def draw(*shape):
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)

    return draw


@pytest.fixture
def random_channels(crandn):
    """Unit-scale random channels (not LoS) for solver property tests."""

    def make(N, K, M):
        return ChannelSet(crandn(K, M), crandn(N, K))

    return make


@pytest.fixture
def small_cfg():
    """Physical scenario small enough for fast end-to-end solves."""
    return SystemConfig(N_r=1, N_t=1, M=8, M_RF=2, K=4, max_outer=30, max_inner=200)


@pytest.fixture
def unit_cfg():
    """Solver settings for unit-scale random channels (noise and P_max are passed explicitly)."""
    return SystemConfig(N_r=1, N_t=1, M=4, M_RF=2, K=3, eps_outer=1e-6, max_outer=200, max_inner=300)


@pytest.fixture
def project_dir():
    return project_root
