import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from risbeam import SystemConfig


@pytest.fixture
def desk_cfg():
    """Small physical scenario used across solver tests."""
    return SystemConfig(n_tx=4, n_rx_per_user=2, n_streams_per_user=1,
                        n_users=2, n_elements=8, seed=0)


@pytest.fixture
def paper_cfg():
    """Reference scenario (all defaults)."""
    return SystemConfig()


def rel_err(a: float, b: float, floor: float = 1e-12) -> float:
    return abs(a - b) / max(abs(a), abs(b), floor)
