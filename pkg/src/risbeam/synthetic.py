"""Well-scaled random instances for oracle checks and property sweeps.

Physical channel draws (geometry + path loss) live in `channel`; the
generators here produce unit-scale CN(0,1) links and feasible random states
so tolerance-based checks are not distorted by extreme path-loss scales.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import seeded_rng
from .types import BeamformingState, ChannelSet


@dataclass(frozen=True)
class InstanceDims:
    m: int = 4
    n_tx: int = 4
    n_rx: int = 2
    n_streams: int = 2
    n_users: int = 2


def crandn(rng: np.random.Generator, *shape: int) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_channelset(dims: InstanceDims, rng: np.random.Generator) -> ChannelSet:
    m, nt, nr = dims.m, dims.n_tx, dims.n_rx
    return ChannelSet(
        t1=crandn(rng, m, nt), t2=crandn(rng, m, nt), s=crandn(rng, m, m),
        r1=[crandn(rng, nr, m) for _ in range(dims.n_users)],
        r2=[crandn(rng, nr, m) for _ in range(dims.n_users)],
    )


def random_state(dims: InstanceDims, tx_power: float,
                 rng: np.random.Generator) -> BeamformingState:
    """Feasible random iterate: power-saturated precoder, unit-modulus phases."""
    n_total = dims.n_users * dims.n_streams
    precoder = crandn(rng, dims.n_tx, n_total)
    precoder *= np.sqrt(tx_power / np.sum(np.abs(precoder) ** 2))
    equalizers = [crandn(rng, dims.n_streams, dims.n_rx) for _ in range(dims.n_users)]
    theta = np.exp(2j * np.pi * rng.random(dims.m))
    return BeamformingState(precoder=precoder, equalizers=equalizers, theta=theta)


@dataclass(frozen=True)
class RandomInstance:
    dims: InstanceDims
    ch: ChannelSet
    state: BeamformingState
    tx_power: float
    noise_power: float


def random_instance(dims: InstanceDims | None = None, seed: int = 0,
                    tx_power: float = 4.0, noise_power: float = 0.5) -> RandomInstance:
    dims = dims or InstanceDims()
    rng = seeded_rng(seed)
    ch = random_channelset(dims, rng)
    state = random_state(dims, tx_power, rng)
    return RandomInstance(dims=dims, ch=ch, state=state,
                          tx_power=tx_power, noise_power=noise_power)
