"""Shared value types: channel realizations, solver state, traces, MSE reports.

All types are plain immutable-by-convention containers of 64-bit complex /
float arrays; everything downstream treats them as read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import SystemConfig, config_digest


class DimensionMismatchError(ValueError):
    """Array dimensions are inconsistent with the configuration."""


@dataclass(frozen=True)
class ChannelSet:
    """One realization of the five channel matrices.

    t1, t2: (M, n_tx) BS->RIS links; s: (M, M) inter-surface link;
    r1, r2: per-user lists of (n_rx, M) RIS->user links.
    """

    t1: np.ndarray
    t2: np.ndarray
    s: np.ndarray
    r1: list[np.ndarray]
    r2: list[np.ndarray]

    @property
    def n_users(self) -> int:
        return len(self.r1)

    @property
    def n_elements(self) -> int:
        return self.t1.shape[0]

    def validate(self, cfg: SystemConfig) -> None:
        m, nt, nr, k = cfg.n_elements, cfg.n_tx, cfg.n_rx_per_user, cfg.n_users
        checks = [("t1", self.t1, (m, nt)), ("t2", self.t2, (m, nt)), ("s", self.s, (m, m))]
        if len(self.r1) != k or len(self.r2) != k:
            raise DimensionMismatchError(
                f"expected {k} user links, got r1: {len(self.r1)}, r2: {len(self.r2)}"
            )
        for i in range(k):
            checks.append((f"r1[{i}]", self.r1[i], (nr, m)))
            checks.append((f"r2[{i}]", self.r2[i], (nr, m)))
        for name, arr, shape in checks:
            if arr.shape != shape:
                raise DimensionMismatchError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr.view(np.float64))):
                raise DimensionMismatchError(f"{name} contains non-finite entries")


@dataclass(frozen=True)
class BeamformingState:
    """Current iterate of the alternating optimization.

    precoder: (n_tx, N) stacked per-user transmit beamformers;
    equalizers: per-user (n_streams, n_rx) receive filters;
    theta: (M,) unit-modulus common reflection coefficients.
    """

    precoder: np.ndarray
    equalizers: list[np.ndarray]
    theta: np.ndarray

    def validate(self, tx_power: float, modulus_tol: float = 1e-9) -> None:
        dev = np.max(np.abs(np.abs(self.theta) - 1.0)) if self.theta.size else 0.0
        if dev > modulus_tol:
            raise ValueError(f"reflection coefficients off the unit circle by {dev:.3e}")
        p = float(np.sum(np.abs(self.precoder) ** 2))
        if p > tx_power * (1.0 + 1e-8):
            raise ValueError(f"transmit power {p:.6e} exceeds budget {tx_power:.6e}")


@dataclass
class IterationTrace:
    """Objective value and timing per outer iteration (entry 0 is the initial state)."""

    objective_history: list[float] = field(default_factory=list)
    wall_times: list[float] = field(default_factory=list)
    converged_at: int | None = None

    def is_monotone(self, rel_tol: float = 1e-9) -> bool:
        h = self.objective_history
        return all(h[i + 1] <= h[i] + rel_tol * abs(h[i]) for i in range(len(h) - 1))


@dataclass
class MseReport:
    """Per-user MSE traces and their sum (the optimization objective)."""

    per_user_mse: list[float]
    sum_mse: float
    per_user_matrices: list[np.ndarray] | None = None


# ---------------------------------------------------------------------------
# Channel container: npz dump/load with a small header, bit-exact round trip
# ---------------------------------------------------------------------------

def save_channels(path, ch: ChannelSet, seed: int | None = None,
                  cfg: SystemConfig | None = None) -> None:
    """Write a ChannelSet to an ``.npz`` container.

    Header fields: dims = [M, n_tx, n_rx, K], the generating seed (-1 when
    unknown) and the config digest (empty when unknown). Arrays are stored
    uncompressed at full 64-bit precision, so loading is bit-exact.
    """
    k = ch.n_users
    nr = ch.r1[0].shape[0] if k else 0
    np.savez(
        path,
        t1=ch.t1, t2=ch.t2, s=ch.s,
        r1=np.stack(ch.r1), r2=np.stack(ch.r2),
        dims=np.array([ch.n_elements, ch.t1.shape[1], nr, k], dtype=np.int64),
        seed=np.int64(-1 if seed is None else seed),
        config_hash=np.str_("" if cfg is None else config_digest(cfg)),
    )


def load_channels(path) -> tuple[ChannelSet, dict]:
    """Load a ChannelSet container; returns (channels, header dict)."""
    with np.load(path) as data:
        dims = data["dims"]
        ch = ChannelSet(
            t1=data["t1"], t2=data["t2"], s=data["s"],
            r1=list(data["r1"]), r2=list(data["r2"]),
        )
        meta = {
            "dims": tuple(int(d) for d in dims),
            "seed": int(data["seed"]),
            "config_hash": str(data["config_hash"]),
        }
    expected = (ch.n_elements, ch.t1.shape[1], ch.r1[0].shape[0], ch.n_users)
    if meta["dims"] != expected:
        raise DimensionMismatchError(
            f"container header dims {meta['dims']} do not match arrays {expected}"
        )
    return ch, meta
