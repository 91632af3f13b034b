"""Geometric Rician channel generation and the cascaded effective channel.

Every link is drawn as H = sqrt(beta) * (sqrt(kappa) * H_los + sqrt(1-kappa) * H_nlos)
with distance path loss beta = beta0 * d^(-gamma), a rank-one LoS component from
half-wavelength uniform linear arrays, and i.i.d. CN(0, 1) scattering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig, seeded_rng, validate_config
from .types import ChannelSet, DimensionMismatchError


class GeometryError(ValueError):
    """Degenerate link geometry (coincident endpoints)."""


@dataclass(frozen=True)
class LinkGeometry:
    """Endpoint positions, distance and distance-based path loss of one link."""

    tx_pos: np.ndarray
    rx_pos: np.ndarray
    distance: float
    ploss_exponent: float
    path_loss: float


def make_link_geometry(tx_pos, rx_pos, ref_path_loss: float, exponent: float) -> LinkGeometry:
    tx = np.asarray(tx_pos, dtype=float)
    rx = np.asarray(rx_pos, dtype=float)
    d = float(np.linalg.norm(rx - tx))
    if d <= 0.0:
        raise GeometryError(f"link endpoints coincide: {tuple(tx)} -> {tuple(rx)}")
    return LinkGeometry(tx, rx, d, float(exponent), ref_path_loss * d ** (-exponent))


def ula_response(n: int, azimuth: float) -> np.ndarray:
    """Half-wavelength ULA steering vector for a given azimuth angle."""
    return np.exp(1j * np.pi * np.arange(n) * np.sin(azimuth))


def los_component(n_rx: int, n_tx: int, tx_pos, rx_pos) -> np.ndarray:
    """Rank-one LoS matrix a_rx(phi_rx) a_tx(phi_tx)^H from horizontal-plane azimuths."""
    delta = np.asarray(rx_pos, dtype=float) - np.asarray(tx_pos, dtype=float)
    az_tx = float(np.arctan2(delta[1], delta[0]))
    az_rx = float(np.arctan2(-delta[1], -delta[0]))
    a_rx = ula_response(n_rx, az_rx)
    a_tx = ula_response(n_tx, az_tx)
    return np.outer(a_rx, a_tx.conj())


def _nlos(n_rx: int, n_tx: int, rng: np.random.Generator) -> np.ndarray:
    re = rng.standard_normal((n_rx, n_tx))
    im = rng.standard_normal((n_rx, n_tx))
    return (re + 1j * im) / np.sqrt(2.0)


def rician_link(n_rx: int, n_tx: int, geom: LinkGeometry, kappa: float,
                rng: np.random.Generator) -> np.ndarray:
    los = los_component(n_rx, n_tx, geom.tx_pos, geom.rx_pos)
    nlos = _nlos(n_rx, n_tx, rng)
    return np.sqrt(geom.path_loss) * (np.sqrt(kappa) * los + np.sqrt(1.0 - kappa) * nlos)


def draw_user_positions(cfg: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """K user positions, uniform over the horizontal disk around user_center."""
    center = np.asarray(cfg.user_center, dtype=float)
    out = np.empty((cfg.n_users, 3))
    for k in range(cfg.n_users):
        u, v = rng.random(2)
        r = cfg.user_radius * np.sqrt(u)
        phi = 2.0 * np.pi * v
        out[k] = center + np.array([r * np.cos(phi), r * np.sin(phi), 0.0])
    return out


def generate_channels(cfg: SystemConfig, rng: np.random.Generator) -> ChannelSet:
    """Draw one ChannelSet realization.

    Draw order is fixed (user positions, then t1, t2, s, then r1/r2 per user)
    so a given generator state always produces the same realization.
    """
    validate_config(cfg)
    kappa = cfg.rician_factor
    beta0 = cfg.ref_path_loss
    exps = cfg.ploss_exponents
    users = draw_user_positions(cfg, rng)

    g_t1 = make_link_geometry(cfg.bs_position, cfg.ris1_position, beta0, exps["t1"])
    g_t2 = make_link_geometry(cfg.bs_position, cfg.ris2_position, beta0, exps["t2"])
    g_s = make_link_geometry(cfg.ris1_position, cfg.ris2_position, beta0, exps["s"])

    m, nt, nr = cfg.n_elements, cfg.n_tx, cfg.n_rx_per_user
    t1 = rician_link(m, nt, g_t1, kappa, rng)
    t2 = rician_link(m, nt, g_t2, kappa, rng)
    s = rician_link(m, m, g_s, kappa, rng)
    r1, r2 = [], []
    for k in range(cfg.n_users):
        g_r1 = make_link_geometry(cfg.ris1_position, users[k], beta0, exps["r1"])
        g_r2 = make_link_geometry(cfg.ris2_position, users[k], beta0, exps["r2"])
        r1.append(rician_link(nr, m, g_r1, kappa, rng))
        r2.append(rician_link(nr, m, g_r2, kappa, rng))
    ch = ChannelSet(t1=t1, t2=t2, s=s, r1=r1, r2=r2)
    ch.validate(cfg)
    return ch


def generate_channels_seeded(cfg: SystemConfig) -> ChannelSet:
    """Convenience wrapper: fresh generator from cfg.seed, then one realization."""
    return generate_channels(cfg, seeded_rng(cfg.seed))


def cascaded_channel(ch: ChannelSet, theta: np.ndarray, k: int) -> np.ndarray:
    """Effective BS -> user-k channel for a common reflection vector theta.

    Sums the two single-bounce paths and the double-bounce path:
    R1k diag(theta) T1 + R2k diag(theta) T2 + R2k diag(theta) S diag(theta) T1.
    """
    m = ch.n_elements
    if theta.shape != (m,):
        raise DimensionMismatchError(f"theta has shape {theta.shape}, expected ({m},)")
    if not (0 <= k < ch.n_users):
        raise DimensionMismatchError(f"user index {k} out of range [0, {ch.n_users})")
    r1, r2 = ch.r1[k], ch.r2[k]
    single = (r1 * theta) @ ch.t1 + (r2 * theta) @ ch.t2
    double = (r2 * theta) @ ch.s @ (theta[:, None] * ch.t1)
    return single + double


def cascaded_channel_separate(ch: ChannelSet, theta1: np.ndarray, theta2: np.ndarray,
                              k: int) -> np.ndarray:
    """Effective channel when each surface applies its own reflection vector."""
    m = ch.n_elements
    for name, th in (("theta1", theta1), ("theta2", theta2)):
        if th.shape != (m,):
            raise DimensionMismatchError(f"{name} has shape {th.shape}, expected ({m},)")
    r1, r2 = ch.r1[k], ch.r2[k]
    single = (r1 * theta1) @ ch.t1 + (r2 * theta2) @ ch.t2
    double = (r2 * theta2) @ ch.s @ (theta1[:, None] * ch.t1)
    return single + double


def effective_channels(ch: ChannelSet, theta: np.ndarray) -> list[np.ndarray]:
    return [cascaded_channel(ch, theta, k) for k in range(ch.n_users)]
