"""Comparison schemes: single-surface systems (BS side / UE side) and the
double-surface system with two separate reflection patterns.

Single-surface schemes reuse the common-pattern solver on a truncated channel
set (the quartic machinery degenerates to the classic quadratic update when
the inter-surface link is zero). The separate-pattern scheme runs block
coordinate descent over (G, F, theta1, theta2): with one pattern frozen the
double-bounce term is linear in the other, so each pattern update is a
quadratic unit-modulus problem with a constant channel offset.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import cascaded_channel_separate
from .config import SystemConfig, validate_config
from .equalizer import lmmse_equalizers
from .objective import sum_mse_from_channels, user_precoder
from .precoder import precoder_update_from_channels
from .reflection import quadratic_phase_step
from .solver import SolverOptions, initial_state, solve
from .types import BeamformingState, ChannelSet, IterationTrace


class SchemeId(str, Enum):
    DOUBLE_COMMON = "double_common"
    SINGLE_BS = "single_bs"
    SINGLE_UE = "single_ue"
    DOUBLE_SEPARATE = "double_separate"


def truncate_channels(ch: ChannelSet, side: str) -> ChannelSet:
    """Channel set with only one surface active; the other links become zero."""
    zt = np.zeros_like(ch.t1)
    zs = np.zeros_like(ch.s)
    zr = [np.zeros_like(r) for r in ch.r1]
    if side == "bs":
        return ChannelSet(t1=ch.t1, t2=zt, s=zs, r1=ch.r1, r2=zr)
    if side == "ue":
        return ChannelSet(t1=zt, t2=ch.t2, s=zs, r1=zr, r2=ch.r2)
    raise ValueError(f"side must be 'bs' or 'ue', got {side!r}")


def solve_single_ris(ch: ChannelSet, cfg: SystemConfig, opts: SolverOptions | None,
                     side: str) -> tuple[BeamformingState, IterationTrace]:
    return solve(truncate_channels(ch, side), cfg, opts)


@dataclass(frozen=True)
class SeparateBeamformingState:
    """Iterate of the separate-pattern baseline (one theta per surface)."""

    precoder: np.ndarray
    equalizers: list[np.ndarray]
    theta1: np.ndarray
    theta2: np.ndarray


def separate_effective_channels(ch: ChannelSet, theta1: np.ndarray,
                                theta2: np.ndarray) -> list[np.ndarray]:
    return [cascaded_channel_separate(ch, theta1, theta2, k) for k in range(ch.n_users)]


def quadratic_theta_coeffs(t_eff: np.ndarray, r_eff: list[np.ndarray],
                           offsets: list[np.ndarray], precoder: np.ndarray,
                           equalizers: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Quadratic objective pieces for one pattern with the other frozen.

    For effective channels H_k = R_eff,k diag(theta) T_eff + C_k the
    theta-dependent objective is theta^H A0 theta - 2 Re(theta^H pt*) with

        A0 = (T_eff F F^H T_eff^H)^T o (sum_k R_eff,k^H G_k^H G_k R_eff,k)
        pt = diag(sum_k T_eff F_k G_k R_eff,k)
           - diag(sum_k T_eff F F^H C_k^H G_k^H G_k R_eff,k),

    where o is the elementwise product. A0 is Hermitian PSD, so the trace
    shift of the quadratic MM step is a valid dominator.
    """
    n_k = equalizers[0].shape[0]
    m = t_eff.shape[0]
    tf = t_eff @ precoder
    q = tf @ tf.conj().T
    e_sum = np.zeros((m, m), dtype=complex)
    p_mat = np.zeros((m, m), dtype=complex)
    x_mat = np.zeros((m, m), dtype=complex)
    for k, (r_k, c_k, g_k) in enumerate(zip(r_eff, offsets, equalizers)):
        gr = g_k @ r_k
        e_sum += gr.conj().T @ gr
        p_mat += (t_eff @ user_precoder(precoder, k, n_k)) @ gr
        x_mat += tf @ (g_k @ c_k @ precoder).conj().T @ gr
    a0 = q.T * e_sum
    p_lin = np.diagonal(p_mat) - np.diagonal(x_mat)
    return a0, p_lin.copy()


def update_theta1(ch: ChannelSet, precoder: np.ndarray, equalizers: list[np.ndarray],
                  theta1: np.ndarray, theta2: np.ndarray,
                  variant: str = "trace") -> np.ndarray:
    """Pattern update for surface 1 with theta2 frozen.

    H_k = (R1k + R2k diag(theta2) S) diag(theta1) T1 + R2k diag(theta2) T2.
    """
    r_eff = [ch.r1[k] + (ch.r2[k] * theta2) @ ch.s for k in range(ch.n_users)]
    offsets = [(ch.r2[k] * theta2) @ ch.t2 for k in range(ch.n_users)]
    a0, p_lin = quadratic_theta_coeffs(ch.t1, r_eff, offsets, precoder, equalizers)
    return quadratic_phase_step(a0, p_lin, theta1, variant)


def update_theta2(ch: ChannelSet, precoder: np.ndarray, equalizers: list[np.ndarray],
                  theta1: np.ndarray, theta2: np.ndarray,
                  variant: str = "trace") -> np.ndarray:
    """Pattern update for surface 2 with theta1 frozen.

    H_k = R2k diag(theta2) (T2 + S diag(theta1) T1) + R1k diag(theta1) T1.
    """
    t_eff = ch.t2 + (ch.s * theta1) @ ch.t1
    offsets = [(ch.r1[k] * theta1) @ ch.t1 for k in range(ch.n_users)]
    a0, p_lin = quadratic_theta_coeffs(t_eff, ch.r2, offsets, precoder, equalizers)
    return quadratic_phase_step(a0, p_lin, theta2, variant)


def solve_double_separate(ch: ChannelSet, cfg: SystemConfig,
                          opts: SolverOptions | None = None
                          ) -> tuple[SeparateBeamformingState, IterationTrace]:
    """Block-coordinate descent over (G, F, theta1, theta2).

    Every sub-step either solves its subproblem exactly (equalizer, precoder)
    or descends through a tangent-matching majorizer (each pattern), so the
    recorded objective is monotone non-increasing.
    """
    opts = opts or SolverOptions()
    opts.validate()
    validate_config(cfg)
    ch.validate(cfg)
    sigma2, budget = cfg.noise_power, cfg.tx_power

    start = initial_state(ch, cfg, opts)
    precoder = start.precoder
    equalizers = start.equalizers
    theta1 = start.theta.copy()
    theta2 = start.theta.copy()

    trace = IterationTrace()
    h_list = separate_effective_channels(ch, theta1, theta2)
    trace.objective_history.append(
        sum_mse_from_channels(h_list, precoder, equalizers, sigma2).sum_mse)

    for it in range(1, opts.max_iters + 1):
        tic = time.perf_counter()
        h_list = separate_effective_channels(ch, theta1, theta2)
        equalizers = lmmse_equalizers(h_list, precoder, sigma2)
        precoder, _ = precoder_update_from_channels(h_list, equalizers, budget)
        theta1 = update_theta1(ch, precoder, equalizers, theta1, theta2, opts.majorizer)
        theta2 = update_theta2(ch, precoder, equalizers, theta1, theta2, opts.majorizer)
        h_list = separate_effective_channels(ch, theta1, theta2)
        obj = sum_mse_from_channels(h_list, precoder, equalizers, sigma2).sum_mse
        prev = trace.objective_history[-1]
        trace.objective_history.append(obj)
        if opts.record_trace:
            trace.wall_times.append(time.perf_counter() - tic)
        if abs(obj - prev) <= opts.rel_tol * abs(prev):
            trace.converged_at = it
            break

    final = SeparateBeamformingState(precoder=precoder, equalizers=equalizers,
                                     theta1=theta1, theta2=theta2)
    return final, trace


def solve_scheme(scheme: SchemeId | str, ch: ChannelSet, cfg: SystemConfig,
                 opts: SolverOptions | None = None):
    """Dispatch one scheme; returns (final state, IterationTrace)."""
    scheme = SchemeId(scheme)
    if scheme is SchemeId.DOUBLE_COMMON:
        return solve(ch, cfg, opts)
    if scheme is SchemeId.SINGLE_BS:
        return solve_single_ris(ch, cfg, opts, side="bs")
    if scheme is SchemeId.SINGLE_UE:
        return solve_single_ris(ch, cfg, opts, side="ue")
    if scheme is SchemeId.DOUBLE_SEPARATE:
        return solve_double_separate(ch, cfg, opts)
    raise ValueError(f"unhandled scheme {scheme!r}")
