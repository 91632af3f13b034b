"""Alternating-optimization driver: init, the G -> F -> theta cycle,
convergence detection, and trace recording."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .config import SystemConfig, derive_seed, seeded_rng, validate_config
from .equalizer import update_equalizers
from .objective import sum_mse
from .precoder import update_precoder
from .reflection import update_reflection
from .types import BeamformingState, ChannelSet, IterationTrace

INIT_SCHEMES = ("paper_default", "random_phase", "custom")


@dataclass
class SolverOptions:
    max_iters: int = 100
    rel_tol: float = 1e-5          # stop when |obj_t - obj_{t-1}| <= rel_tol * |obj_{t-1}|
    record_trace: bool = True      # False skips per-iteration wall-clock sampling
    init_scheme: str = "paper_default"
    initial_state: BeamformingState | None = None   # used when init_scheme == "custom"
    init_seed: int | None = None   # phase-draw seed for random_phase (default: from cfg.seed)
    reflection_inner_iters: int = 1
    majorizer: str = "trace"       # "trace" or "max_eig"

    def validate(self) -> None:
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be > 0, got {self.rel_tol}")
        if self.init_scheme not in INIT_SCHEMES:
            raise ValueError(f"unknown init_scheme {self.init_scheme!r}")
        if self.init_scheme == "custom" and self.initial_state is None:
            raise ValueError("init_scheme 'custom' requires initial_state")


def initial_precoder(cfg: SystemConfig) -> np.ndarray:
    """Identity-block precoder [I; 0] per user, scaled into the power budget."""
    n_k = cfg.n_streams_per_user
    block = np.zeros((cfg.n_tx, n_k), dtype=complex)
    block[:n_k, :] = np.eye(n_k)
    precoder = np.concatenate([block] * cfg.n_users, axis=1)
    total = cfg.n_streams_total
    if total > cfg.tx_power:
        precoder = precoder * np.sqrt(cfg.tx_power / total)
    return precoder


def initial_state(ch: ChannelSet, cfg: SystemConfig, opts: SolverOptions) -> BeamformingState:
    if opts.init_scheme == "custom":
        assert opts.initial_state is not None
        return opts.initial_state
    if opts.init_scheme == "random_phase":
        seed = opts.init_seed if opts.init_seed is not None else derive_seed(cfg.seed, "init")
        rng = seeded_rng(seed)
        theta = np.exp(2j * np.pi * rng.random(cfg.n_elements))
    else:
        theta = np.ones(cfg.n_elements, dtype=complex)
    equalizers = [np.zeros((cfg.n_streams_per_user, cfg.n_rx_per_user), dtype=complex)
                  for _ in range(cfg.n_users)]
    return BeamformingState(precoder=initial_precoder(cfg), equalizers=equalizers,
                            theta=theta)


def solve(ch: ChannelSet, cfg: SystemConfig,
          opts: SolverOptions | None = None) -> tuple[BeamformingState, IterationTrace]:
    """Run the alternating optimization until convergence or max_iters.

    Each outer iteration updates the equalizers, the precoder and the common
    reflection pattern in that order; every step solves its subproblem to
    (surrogate) optimality, so the recorded objective never increases.
    """
    opts = opts or SolverOptions()
    opts.validate()
    validate_config(cfg)
    ch.validate(cfg)
    sigma2, budget = cfg.noise_power, cfg.tx_power

    state = initial_state(ch, cfg, opts)
    trace = IterationTrace()
    trace.objective_history.append(sum_mse(ch, state, sigma2).sum_mse)

    precoder, equalizers, theta = state.precoder, state.equalizers, state.theta
    for it in range(1, opts.max_iters + 1):
        tic = time.perf_counter()
        current = BeamformingState(precoder=precoder, equalizers=equalizers, theta=theta)
        equalizers = update_equalizers(ch, current, sigma2)
        current = BeamformingState(precoder=precoder, equalizers=equalizers, theta=theta)
        precoder = update_precoder(ch, current, budget)
        current = BeamformingState(precoder=precoder, equalizers=equalizers, theta=theta)
        theta = update_reflection(ch, current,
                                  inner_iters=opts.reflection_inner_iters,
                                  variant=opts.majorizer)
        current = BeamformingState(precoder=precoder, equalizers=equalizers, theta=theta)
        obj = sum_mse(ch, current, sigma2).sum_mse
        prev = trace.objective_history[-1]
        trace.objective_history.append(obj)
        if opts.record_trace:
            trace.wall_times.append(time.perf_counter() - tic)
        if abs(obj - prev) <= opts.rel_tol * abs(prev):
            trace.converged_at = it
            break

    final = BeamformingState(precoder=precoder, equalizers=equalizers, theta=theta)
    return final, trace


def flop_estimate(cfg: SystemConfig, iters: int) -> float:
    """Leading-order arithmetic cost of `iters` outer iterations."""
    m3 = cfg.n_elements ** 3
    per_iter = cfg.n_users * (cfg.n_streams_per_user ** 3 + m3
                              + cfg.n_rx_per_user ** 3) + 8 * m3
    return float(iters * per_iter)
