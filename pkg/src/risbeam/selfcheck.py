"""Built-in verification suite behind the `risbeam verify` command.

Runs fast cross-checks of the solver math on seeded random instances:
objective-form consistency, descent of every update, KKT feasibility,
surrogate-chain inequalities, phase-rule optimality, and determinism.
Each check prints one ok/FAIL line; the suite returns overall success.
"""

from __future__ import annotations

import numpy as np

from .baselines import SchemeId, solve_scheme
from .channel import generate_channels
from .config import SystemConfig, seeded_rng
from .equalizer import lmmse_equalizers, update_equalizers
from .objective import sum_mse, vectorized_theta_objective
from .precoder import (build_kkt_context, precoder_update_from_channels,
                       transmit_power)
from .reflection import (build_workspace, mm_stage1, mm_stage2, phase_update,
                         quartic_objective, stage1_surrogate_value,
                         stage2_surrogate_value, update_reflection)
from .solver import SolverOptions, solve
from .synthetic import InstanceDims, random_instance
from .types import BeamformingState


def _rel_close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(abs(a), abs(b), 1e-12)


def check_objective_forms(n_instances: int = 20) -> tuple[bool, str]:
    dims = InstanceDims(m=6, n_tx=4, n_rx=2, n_streams=2, n_users=2)
    worst = 0.0
    for seed in range(n_instances):
        inst = random_instance(dims, seed=seed)
        ws = build_workspace(inst.ch, inst.state.precoder, inst.state.equalizers)
        rng = seeded_rng(1000 + seed)
        t1 = np.exp(2j * np.pi * rng.random(dims.m))
        t2 = np.exp(2j * np.pi * rng.random(dims.m))
        def direct(th):
            st = BeamformingState(inst.state.precoder, inst.state.equalizers, th)
            return sum_mse(inst.ch, st, inst.noise_power).sum_mse
        d_direct = direct(t1) - direct(t2)
        d_vec = vectorized_theta_objective(ws, t1) - vectorized_theta_objective(ws, t2)
        worst = max(worst, abs(d_direct - d_vec) / max(abs(d_direct), 1e-12))
    return worst <= 1e-8, f"max relative mismatch {worst:.2e}"


def check_update_descent(n_instances: int = 25) -> tuple[bool, str]:
    dims = InstanceDims(m=6, n_tx=4, n_rx=2, n_streams=2, n_users=2)
    for seed in range(n_instances):
        inst = random_instance(dims, seed=seed)
        ch, sigma2, budget = inst.ch, inst.noise_power, inst.tx_power
        state = inst.state
        obj = sum_mse(ch, state, sigma2).sum_mse
        for step in ("equalizer", "precoder", "reflection"):
            if step == "equalizer":
                state = BeamformingState(state.precoder,
                                         update_equalizers(ch, state, sigma2), state.theta)
            elif step == "precoder":
                from .precoder import update_precoder
                state = BeamformingState(update_precoder(ch, state, budget),
                                         state.equalizers, state.theta)
            else:
                state = BeamformingState(state.precoder, state.equalizers,
                                         update_reflection(ch, state))
            new_obj = sum_mse(ch, state, sigma2).sum_mse
            if new_obj > obj + 1e-9 * abs(obj):
                return False, f"{step} update increased objective at seed {seed}"
            obj = new_obj
    return True, f"all three updates descend on {n_instances} instances"


def check_kkt(n_instances: int = 25) -> tuple[bool, str]:
    dims = InstanceDims(m=4, n_tx=4, n_rx=2, n_streams=2, n_users=2)
    for seed in range(n_instances):
        inst = random_instance(dims, seed=seed)
        # shrink the budget so the power constraint is active on some instances
        budget = inst.tx_power if seed % 2 == 0 else inst.tx_power * 1e-3
        from .channel import cascaded_channel
        h_list = [cascaded_channel(inst.ch, inst.state.theta, k)
                  for k in range(dims.n_users)]
        ctx = build_kkt_context(h_list, inst.state.equalizers)
        precoder, mu = precoder_update_from_channels(h_list, inst.state.equalizers, budget)
        power = float(np.sum(np.abs(precoder) ** 2))
        if power > budget * (1 + 1e-8):
            return False, f"power infeasible at seed {seed}"
        if abs(mu * (power - budget)) > 1e-6 * budget:
            return False, f"complementary slackness violated at seed {seed}"
        resid = ctx.gram @ precoder + mu * precoder - ctx.rhs_stacked
        if np.linalg.norm(resid) > 1e-8 * max(np.linalg.norm(ctx.rhs_stacked), 1e-12):
            return False, f"KKT residual too large at seed {seed}"
        if transmit_power(ctx, 1.0) <= transmit_power(ctx, 2.0):
            return False, f"power not decreasing in mu at seed {seed}"
    return True, f"feasibility, slackness, residual, monotonicity on {n_instances} instances"


def check_equalizer_optimal(n_instances: int = 10) -> tuple[bool, str]:
    dims = InstanceDims(m=4, n_tx=4, n_rx=3, n_streams=2, n_users=2)
    from .channel import cascaded_channel
    from .objective import sum_mse_from_channels
    for seed in range(n_instances):
        inst = random_instance(dims, seed=seed)
        h_list = [cascaded_channel(inst.ch, inst.state.theta, k)
                  for k in range(dims.n_users)]
        best = lmmse_equalizers(h_list, inst.state.precoder, inst.noise_power)
        # independent route: least-squares solve of the normal equations
        ls = []
        for k, h_k in enumerate(h_list):
            hf = h_k @ inst.state.precoder
            cov = hf @ hf.conj().T + inst.noise_power * np.eye(h_k.shape[0])
            rhs = h_k @ inst.state.precoder[:, k * dims.n_streams:(k + 1) * dims.n_streams]
            g, *_ = np.linalg.lstsq(cov, rhs, rcond=None)
            ls.append(g.conj().T)
        a = sum_mse_from_channels(h_list, inst.state.precoder, best, inst.noise_power).sum_mse
        b = sum_mse_from_channels(h_list, inst.state.precoder, ls, inst.noise_power).sum_mse
        if not _rel_close(a, b, 1e-8) or a > b + 1e-10:
            return False, f"LMMSE differs from least-squares optimum at seed {seed}"
    return True, f"matches least-squares optimum on {n_instances} instances"


def check_surrogate_chain(n_instances: int = 10) -> tuple[bool, str]:
    dims = InstanceDims(m=5, n_tx=3, n_rx=2, n_streams=2, n_users=2)
    for seed in range(n_instances):
        inst = random_instance(dims, seed=seed)
        ws = build_workspace(inst.ch, inst.state.precoder, inst.state.equalizers)
        theta_t = inst.state.theta
        for variant in ("trace", "max_eig"):
            surr = mm_stage1(ws, theta_t, variant)
            f_t = mm_stage2(surr, theta_t)
            theta_new = phase_update(f_t, theta_prev=theta_t)
            f_new = quartic_objective(ws, theta_new)
            f_old = quartic_objective(ws, theta_t)
            s1_new = stage1_surrogate_value(ws, surr, theta_new)
            s2_new = stage2_surrogate_value(ws, surr, theta_new)
            s2_old = stage2_surrogate_value(ws, surr, theta_t)
            scale = max(abs(f_old), 1.0)
            chain = (f_new <= s1_new + 1e-9 * scale
                     and s1_new <= s2_new + 1e-9 * scale
                     and s2_new <= s2_old + 1e-9 * scale
                     and abs(s2_old - f_old) <= 1e-9 * scale)
            if not chain:
                return False, f"chain violated at seed {seed} variant {variant}"
    return True, f"double-majorization chain holds on {n_instances} instances, both variants"


def check_phase_rule(n_instances: int = 10) -> tuple[bool, str]:
    rng = seeded_rng(7)
    for _ in range(n_instances):
        f = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        theta = phase_update(f)
        cand = np.exp(2j * np.pi * rng.random((10_000, 3)))
        best = float(np.min(2 * np.real(cand.conj() @ f)))
        ours = float(2 * np.real(np.vdot(theta, f)))
        if ours > best + 1e-12:
            return False, "a random candidate beat the closed-form phase"
    return True, f"beats 10^4 random candidates on {n_instances} draws"


def check_solver_determinism() -> tuple[bool, str]:
    cfg = SystemConfig(n_tx=4, n_rx_per_user=2, n_streams_per_user=1, n_users=2,
                       n_elements=8, seed=3)
    ch = generate_channels(cfg, seeded_rng(cfg.seed))
    opts = SolverOptions(max_iters=15)
    _, tr1 = solve(ch, cfg, opts)
    _, tr2 = solve(ch, cfg, opts)
    if tr1.objective_history != tr2.objective_history:
        return False, "trace differs between identical runs"
    if not tr1.is_monotone(1e-9):
        return False, "objective trace not monotone"
    if min(tr1.objective_history) < 0:
        return False, "objective went negative"
    return True, "identical traces, monotone, nonnegative"


def check_schemes_run() -> tuple[bool, str]:
    cfg = SystemConfig(n_tx=4, n_rx_per_user=2, n_streams_per_user=1, n_users=2,
                       n_elements=8, seed=5)
    ch = generate_channels(cfg, seeded_rng(cfg.seed))
    opts = SolverOptions(max_iters=10)
    for scheme in SchemeId:
        _, trace = solve_scheme(scheme, ch, cfg, opts)
        if not trace.is_monotone(1e-9):
            return False, f"{scheme.value} trace not monotone"
    return True, "all four schemes run and descend"


ALL_CHECKS = [
    ("objective forms agree in differences", check_objective_forms),
    ("every update step descends", check_update_descent),
    ("precoder KKT suite", check_kkt),
    ("equalizer matches independent optimum", check_equalizer_optimal),
    ("double-majorization chain", check_surrogate_chain),
    ("phase rule optimality", check_phase_rule),
    ("solver determinism and monotonicity", check_solver_determinism),
    ("all schemes descend", check_schemes_run),
]


def run_checks(verbose: bool = True) -> bool:
    ok_all = True
    for name, fn in ALL_CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        ok_all &= ok
        if verbose:
            print(f"[{'ok' if ok else 'FAIL'}] {name}: {detail}")
    return ok_all
