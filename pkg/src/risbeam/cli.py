"""Command-line front end: single solves, Monte-Carlo sweeps, channel dumps,
and the built-in verification suite."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .baselines import SchemeId, solve_scheme
from .channel import generate_channels
from .config import load_config, seeded_rng, watt_to_dbm, with_overrides
from .harness import SweepSpec, default_workers, emit_outputs, run_sweep
from .reflection import build_workspace
from .solver import SolverOptions
from .types import save_channels


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--rel-tol", type=float, default=1e-5)
    p.add_argument("--init", choices=("paper_default", "random_phase"),
                   default="paper_default", help="initialization scheme")
    p.add_argument("--inner-iters", type=int, default=1,
                   help="reflection MM iterations per outer iteration")
    p.add_argument("--majorizer", choices=("trace", "max_eig"), default="trace")


def _solver_options(args) -> SolverOptions:
    return SolverOptions(max_iters=args.max_iters, rel_tol=args.rel_tol,
                         init_scheme=args.init,
                         reflection_inner_iters=args.inner_iters,
                         majorizer=args.majorizer)


def _load_cfg(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = with_overrides(cfg, seed=args.seed)
    return cfg


def cmd_solve(args) -> int:
    cfg = _load_cfg(args)
    ch = generate_channels(cfg, seeded_rng(cfg.seed))
    if args.dump_channels:
        save_channels(args.dump_channels, ch, seed=cfg.seed, cfg=cfg)
        print(f"channel dump written to {args.dump_channels}")
    state, trace = solve_scheme(args.scheme, ch, cfg, _solver_options(args))
    print(f"scheme={args.scheme} seed={cfg.seed} "
          f"P={watt_to_dbm(cfg.tx_power):.1f}dBm "
          f"noise={watt_to_dbm(cfg.noise_power):.1f}dBm")
    for it, obj in enumerate(trace.objective_history):
        print(f"iter {it:3d}  objective {obj:.12e}")
    status = (f"converged at iteration {trace.converged_at}"
              if trace.converged_at is not None else "max iterations reached")
    print(f"{status}; final sum MSE {trace.objective_history[-1]:.12e}")
    if args.trace_out:
        lines = ["iteration,objective"]
        lines += [f"{i},{obj!r}" for i, obj in enumerate(trace.objective_history)]
        Path(args.trace_out).write_text("\n".join(lines) + "\n", encoding="ascii")
        print(f"trace written to {args.trace_out}")
    if args.debug_dump:
        if args.scheme != SchemeId.DOUBLE_COMMON.value:
            print("--debug-dump supports the double_common scheme only", file=sys.stderr)
            return 2
        ws = build_workspace(ch, state.precoder, state.equalizers)
        np.savez(args.debug_dump, theta=state.theta, **ws.debug_summary())
        print(f"workspace debug dump written to {args.debug_dump}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_cfg(args)
    schemes = [SchemeId(s.strip()) for s in args.schemes.split(",") if s.strip()]
    values = [float(v) for v in args.values.split(",")] if args.values else []
    spec = SweepSpec(schemes=schemes, sweep_var=args.sweep, sweep_values=values,
                     trials=args.trials, base_config=cfg, out_dir=args.out,
                     solver_options=_solver_options(args),
                     include_timing=not args.no_timing,
                     debug_channel_hash=args.debug_channel_hash)
    rows = run_sweep(spec, workers=args.workers)
    paths = emit_outputs(rows, args.out, debug_channel_hash=args.debug_channel_hash)
    print(f"{len(rows)} rows -> {paths['results']}")
    print(f"summary -> {paths['summary']}")
    print(f"plot script -> {paths['plot_script']} (requires matplotlib)")
    return 0


def cmd_dump_channels(args) -> int:
    cfg = _load_cfg(args)
    ch = generate_channels(cfg, seeded_rng(cfg.seed))
    save_channels(args.out, ch, seed=cfg.seed, cfg=cfg)
    print(f"channel dump written to {args.out}")
    return 0


def cmd_verify(args) -> int:
    from .selfcheck import run_checks
    ok = run_checks(verbose=True)
    print("verification " + ("PASSED" if ok else "FAILED"))
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risbeam",
        description="Double-RIS multi-user MIMO sum-MSE transceiver design")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="single seeded run; prints the objective trace")
    p.add_argument("--config", required=True)
    p.add_argument("--scheme", default=SchemeId.DOUBLE_COMMON.value,
                   choices=[s.value for s in SchemeId])
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--dump-channels", default=None, metavar="PATH")
    p.add_argument("--trace-out", default=None, metavar="PATH",
                   help="write iteration,objective CSV (plot script input)")
    p.add_argument("--debug-dump", default=None, metavar="PATH",
                   help="dump reflection workspace extractions for regression pinning")
    _add_solver_flags(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("sweep", help="seeded Monte-Carlo sweep across schemes")
    p.add_argument("--config", required=True)
    p.add_argument("--schemes", default=",".join(s.value for s in SchemeId))
    p.add_argument("--sweep", default="none", choices=("noise_power", "n_elements", "none"))
    p.add_argument("--values", default="", help="comma-separated sweep values, ascending")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help="override the base seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=default_workers(),
                   help="parallel trial workers (env RISBEAM_WORKERS)")
    p.add_argument("--no-timing", action="store_true",
                   help="pin wall_time to 0 for byte-reproducible CSVs")
    p.add_argument("--debug-channel-hash", action="store_true",
                   help="append a channel_hash column (pairing verification)")
    _add_solver_flags(p)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("dump-channels", help="generate and store one ChannelSet")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_dump_channels)

    p = sub.add_parser("verify", help="run the built-in oracle suite")
    p.set_defaults(fn=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
