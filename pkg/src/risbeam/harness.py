"""Monte-Carlo sweep harness: seeded paired trials across schemes, CSV output,
and an emitted plot script.

Pairing contract: for a fixed (sweep value, trial) every scheme consumes the
identical ChannelSet, generated from a trial seed derived deterministically as
sha256(base_seed | sweep_index | trial_index). Rows are sorted before emission,
so worker count never changes output bytes.
"""

from __future__ import annotations

import concurrent.futures
import csv
import hashlib
import io
import os
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import SchemeId, solve_scheme
from .channel import generate_channels
from .config import SystemConfig, derive_seed, load_config, seeded_rng, validate_config
from .solver import SolverOptions
from .types import ChannelSet

SWEEP_VARIABLES = ("noise_power", "n_elements", "none")

RESULT_COLUMNS = ("scheme", "sweep_value", "trial", "seed", "final_mse", "iters", "wall_time")
SUMMARY_COLUMNS = ("scheme", "sweep_value", "trials", "median_mse", "q25_mse", "q75_mse")


@dataclass
class SweepSpec:
    schemes: list[SchemeId | str]
    sweep_var: str = "none"
    sweep_values: list[float] = field(default_factory=list)
    trials: int = 1
    base_config: SystemConfig | str | Path | None = None
    out_dir: str | Path | None = None
    solver_options: SolverOptions = field(default_factory=SolverOptions)
    include_timing: bool = True        # False pins wall_time to 0.0 for byte-reproducible CSVs
    debug_channel_hash: bool = False   # adds a trailing channel_hash column

    def resolved_config(self) -> SystemConfig:
        if isinstance(self.base_config, SystemConfig):
            return self.base_config
        if self.base_config is None:
            raise ValueError("SweepSpec.base_config is required")
        return load_config(self.base_config)

    def validate(self) -> None:
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not self.schemes:
            raise ValueError("at least one scheme is required")
        for s in self.schemes:
            SchemeId(s)
        if self.sweep_var not in SWEEP_VARIABLES:
            raise ValueError(f"sweep_var must be one of {SWEEP_VARIABLES}")
        if self.sweep_var != "none":
            if not self.sweep_values:
                raise ValueError("sweep_values must be nonempty")
            if sorted(self.sweep_values) != list(self.sweep_values):
                raise ValueError("sweep_values must be sorted ascending")
        validate_config(self.resolved_config())
        self.solver_options.validate()


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    sweep_value: float | None
    trial: int
    seed: int
    final_mse: float
    iters: int
    wall_time: float
    channel_hash: str | None = None


def _apply_sweep_value(cfg: SystemConfig, var: str, value) -> SystemConfig:
    if var == "none":
        return cfg
    if var == "noise_power":
        return replace(cfg, noise_power=float(value))
    if var == "n_elements":
        return replace(cfg, n_elements=int(value))
    raise ValueError(f"unknown sweep variable {var!r}")


def channel_digest(ch: ChannelSet) -> str:
    """Content hash of a realization (used to verify paired trials)."""
    h = hashlib.sha256()
    for arr in [ch.t1, ch.t2, ch.s, *ch.r1, *ch.r2]:
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()[:16]


def _run_cell(spec: SweepSpec, sweep_index: int, value, trial: int) -> list[ResultRow]:
    """All schemes for one (sweep value, trial) cell on one shared ChannelSet."""
    base = spec.resolved_config()
    cfg = _apply_sweep_value(base, spec.sweep_var, value)
    trial_seed = derive_seed(base.seed, sweep_index, trial)
    cfg = replace(cfg, seed=trial_seed)
    ch = generate_channels(cfg, seeded_rng(trial_seed))
    digest = channel_digest(ch) if spec.debug_channel_hash else None
    rows = []
    for scheme in spec.schemes:
        scheme = SchemeId(scheme)
        tic = time.perf_counter()
        _, trace = solve_scheme(scheme, ch, cfg, spec.solver_options)
        wall = time.perf_counter() - tic if spec.include_timing else 0.0
        rows.append(ResultRow(
            scheme=scheme.value,
            sweep_value=None if spec.sweep_var == "none" else float(value),
            trial=trial, seed=trial_seed,
            final_mse=float(trace.objective_history[-1]),
            iters=len(trace.objective_history) - 1,
            wall_time=wall, channel_hash=digest,
        ))
    return rows


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[ResultRow]:
    """Execute the sweep; any failed trial aborts with the cell identified."""
    spec.validate()
    values = [None] if spec.sweep_var == "none" else list(spec.sweep_values)
    cells = [(si, v, t) for si, v in enumerate(values) for t in range(spec.trials)]

    results: dict[tuple[int, int], list[ResultRow]] = {}
    if workers <= 1:
        for si, v, t in cells:
            try:
                results[(si, t)] = _run_cell(spec, si, v, t)
            except Exception as exc:
                raise RuntimeError(
                    f"trial failed (sweep value {v!r}, trial {t}, "
                    f"seed {derive_seed(spec.resolved_config().seed, si, t)}): {exc}"
                ) from exc
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futs = {pool.submit(_run_cell, spec, si, v, t): (si, v, t) for si, v, t in cells}
            for fut in concurrent.futures.as_completed(futs):
                si, v, t = futs[fut]
                try:
                    results[(si, t)] = fut.result()
                except Exception as exc:
                    raise RuntimeError(
                        f"trial failed (sweep value {v!r}, trial {t}, "
                        f"seed {derive_seed(spec.resolved_config().seed, si, t)}): {exc}"
                    ) from exc

    scheme_order = {SchemeId(s).value: i for i, s in enumerate(spec.schemes)}
    rows = [row for key in sorted(results) for row in results[key]]
    rows.sort(key=lambda r: (scheme_order[r.scheme],
                             -1.0 if r.sweep_value is None else r.sweep_value, r.trial))
    return rows


# ---------------------------------------------------------------------------
# CSV + plot-script emission
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_results_csv(rows: list[ResultRow], debug_channel_hash: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(RESULT_COLUMNS) + (["channel_hash"] if debug_channel_hash else [])
    writer.writerow(header)
    for r in rows:
        rec = [r.scheme, _fmt(r.sweep_value), r.trial, r.seed,
               _fmt(r.final_mse), r.iters, _fmt(r.wall_time)]
        if debug_channel_hash:
            rec.append(r.channel_hash or "")
        writer.writerow(rec)
    return buf.getvalue()


def parse_results_csv(text: str) -> list[ResultRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    has_hash = "channel_hash" in header
    rows = []
    for rec in reader:
        rows.append(ResultRow(
            scheme=rec[0],
            sweep_value=None if rec[1] == "" else float(rec[1]),
            trial=int(rec[2]), seed=int(rec[3]),
            final_mse=float(rec[4]), iters=int(rec[5]), wall_time=float(rec[6]),
            channel_hash=(rec[7] or None) if has_hash else None,
        ))
    return rows


def summarize(rows: list[ResultRow]) -> list[dict]:
    """Median and quartiles of final MSE per (scheme, sweep value)."""
    groups: dict[tuple[str, float | None], list[float]] = {}
    order: list[tuple[str, float | None]] = []
    for r in rows:
        key = (r.scheme, r.sweep_value)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(r.final_mse)
    out = []
    for scheme, value in order:
        mses = np.array(groups[(scheme, value)])
        q25, med, q75 = np.percentile(mses, [25.0, 50.0, 75.0])
        out.append({"scheme": scheme, "sweep_value": value, "trials": len(mses),
                    "median_mse": float(med), "q25_mse": float(q25), "q75_mse": float(q75)})
    return out


def format_summary_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for rec in summarize(rows):
        writer.writerow([rec["scheme"], _fmt(rec["sweep_value"]), rec["trials"],
                         _fmt(rec["median_mse"]), _fmt(rec["q25_mse"]), _fmt(rec["q75_mse"])])
    return buf.getvalue()


_PLOT_SCRIPT = '''\
#!/usr/bin/env python3
"""Render result curves from the CSV files next to this script.

Produces mse_curves.png (median final MSE per scheme over the sweep variable;
for a noise-power sweep read the x axis SNR-equivalently: smaller noise means
higher SNR) and, when trace_*.csv files are present, convergence.png.
Usage: python3 plot_results.py [output_dir]
"""
import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent

with open(here / "summary.csv") as fh:
    summary = list(csv.DictReader(fh))

curves = defaultdict(list)
for rec in summary:
    val = rec["sweep_value"]
    curves[rec["scheme"]].append((float(val) if val else 0.0, float(rec["median_mse"])))

fig, ax = plt.subplots(figsize=(6, 4.2))
for scheme, pts in curves.items():
    pts.sort()
    ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=scheme)
ax.set_yscale("log")
ax.set_xlabel("sweep value (for noise power in W: lower value = higher SNR)")
ax.set_ylabel("median final sum MSE")
ax.grid(True, which="both", alpha=0.4)
ax.legend()
if all(len(pts) > 1 for pts in curves.values()):
    xs = sorted({p[0] for pts in curves.values() for p in pts})
    if xs and xs[0] > 0 and xs[-1] / xs[0] > 50:
        ax.set_xscale("log")
fig.tight_layout()
fig.savefig(here / "mse_curves.png", dpi=150)

traces = sorted(here.glob("trace_*.csv"))
if traces:
    fig, ax = plt.subplots(figsize=(6, 4.2))
    for path in traces:
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        ax.plot([int(r["iteration"]) for r in rows],
                [float(r["objective"]) for r in rows], label=path.stem)
    ax.set_xlabel("iteration")
    ax.set_ylabel("sum MSE")
    ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(here / "convergence.png", dpi=150)
print("wrote plots to", here)
'''


def emit_outputs(rows: list[ResultRow], out_dir,
                 debug_channel_hash: bool = False) -> dict[str, Path]:
    """Write results.csv, summary.csv and plot_results.py into out_dir."""
    if not rows:
        raise ValueError("no result rows to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    try:
        paths["results"] = out / "results.csv"
        paths["results"].write_text(format_results_csv(rows, debug_channel_hash),
                                    encoding="ascii")
        paths["summary"] = out / "summary.csv"
        paths["summary"].write_text(format_summary_csv(rows), encoding="ascii")
        paths["plot_script"] = out / "plot_results.py"
        paths["plot_script"].write_text(_PLOT_SCRIPT, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"failed writing sweep outputs under {out}: {exc}") from exc
    return paths


def default_workers() -> int:
    return max(1, int(os.environ.get("RISBEAM_WORKERS", "1")))
