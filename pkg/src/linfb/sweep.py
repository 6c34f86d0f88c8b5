"""Experiment harness: Kp sweeps, mode comparisons, percentile
summaries and CSV emission."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .simloop import ExperimentConfig, SimTrace, run_experiment

SUMMARY_COLUMNS = ("kp", "mode", "seed_count", "pos_err_med", "pos_err_p5",
                   "pos_err_p95", "vel_err_med", "vel_err_p5", "vel_err_p95",
                   "vel_err_p9", "blowup_frac")


def percentile(samples, p: float) -> float:
    """Linear-interpolation quantile, inclusive convention:
    rank h = (len - 1) * p / 100 on the sorted samples."""
    s = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    if s.size == 0:
        raise ValueError("percentile of empty sample set")
    if not np.all(np.isfinite(s)):
        raise ValueError("samples must be finite")
    h = (s.size - 1) * p / 100.0
    lo = int(np.floor(h))
    hi = min(lo + 1, s.size - 1)
    return float(s[lo] + (h - lo) * (s[hi] - s[lo]))


@dataclass(frozen=True)
class SweepSpec:
    kps: tuple                       # s^-2, strictly increasing
    modes: tuple = ("direct", "interpolated")
    seeds: tuple = (0,)
    base: ExperimentConfig = field(default_factory=ExperimentConfig)

    def __post_init__(self):
        kps = tuple(float(k) for k in self.kps)
        if not kps or any(k <= 0 for k in kps):
            raise ValueError("kp values must be positive")
        if any(b <= a for a, b in zip(kps, kps[1:])):
            raise ValueError("kp values must be strictly increasing")
        if not self.seeds:
            raise ValueError("need at least one seed")
        object.__setattr__(self, "kps", kps)
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))


@dataclass(frozen=True)
class SummaryRow:
    kp: float
    mode: str
    seed_count: int
    pos_err_med: float
    pos_err_p5: float
    pos_err_p95: float
    vel_err_med: float
    vel_err_p5: float
    vel_err_p95: float
    vel_err_p9: float
    blowup_frac: float

    def as_csv(self) -> str:
        vals = [("%.17g" % self.kp), self.mode, str(self.seed_count)]
        vals += ["%.17g" % x for x in (
            self.pos_err_med, self.pos_err_p5, self.pos_err_p95,
            self.vel_err_med, self.vel_err_p5, self.vel_err_p95,
            self.vel_err_p9, self.blowup_frac)]
        return ",".join(vals)


def window_samples(trace: SimTrace, window_start: float):
    """Steady-state position/velocity error samples (t >= window_start)."""
    mask = trace.t >= window_start
    return trace.pos_err[mask], trace.vel_err[mask]


def summarize(kp: float, mode: str, traces, window_start: float) -> SummaryRow:
    pos, vel = [], []
    blown = 0
    for tr in traces:
        if tr.blew_up:
            blown += 1
        pw, vw = window_samples(tr, window_start)
        pos.append(pw)
        vel.append(vw)
    pos = np.concatenate(pos) if pos else np.array([])
    vel = np.concatenate(vel) if vel else np.array([])
    if pos.size == 0:
        stats = [float("nan")] * 7
    else:
        stats = [percentile(pos, 50), percentile(pos, 5), percentile(pos, 95),
                 percentile(vel, 50), percentile(vel, 5), percentile(vel, 95),
                 percentile(vel, 9)]
    return SummaryRow(kp=kp, mode=mode, seed_count=len(traces),
                      pos_err_med=stats[0], pos_err_p5=stats[1],
                      pos_err_p95=stats[2], vel_err_med=stats[3],
                      vel_err_p5=stats[4], vel_err_p95=stats[5],
                      vel_err_p9=stats[6],
                      blowup_frac=blown / max(len(traces), 1))


def trace_filename(kp: float, mode: str, seed: int) -> str:
    return f"run_kp{kp:g}_{mode}_seed{seed}.csv"


def run_sweep(spec: SweepSpec, out_dir: Optional[str] = None):
    """Execute all (kp, mode, seed) cells; returns the summary rows and
    writes one trace CSV per cell plus summary.csv when out_dir is set.

    A blown-up cell is recorded in its row, not fatal."""
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    rows = []
    for kp in spec.kps:
        for mode in spec.modes:
            traces = []
            for seed in spec.seeds:
                cfg = replace(spec.base, kp=kp, mode=mode, seed=seed)
                tr = run_experiment(cfg)
                traces.append(tr)
                if out_dir:
                    tr.to_csv(os.path.join(out_dir,
                                           trace_filename(kp, mode, seed)))
            rows.append(summarize(kp, mode, traces, spec.base.window_start))
    if out_dir:
        write_summary_csv(rows, os.path.join(out_dir, "summary.csv"))
    return rows


def write_summary_csv(rows, path: str) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(",".join(SUMMARY_COLUMNS) + "\n")
        for r in rows:
            f.write(r.as_csv() + "\n")


@dataclass(frozen=True)
class ModeComparison:
    kp: float
    seeds: tuple
    direct_spread: float        # p95 - p5 of velocity-error norm, m/s
    interp_spread: float
    direct_blowups: int
    interp_blowups: int

    @property
    def spread_ratio(self) -> float:
        """interpolated / direct velocity-error spread."""
        return self.interp_spread / self.direct_spread


def mode_spread(traces, window_start: float) -> float:
    vel = np.concatenate([window_samples(t, window_start)[1] for t in traces])
    return percentile(vel, 95) - percentile(vel, 5)


def compare_modes(cfg: ExperimentConfig, kp: float,
                  seeds=(0,), out_dir: Optional[str] = None) -> ModeComparison:
    """Run direct vs interpolated at identical seeds and report the
    velocity-error spread per mode; optionally export aligned series."""
    results = {}
    for mode in ("direct", "interpolated"):
        traces = [run_experiment(replace(cfg, kp=kp, mode=mode, seed=s))
                  for s in seeds]
        results[mode] = traces
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
            for s, tr in zip(seeds, traces):
                tr.to_csv(os.path.join(out_dir, trace_filename(kp, mode, s)))
    return ModeComparison(
        kp=kp, seeds=tuple(seeds),
        direct_spread=mode_spread(results["direct"], cfg.window_start),
        interp_spread=mode_spread(results["interpolated"], cfg.window_start),
        direct_blowups=sum(t.blew_up for t in results["direct"]),
        interp_blowups=sum(t.blew_up for t in results["interpolated"]))
