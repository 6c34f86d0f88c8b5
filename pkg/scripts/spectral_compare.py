#!/usr/bin/env python3
"""Compare the foot-velocity-norm spectrum of a policy run with and
without interpolation, reporting per-band power above a cutoff."""

import argparse

import numpy as np

from linfb import ExperimentConfig, run_experiment


def band_power(trace, window_start, band_hz, above_hz):
    mask = trace.t >= window_start
    vel = np.linalg.norm(trace.pd[mask], axis=1)
    fs = 1.0 / (trace.t[1] - trace.t[0])
    f = np.fft.rfftfreq(len(vel), 1.0 / fs)
    psd = np.abs(np.fft.rfft(vel - vel.mean())) ** 2 / len(vel)
    edges = np.arange(above_hz, f.max() + band_hz, band_hz)
    bands = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (f >= lo) & (f < hi)
        if sel.any():
            bands.append((lo, hi, float(psd[sel].max())))
    return bands


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--duration", type=float, default=5.0)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--band-hz", type=float, default=50.0)
    ap.add_argument("--above-hz", type=float, default=100.0)
    args = ap.parse_args(argv)

    traces = {}
    for mode in ("direct", "interpolated"):
        cfg = ExperimentConfig(controller="mlp", mode=mode,
                               duration=args.duration, seed=args.seed)
        traces[mode] = run_experiment(cfg)
        print(f"{mode}: blew_up={traces[mode].blew_up}")

    w0 = min(1.0, 0.5 * args.duration)
    bd = band_power(traces["direct"], w0, args.band_hz, args.above_hz)
    bi = band_power(traces["interpolated"], w0, args.band_hz, args.above_hz)
    print(f"{'band (Hz)':>16} {'direct':>12} {'interp':>12} {'ratio':>8}")
    worst = 0.0
    for (lo, hi, pd_), (_, _, pi_) in zip(bd, bi):
        ratio = pi_ / pd_
        worst = max(worst, ratio)
        print(f"{lo:7.0f}-{hi:<8.0f} {pd_:12.3e} {pi_:12.3e} {ratio:8.2f}")
    print(f"worst interpolated/direct band ratio: {worst:.2f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
