"""Command-line experiment harness.

Subcommands: run, sweep, compare, codec-check, model-info. Any config
field can be overridden with --set key=value. Exit code 0 on success,
2 on configuration errors; simulation blow-ups are data, not failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np
import yaml

from . import wire
from .model_io import load_model
from .simloop import ConfigError, ExperimentConfig, run_experiment
from .sweep import (SweepSpec, compare_modes, run_sweep, summarize,
                    write_summary_csv)


def _parse_value(text: str):
    return yaml.safe_load(text)


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    updates = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        if key not in cfg.__dataclass_fields__:
            raise ConfigError(f"unknown config field {key!r}")
        val = _parse_value(val)
        if isinstance(val, list):
            val = tuple(val)
        updates[key] = val
    if args.seed is not None:
        updates["seed"] = args.seed
    if updates:
        cfg = dataclasses.replace(cfg, **updates)
    cfg.validate()
    return cfg


def _load_config(path) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    return ExperimentConfig.from_yaml(path)


def cmd_run(args) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    trace = run_experiment(cfg)
    os.makedirs(args.out_dir, exist_ok=True)
    out = os.path.join(args.out_dir, "trace.csv")
    trace.to_csv(out)
    row = summarize(cfg.kp, cfg.mode, [trace], cfg.window_start)
    print(f"wrote {out}")
    if trace.blew_up:
        print(f"blow-up at t={trace.blowup_time:.6f} s")
    else:
        print(f"pos_err median {row.pos_err_med:.6g} m, "
              f"vel_err median {row.vel_err_med:.6g} m/s "
              f"(window t >= {cfg.window_start} s)")
    return 0


def cmd_sweep(args) -> int:
    with open(args.spec) as f:
        doc = yaml.safe_load(f) or {}
    base = ExperimentConfig.from_dict(doc.get("base", {}))
    base = _apply_overrides(base, args)
    spec = SweepSpec(
        kps=tuple(doc.get("kps", (100, 200, 500, 1000, 2000))),
        modes=tuple(doc.get("modes", ("direct", "interpolated"))),
        seeds=tuple(doc.get("seeds", (0,))),
        base=base)
    rows = run_sweep(spec, out_dir=args.out_dir)
    print(f"wrote {os.path.join(args.out_dir, 'summary.csv')}")
    for r in rows:
        print(f"kp={r.kp:g} {r.mode}: pos_err med {r.pos_err_med:.6g} m, "
              f"vel spread {r.vel_err_p95 - r.vel_err_p5:.6g} m/s, "
              f"blowups {r.blowup_frac:.0%}")
    return 0


def cmd_compare(args) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    rep = compare_modes(cfg, args.kp, seeds=tuple(args.seeds),
                        out_dir=args.out_dir)
    print(f"kp={rep.kp:g}: direct vel-err spread {rep.direct_spread:.6g}, "
          f"interpolated {rep.interp_spread:.6g}, "
          f"ratio {rep.spread_ratio:.4f}")
    if rep.direct_blowups or rep.interp_blowups:
        print(f"blowups: direct {rep.direct_blowups}, "
              f"interpolated {rep.interp_blowups}")
    report = os.path.join(args.out_dir, "compare_report.txt")
    os.makedirs(args.out_dir, exist_ok=True)
    with open(report, "w") as f:
        f.write(f"kp {rep.kp:.17g}\nseeds {list(rep.seeds)}\n"
                f"direct_spread {rep.direct_spread:.17g}\n"
                f"interp_spread {rep.interp_spread:.17g}\n"
                f"spread_ratio {rep.spread_ratio:.17g}\n"
                f"direct_blowups {rep.direct_blowups}\n"
                f"interp_blowups {rep.interp_blowups}\n")
    print(f"wrote {report}")
    return 0


def cmd_codec_check(args) -> int:
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    for _ in range(args.packets):
        k = int(rng.integers(0, 8))
        p = wire.StatePacket(
            board_id=int(rng.integers(0, 256)),
            cycle=int(rng.integers(0, 2 ** 32)),
            joint_ids=tuple(int(j) for j in rng.integers(0, 256, size=k)),
            q=tuple(rng.normal(size=k)), v=tuple(rng.normal(size=k)))
        if wire.decode_packet(wire.encode_packet(p)) != p:
            print("FAIL: roundtrip mismatch")
            return 1
    frame = wire.encode_packet(wire.StatePacket(
        board_id=1, cycle=42, joint_ids=(0, 1), q=(0.5, -0.25), v=(1.5, 0.0)))
    caught = 0
    total = len(frame) * 8
    for bit in range(total):
        corrupted = bytearray(frame)
        corrupted[bit // 8] ^= 1 << (bit % 8)
        try:
            wire.decode_packet(bytes(corrupted))
        except wire.PacketError:
            caught += 1
    print(f"roundtrip OK on {args.packets} packets; "
          f"bit flips caught {caught}/{total}")
    return 0 if caught == total else 1


def cmd_model_info(args) -> int:
    model = load_model(args.model)
    print(f"model {model.name}: n = {model.n} joints")
    print(f"gravity {model.gravity.tolist()} m/s^2")
    for i, j in enumerate(model.joints):
        parent = "base" if j.parent < 0 else model.joints[j.parent].name or str(j.parent)
        print(f"  [{i}] {j.name or f'joint{i}'}: parent {parent}, "
              f"axis {j.axis.tolist()}, mass {j.mass} kg, "
              f"damping {j.damping} N*m*s/rad, "
              f"torque limit {j.torque_limit} N*m")
    for name, f in model.frames.items():
        print(f"  frame {name}: link {f.link}, "
              f"offset {f.translation.tolist()} m")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="linfb")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out-dir", default="out")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override any config field")

    p = sub.add_parser("run", help="run one experiment")
    p.add_argument("config", nargs="?", help="YAML experiment config")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a Kp/mode sweep")
    p.add_argument("spec", help="YAML sweep spec (kps, modes, seeds, base)")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="direct vs interpolated at one Kp")
    p.add_argument("config", nargs="?")
    p.add_argument("--kp", type=float, required=True)
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("codec-check", help="state-packet codec self-test")
    p.add_argument("--packets", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_codec_check)

    p = sub.add_parser("model-info", help="describe a robot model file")
    p.add_argument("model")
    p.set_defaults(func=cmd_model_info)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
