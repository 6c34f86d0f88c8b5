#!/usr/bin/env python3
"""Generate a seeded stand-in torque policy and save it as a binary
policy file usable via the `policy_file` config field."""

import argparse

from linfb import random_policy, save_policy


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", help="output path, e.g. policy.mlp")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--joints", type=int, default=6)
    ap.add_argument("--hidden", type=int, nargs="+", default=[32, 32])
    ap.add_argument("--output-scale", type=float, default=0.1)
    args = ap.parse_args(argv)
    policy = random_policy(args.seed, args.joints, hidden=tuple(args.hidden),
                           output_scale=args.output_scale)
    save_policy(policy, args.out)
    dims = " -> ".join(str(W.shape[1]) for W in policy.weights)
    print(f"wrote {args.out} ({dims} -> {policy.output_dim})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
