#!/usr/bin/env python3
"""Measure decoding-error decay against block length by Monte Carlo.

Runs one scheme at a fixed channel and prints, for each checkpoint, the
per-receiver error rate with a 95% Wilson interval and the running mean
transmit power.  The target rate is a fraction of the per-receiver limit, so
errors should fall roughly geometrically as the horizon grows.

Examples:
    python3 scripts/error_decay.py --scheme symmetric -M 2 -P 10
    python3 scripts/error_decay.py --scheme degraded -M 4 -P 10 \\
        --noise 1,0,0,0,0 --trials 20000 --horizon 400 --out decay.csv
"""

from __future__ import annotations

import argparse
import sys

from bcfeedback.channel import ChannelConfig
from bcfeedback.montecarlo import (
    default_checkpoints,
    default_policies,
    estimate,
    prepare_scheme,
    write_csv,
)


def parse_noise(text: str, m: int) -> tuple[float, tuple[float, ...]]:
    parts = [float(tok) for tok in text.split(",")]
    if len(parts) != 1 + m:
        raise SystemExit(f"--noise needs 1 + {m} comma-separated variances")
    return parts[0], tuple(parts[1:])


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scheme", required=True,
                        choices=("ozarow2", "degraded", "symmetric"))
    parser.add_argument("-M", "--receivers", type=int, default=2)
    parser.add_argument("-P", "--power", type=float, default=10.0)
    parser.add_argument("--noise", default=None,
                        help="common,private1,...,privateM variances; default matches the scheme")
    parser.add_argument("--trials", type=int, default=10_000)
    parser.add_argument("--horizon", type=int, default=200)
    parser.add_argument("--rate-fraction", type=float, default=0.5)
    parser.add_argument("--interval-base", type=float, default=None,
                        help="decoding-interval base half-width (default: embedding std)")
    parser.add_argument("--interval-growth-fraction", type=float, default=0.5,
                        help="fraction of the rate slack spent growing the interval; "
                        "smaller values decode more aggressively and err more often")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=4)
    parser.add_argument("--out", default=None, help="also write the rows as CSV")
    args = parser.parse_args(argv)

    m = args.receivers
    if args.noise is not None:
        common, private = parse_noise(args.noise, m)
    elif args.scheme == "degraded":
        common, private = 1.0, (0.0,) * m
    else:
        common, private = 0.0, (1.0,) * m
    channel = ChannelConfig(m, args.power, common, private)

    prepared = prepare_scheme(args.scheme, channel, args.horizon)
    policies = default_policies(
        prepared,
        args.rate_fraction,
        base_halfwidth=args.interval_base,
        growth_fraction=args.interval_growth_fraction,
    )
    results = estimate(
        prepared,
        trials=args.trials,
        horizon=args.horizon,
        rate_fraction=args.rate_fraction,
        seed=args.seed,
        policies=policies,
        checkpoints=default_checkpoints(args.horizon),
        threads=args.threads,
    )

    print(f"scheme={args.scheme} M={m} P={args.power:g} trials={args.trials} "
          f"rate fraction={args.rate_fraction:g} seed={args.seed}")
    print(f"per-receiver rate limits (bits/step): "
          f"{[round(float(r), 6) for r in prepared.rate_limits]}")
    header = (f"{'n':>6} {'receiver':>8} {'errors':>8} {'rate':>10} "
              f"{'wilson lo':>10} {'wilson hi':>10} {'mean power':>11}")
    print(header)
    print("-" * len(header))
    for res in results:
        for j in range(m):
            print(f"{res.checkpoint:>6d} {j + 1:>8d} {int(res.errors[j]):>8d} "
                  f"{res.err_rate[j]:>10.6f} {res.wilson_lo[j]:>10.6f} "
                  f"{res.wilson_hi[j]:>10.6f} {res.mean_power:>11.6f}")

    if args.out is not None:
        with open(args.out, "w", encoding="utf-8") as fh:
            write_csv(fh, prepared, results)
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
