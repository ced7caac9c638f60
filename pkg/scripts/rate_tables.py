#!/usr/bin/env python3
"""Print achievable-rate tables for the feedback schedules.

For each requested receiver count and power budget this prints the sum-rate
fixed point, the per-receiver rate, the schedule coefficients (b, gamma), and
the matching multiple-access rate as a consistency column.  Output is a plain
aligned table, or CSV with --csv for downstream plotting.

Examples:
    python3 scripts/rate_tables.py
    python3 scripts/rate_tables.py -M 2,4,8,16 -P 0.5,1,10,100 --csv
"""

from __future__ import annotations

import argparse
import sys

from bcfeedback.fixedpoint import solve_b_gamma, solve_lambda_bc, solve_lambda_mac

COLUMNS = ("M", "P", "lambda", "sum_rate_bits", "per_user_bits",
           "mac_gap", "b", "gamma")


def parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok]


def parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok]


def build_rows(receivers: list[int], powers: list[float]) -> list[tuple]:
    rows = []
    for m in receivers:
        for p in powers:
            bc = solve_lambda_bc(m, p)
            mac = solve_lambda_mac(m, p / m)
            bg = solve_b_gamma(bc.lam, m, p)
            rows.append((m, p, bc.lam, bc.sum_rate, bc.sum_rate / m,
                         abs(bc.sum_rate - mac.sum_rate), bg.b, bg.gamma))
    return rows


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("-M", "--receivers", default="1,2,4,8",
                        help="comma-separated receiver counts (default 1,2,4,8)")
    parser.add_argument("-P", "--powers", default="0.5,1,10,100",
                        help="comma-separated power budgets (default 0.5,1,10,100)")
    parser.add_argument("--csv", action="store_true", help="emit CSV instead of a table")
    args = parser.parse_args(argv)

    rows = build_rows(parse_int_list(args.receivers), parse_float_list(args.powers))
    if args.csv:
        print(",".join(COLUMNS))
        for row in rows:
            print(",".join(f"{v:.12g}" if isinstance(v, float) else str(v) for v in row))
        return 0

    header = (f"{'M':>3} {'P':>8} {'lambda':>10} {'sum rate':>10} "
              f"{'per user':>10} {'mac gap':>9} {'b':>10} {'gamma':>10}")
    print(header)
    print("-" * len(header))
    for m, p, lam, total, per_user, gap, b, gamma in rows:
        print(f"{m:>3d} {p:>8.3g} {lam:>10.6f} {total:>10.6f} "
              f"{per_user:>10.6f} {gap:>9.1e} {b:>10.6f} {gamma:>10.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
