"""Command-line interface.

Subcommands: ``solve`` (fixed-point constants and rate limits), ``rates``
(full rate report), ``duality`` (broadcast vs multiple-access sum-rate
check), ``simulate`` (Monte Carlo error estimation from a JSON config), and
``sweep`` (the same over a list of power budgets).

Data goes to stdout or --out; logs go to stderr.  Exit codes: 0 success,
1 runtime failure, 2 configuration/usage error.  JSON configs are validated
before any computation; unknown keys are rejected by name.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass

from .channel import ChannelConfig
from .fixedpoint import rate_report, solve_lambda_bc, solve_lambda_mac
from .montecarlo import (
    CSV_HEADER,
    default_policies,
    estimate,
    prepare_scheme,
    write_csv,
)
from .schedules import SCHEME_IDS

__all__ = ["ConfigError", "RunConfig", "parse_run_config", "main"]

log = logging.getLogger("bcfeedback.cli")

DUALITY_TOL = 1e-10


class ConfigError(ValueError):
    """Invalid configuration; maps to exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    """A validated simulation request (one scheme, one power budget)."""

    scheme: str
    channel: ChannelConfig
    seed: int
    trials: int = 10_000
    horizon: int = 200
    rate_fraction: float = 0.5
    rho_mode: str = "tracked"
    g: float = 1.0
    out: str | None = None
    interval_base_halfwidth: float | None = None
    interval_growth_fraction: float = 0.5


_REQUIRED_KEYS = (
    "scheme", "num_receivers", "power_budget", "common_noise_var",
    "private_noise_vars", "seed",
)
_OPTIONAL_KEYS = (
    "trials", "horizon", "rate_fraction", "rho_mode", "g", "out",
    "interval_base_halfwidth", "interval_growth_fraction",
)


def _want_int(raw: dict, key: str, *, minimum: int | None = None) -> int:
    v = raw[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"config key {key!r} must be an integer")
    if minimum is not None and v < minimum:
        raise ConfigError(f"config key {key!r} must be >= {minimum}")
    return v


def _want_number(raw: dict, key: str) -> float:
    v = raw[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"config key {key!r} must be a number")
    if not math.isfinite(float(v)):
        raise ConfigError(f"config key {key!r} must be finite")
    return float(v)


def parse_run_config(raw: dict, *, allow_power_list: bool = False) -> list[RunConfig]:
    """Validate a raw JSON object into RunConfigs (one per power budget)."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = sorted(set(raw) - set(_REQUIRED_KEYS) - set(_OPTIONAL_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for key in _REQUIRED_KEYS:
        if key not in raw:
            raise ConfigError(f"missing required config key: {key}")

    scheme = raw["scheme"]
    if scheme not in SCHEME_IDS:
        raise ConfigError(f"config key 'scheme' must be one of {SCHEME_IDS}")
    m = _want_int(raw, "num_receivers", minimum=1)
    seed = _want_int(raw, "seed")
    common = _want_number(raw, "common_noise_var")
    priv = raw["private_noise_vars"]
    if not isinstance(priv, list) or any(
        isinstance(v, bool) or not isinstance(v, (int, float)) for v in priv
    ):
        raise ConfigError("config key 'private_noise_vars' must be a list of numbers")
    powers_raw = raw["power_budget"]
    if isinstance(powers_raw, list):
        if not allow_power_list:
            raise ConfigError(
                "config key 'power_budget' must be a single number here; "
                "a list is only accepted by the sweep command"
            )
        if not powers_raw:
            raise ConfigError("config key 'power_budget' list must be nonempty")
        powers = []
        for v in powers_raw:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError("config key 'power_budget' entries must be positive numbers")
            powers.append(float(v))
    else:
        powers = [_want_number(raw, "power_budget")]

    kwargs = {}
    if "trials" in raw:
        kwargs["trials"] = _want_int(raw, "trials", minimum=100)
    if "horizon" in raw:
        kwargs["horizon"] = _want_int(raw, "horizon", minimum=0)
    if "rate_fraction" in raw:
        f = _want_number(raw, "rate_fraction")
        if not 0.0 < f < 1.0:
            raise ConfigError("config key 'rate_fraction' must lie strictly between 0 and 1")
        kwargs["rate_fraction"] = f
    if "rho_mode" in raw:
        mode = raw["rho_mode"]
        if mode not in ("tracked", "pinned"):
            raise ConfigError("config key 'rho_mode' must be 'tracked' or 'pinned'")
        kwargs["rho_mode"] = mode
    if "g" in raw:
        g = _want_number(raw, "g")
        if not g > 0:
            raise ConfigError("config key 'g' must be positive")
        kwargs["g"] = g
    if "out" in raw:
        if not isinstance(raw["out"], str):
            raise ConfigError("config key 'out' must be a string path")
        kwargs["out"] = raw["out"]
    if "interval_base_halfwidth" in raw:
        v = _want_number(raw, "interval_base_halfwidth")
        if not v > 0:
            raise ConfigError("config key 'interval_base_halfwidth' must be positive")
        kwargs["interval_base_halfwidth"] = v
    if "interval_growth_fraction" in raw:
        v = _want_number(raw, "interval_growth_fraction")
        if not 0.0 < v < 1.0:
            raise ConfigError(
                "config key 'interval_growth_fraction' must lie strictly between 0 and 1"
            )
        kwargs["interval_growth_fraction"] = v

    configs = []
    for p in powers:
        try:
            channel = ChannelConfig(
                num_receivers=m, power_budget=p,
                common_noise_var=common, private_noise_vars=tuple(priv),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        _check_scheme_channel(scheme, channel)
        configs.append(RunConfig(scheme=scheme, channel=channel, seed=seed, **kwargs))
    return configs


def _check_scheme_channel(scheme: str, channel: ChannelConfig) -> None:
    if scheme == "ozarow2":
        if channel.num_receivers != 2:
            raise ConfigError("scheme 'ozarow2' needs num_receivers = 2")
        if (channel.common_noise_var + channel.private_noise_vars[0] <= 0
                or channel.common_noise_var + channel.private_noise_vars[1] <= 0):
            raise ConfigError("scheme 'ozarow2' needs positive total noise per receiver")
    elif scheme == "degraded":
        if any(v != 0.0 for v in channel.private_noise_vars):
            raise ConfigError("scheme 'degraded' needs all private noise variances zero")
        if channel.common_noise_var <= 0.0:
            raise ConfigError("scheme 'degraded' needs positive common noise variance")
        if channel.num_receivers & (channel.num_receivers - 1):
            raise ConfigError("scheme 'degraded' needs a power-of-two receiver count")
    elif scheme == "symmetric":
        if channel.common_noise_var != 0.0:
            raise ConfigError("scheme 'symmetric' needs zero common noise variance")
        if len(set(channel.private_noise_vars)) != 1 or channel.private_noise_vars[0] <= 0:
            raise ConfigError(
                "scheme 'symmetric' needs equal positive private noise variances"
            )
        if channel.num_receivers & (channel.num_receivers - 1):
            raise ConfigError("scheme 'symmetric' needs a power-of-two receiver count")


# ----------------------------------------------------------------------------
# channel assembly for solve/rates
# ----------------------------------------------------------------------------


def _parse_noise_flag(noise: str | None, scheme: str, m: int) -> tuple[float, tuple[float, ...]]:
    if noise is None:
        if scheme == "degraded":
            return 1.0, (0.0,) * m
        return 0.0, (1.0,) * m
    try:
        vals = [float(v) for v in noise.split(",")]
    except ValueError as exc:
        raise ConfigError(f"--noise must be comma-separated numbers, got {noise!r}") from exc
    if len(vals) != m + 1:
        raise ConfigError(
            f"--noise needs 1 + M = {m + 1} values (common, then per-receiver), got {len(vals)}"
        )
    return vals[0], tuple(vals[1:])


def _channel_from_args(args) -> ChannelConfig:
    m = args.M
    if args.scheme == "ozarow2" and m != 2:
        raise ConfigError("scheme 'ozarow2' needs -M 2")
    common, priv = _parse_noise_flag(args.noise, args.scheme, m)
    try:
        channel = ChannelConfig(num_receivers=m, power_budget=args.P,
                                common_noise_var=common, private_noise_vars=priv)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _check_scheme_channel(args.scheme, channel)
    return channel


# ----------------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------------


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w"), True


def _emit(args, text: str) -> None:
    fh, close = _open_out(getattr(args, "out", None))
    try:
        fh.write(text)
    finally:
        if close:
            fh.close()


def _report_payload(report) -> dict:
    payload = {
        "scheme": report.scheme,
        "M": report.M,
        "P": report.P,
        "residual": report.residual,
        "per_user_rate_bits": list(report.per_user),
        "sum_rate_bits": report.sum_rate,
    }
    if report.lam is not None:
        payload["lambda"] = report.lam
    if report.rho is not None:
        payload["rho"] = report.rho
    return payload


def _format_kv(payload: dict) -> str:
    lines = []
    for key, val in payload.items():
        if isinstance(val, list):
            lines.append(f"{key}: " + " ".join(format(v, ".12g") for v in val))
        elif isinstance(val, float):
            lines.append(f"{key}: {val:.12g}")
        else:
            lines.append(f"{key}: {val}")
    return "\n".join(lines) + "\n"


def cmd_solve(args) -> int:
    channel = _channel_from_args(args)
    report = rate_report(args.scheme, channel, g=args.g)
    payload = _report_payload(report)
    log.info("solved %s at M=%d P=%g", args.scheme, report.M, report.P)
    _emit(args, json.dumps(payload) + "\n" if args.json else _format_kv(payload))
    return 0


def cmd_rates(args) -> int:
    channel = _channel_from_args(args)
    report = rate_report(args.scheme, channel, g=args.g,
                         rate_fraction=args.rate_fraction)
    payload = _report_payload(report)
    payload["rate_fraction"] = report.rate_fraction
    payload["target_rate_bits"] = list(report.target_rates)
    payload["error_exponent_bases"] = list(report.exponent_bases)
    if report.avg_power is not None:
        payload["avg_power"] = report.avg_power
    if report.capacity_at_budget is not None:
        payload["capacity_at_budget_bits"] = report.capacity_at_budget
    _emit(args, json.dumps(payload) + "\n" if args.json else _format_kv(payload))
    return 0


def _parse_grid(text: str, name: str, cast):
    try:
        return [cast(v) for v in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"{name} must be comma-separated values, got {text!r}") from exc


def cmd_duality(args) -> int:
    ms = _parse_grid(args.M, "-M", int)
    ps = _parse_grid(args.P, "-P", float)
    lines = ["M,P,rate_bc_bits,rate_mac_bits,abs_diff,ok"]
    worst = 0.0
    for m in ms:
        for p in ps:
            bc = solve_lambda_bc(m, p)
            mac = solve_lambda_mac(m, p / m)
            diff = abs(bc.sum_rate - mac.sum_rate)
            worst = max(worst, diff)
            ok = "yes" if diff <= DUALITY_TOL else "no"
            lines.append(
                f"{m},{format(p, '.12g')},{bc.sum_rate:.12g},{mac.sum_rate:.12g},"
                f"{diff:.3g},{ok}"
            )
    _emit(args, "\n".join(lines) + "\n")
    if worst > DUALITY_TOL:
        log.error("duality gap %.3g exceeds %.1g", worst, DUALITY_TOL)
        return 1
    return 0


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc


def _apply_overrides(raw: dict, args) -> dict:
    raw = dict(raw)
    for key in ("seed", "trials", "horizon"):
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    return raw


def _run_simulation(cfg: RunConfig, threads: int):
    prepared = prepare_scheme(cfg.scheme, cfg.channel, cfg.horizon,
                              g=cfg.g, rho_mode=cfg.rho_mode)
    policies = default_policies(
        prepared, cfg.rate_fraction,
        base_halfwidth=cfg.interval_base_halfwidth,
        growth_fraction=cfg.interval_growth_fraction,
    )
    log.info(
        "simulating %s: M=%d P=%g trials=%d horizon=%d rate_fraction=%g",
        cfg.scheme, cfg.channel.num_receivers, cfg.channel.power_budget,
        cfg.trials, cfg.horizon, cfg.rate_fraction,
    )
    estimates = estimate(
        prepared, trials=cfg.trials, horizon=cfg.horizon,
        rate_fraction=cfg.rate_fraction, seed=cfg.seed,
        policies=policies, threads=threads,
    )
    return prepared, estimates


def cmd_simulate(args) -> int:
    raw = _apply_overrides(_load_config_file(args.config), args)
    cfg = parse_run_config(raw, allow_power_list=False)[0]
    prepared, estimates = _run_simulation(cfg, args.threads)
    out = args.out if args.out is not None else cfg.out
    fh, close = _open_out(out)
    try:
        write_csv(fh, prepared, estimates)
    finally:
        if close:
            fh.close()
    return 0


def cmd_sweep(args) -> int:
    raw = _apply_overrides(_load_config_file(args.config), args)
    configs = parse_run_config(raw, allow_power_list=True)
    out = args.out if args.out is not None else configs[0].out
    fh, close = _open_out(out)
    try:
        fh.write(CSV_HEADER + "\n")
        for cfg in configs:
            prepared, estimates = _run_simulation(cfg, args.threads)
            buf = io.StringIO()
            write_csv(buf, prepared, estimates)
            body = buf.getvalue().split("\n", 1)[1]
            fh.write(body)
    finally:
        if close:
            fh.close()
    return 0


# ----------------------------------------------------------------------------
# parser assembly
# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bcfeedback",
        description="Feedback coding over the Gaussian broadcast channel",
    )
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scheme_flags(p, with_fraction=False):
        p.add_argument("--scheme", required=True, choices=SCHEME_IDS)
        p.add_argument("-M", type=int, default=2, help="number of receivers")
        p.add_argument("-P", type=float, default=10.0, help="power budget")
        p.add_argument("--g", type=float, default=1.0,
                       help="receiver-2 mixing gain (two-user scheme)")
        p.add_argument("--noise", default=None,
                       help="comma list: common variance, then M private variances")
        p.add_argument("--json", action="store_true", help="emit a JSON object")
        p.add_argument("--out", default=None, help="write output here instead of stdout")
        if with_fraction:
            p.add_argument("--rate-fraction", dest="rate_fraction", type=float,
                           default=0.5, help="operating rate as a fraction of R*")

    p_solve = sub.add_parser("solve", help="solve the scheme's fixed point")
    add_scheme_flags(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_rates = sub.add_parser("rates", help="full rate report with exponent bases")
    add_scheme_flags(p_rates, with_fraction=True)
    p_rates.set_defaults(func=cmd_rates)

    p_dual = sub.add_parser("duality", help="broadcast vs multiple-access sum rates")
    p_dual.add_argument("-M", default="2,4,8", help="comma list of receiver counts")
    p_dual.add_argument("-P", default="1,10,100", help="comma list of power budgets")
    p_dual.add_argument("--out", default=None)
    p_dual.set_defaults(func=cmd_duality)

    for name, fn in (("simulate", cmd_simulate), ("sweep", cmd_sweep)):
        p_sim = sub.add_parser(name, help=f"{name} from a JSON config")
        p_sim.add_argument("--config", required=True, help="JSON config path")
        p_sim.add_argument("--out", default=None,
                           help="CSV output path (default: config 'out' or stdout)")
        p_sim.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        p_sim.add_argument("--seed", type=int, default=None, help="override config seed")
        p_sim.add_argument("--trials", type=int, default=None)
        p_sim.add_argument("--horizon", type=int, default=None)
        p_sim.set_defaults(func=fn)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures: solver, IO, invariants
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
