"""Monte Carlo harness: per-trial streams, vectorised batches, error estimates.

Reproducibility contract: trial i draws from a child stream spawned from the
master seed by trial index, consuming first M uniforms (message points) and
then 1 + M standard normals per step.  ``run_trial`` walks one trial through
the real encoder/decoder ops; ``run_batch`` is its vectorised twin used for
estimation, processing trials in fixed chunks of ``CHUNK_SIZE`` so results are
byte-identical no matter how many worker threads execute the chunks.

Success at checkpoint n for receiver m means the residual source value lies
inside the pivot interval: |s_{n+1}| < t_n.  That is the same event as "the
message point lies in the decoded subinterval", exact up to cdf rounding, but
stays evaluable long after the decoded interval's float endpoints saturate.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .channel import ChannelConfig, noise_stds, sample_noise, spawn_trial_seeds, transmit
from .core import (
    DecoderState,
    EncoderState,
    IntervalPolicy,
    decode_interval,
    decoder_absorb,
    embed_message,
    encode,
    update_sources,
)
from .schedules import make_schedule

__all__ = [
    "CHUNK_SIZE",
    "WILSON_Z",
    "PreparedScheme",
    "prepare_scheme",
    "default_policies",
    "default_checkpoints",
    "TrialOutcome",
    "run_trial",
    "BatchStats",
    "run_batch",
    "ErrorEstimate",
    "estimate",
    "wilson_interval",
    "write_csv",
    "write_trajectory_csv",
    "CSV_HEADER",
]

CHUNK_SIZE = 1024
WILSON_Z = 1.959963984540054  # two-sided 95%
CSV_HEADER = (
    "scheme,M,P,checkpoint_n,receiver,target_rate,errors,trials,"
    "err_rate,wilson_lo,wilson_hi,mean_power"
)


@dataclass(frozen=True)
class PreparedScheme:
    """A schedule unrolled over a horizon, shareable across trials and threads."""

    scheme: str
    channel: ChannelConfig
    p0: float
    params: tuple
    expected_power: np.ndarray
    rate_limits: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.params)


def prepare_scheme(scheme: str, channel: ChannelConfig, horizon: int, *,
                   g: float = 1.0, rho_mode: str = "tracked",
                   check_invariants: bool = True) -> PreparedScheme:
    """Unroll ``horizon`` steps of the named schedule."""
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    sched = make_schedule(scheme, channel, g=g, rho_mode=rho_mode,
                          check_invariants=check_invariants)
    steps = [sched.step() for _ in range(horizon)]
    power = np.array([st.expected_power for st in steps], dtype=float)
    return PreparedScheme(
        scheme=scheme,
        channel=channel,
        p0=float(sched.p0),
        params=tuple(st.params for st in steps),
        expected_power=power,
        rate_limits=np.asarray(sched.rate_limits(), dtype=float),
    )


def default_policies(prepared: PreparedScheme, rate_fraction: float, *,
                     base_halfwidth: float | None = None,
                     growth_fraction: float = 0.5) -> list[IntervalPolicy]:
    """Per-receiver pivot policies for a target rate of rate_fraction * R*.

    The default halfwidth growth is growth_fraction * (R* - R) bits per step
    with base sqrt(p0); both knobs are overridable, and the growth must stay
    strictly inside (0, R* - R) for the reliability argument to close.
    """
    if not (0.0 < rate_fraction < 1.0):
        raise ValueError("rate_fraction must lie strictly between 0 and 1")
    if not (0.0 < growth_fraction < 1.0):
        raise ValueError("growth_fraction must lie strictly between 0 and 1")
    base = math.sqrt(prepared.p0) if base_halfwidth is None else float(base_halfwidth)
    policies = []
    for r_star in prepared.rate_limits:
        slack = (1.0 - rate_fraction) * float(r_star)
        policies.append(IntervalPolicy(base_halfwidth=base,
                                       growth_rate_bits=growth_fraction * slack))
    return policies


def default_checkpoints(horizon: int) -> tuple[int, ...]:
    """Quarter-horizon checkpoints; horizon 0 degenerates to the single point 0."""
    if horizon == 0:
        return (0,)
    marks = sorted({max(1, round(horizon * f)) for f in (0.25, 0.5, 0.75, 1.0)})
    return tuple(marks)


def _policy_list(policy, m: int) -> list[IntervalPolicy]:
    if isinstance(policy, IntervalPolicy):
        return [policy] * m
    policies = list(policy)
    if len(policies) != m:
        raise ValueError(f"need one policy or {m} of them, got {len(policies)}")
    return policies


# ----------------------------------------------------------------------------
# single-trial path (full encoder/decoder fidelity)
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialOutcome:
    """Per-checkpoint success flags, per-step power, and final decoded intervals."""

    checkpoints: tuple[int, ...]
    success: np.ndarray  # (len(checkpoints), M) booleans
    power: np.ndarray  # (horizon,) transmitted x_n**2
    final_intervals: tuple[tuple[float, float], ...]
    trajectory: tuple | None = None


def run_trial(prepared: PreparedScheme, horizon: int, policy, rng, *,
              checkpoints: Sequence[int] | None = None,
              record_trajectory: bool = False) -> TrialOutcome:
    """One trial through the scalar encoder/decoder ops.

    Draw order (M uniforms, then 1 + M normals per step) matches run_batch
    row-for-row, which a regression test pins down.
    """
    ch = prepared.channel
    m = ch.num_receivers
    if horizon > prepared.horizon:
        raise ValueError("trial horizon exceeds the prepared schedule")
    policies = _policy_list(policy, m)
    marks = default_checkpoints(horizon) if checkpoints is None else tuple(checkpoints)
    if any(c < 0 or c > horizon for c in marks):
        raise ValueError("checkpoints must lie in [0, horizon]")

    theta = rng.random(m)
    state = EncoderState(s=np.array([embed_message(t, prepared.p0) for t in theta]),
                         step=0, p0=prepared.p0)
    decoders = [DecoderState(log_slope=0.0, intercept=0.0, step=0) for _ in range(m)]
    power = np.zeros(horizon)
    success = np.zeros((len(marks), m), dtype=bool)
    mark_index = {n: i for i, n in enumerate(marks)}
    rows = [] if record_trajectory else None

    if 0 in mark_index:
        success[mark_index[0], :] = True  # nothing observed: the full interval

    for n in range(1, horizon + 1):
        params = prepared.params[n - 1]
        x = encode(state, params)
        y = transmit(x, sample_noise(ch, rng))
        decoders = [
            decoder_absorb(dec, params.a[j], params.b[j], y[j])
            for j, dec in enumerate(decoders)
        ]
        state = update_sources(state, params, y)
        power[n - 1] = x * x
        if n in mark_index:
            i = mark_index[n]
            for j in range(m):
                success[i, j] = abs(state.s[j]) < policies[j].halfwidth(n)
        if rows is not None:
            rows.append((n, x, tuple(y), tuple(state.s),
                         tuple(d.slope for d in decoders),
                         tuple(d.intercept for d in decoders)))

    finals = tuple(
        decode_interval(decoders[j], policies[j], horizon, prepared.p0)
        for j in range(m)
    )
    return TrialOutcome(checkpoints=marks, success=success, power=power,
                        final_intervals=finals,
                        trajectory=tuple(rows) if rows is not None else None)


# ----------------------------------------------------------------------------
# vectorised batches
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class BatchStats:
    """Chunk-reduced statistics over a batch of trials."""

    trials: int
    checkpoints: tuple[int, ...]
    err_counts: np.ndarray  # (len(checkpoints), M) integer error counts
    cum_power_sum: np.ndarray  # per checkpoint: sum over trials of (1/n) sum x_k^2
    cum_power_sumsq: np.ndarray
    step_power_sum: np.ndarray  # (horizon,) sum over trials of x_n^2
    step_power_sumsq: np.ndarray
    roundtrip_max_relerr: float  # max over steps/trials of |T_n(s_{n+1}) - s_1| / max(1, |s_1|)


def _run_chunk(prepared: PreparedScheme, horizon: int,
               policies: list[IntervalPolicy], marks: tuple[int, ...],
               seeds, check_roundtrip: bool):
    ch = prepared.channel
    m = ch.num_receivers
    t = len(seeds)
    common_std, private_std = noise_stds(ch)

    theta = np.empty((t, m))
    noise = np.empty((t, horizon, 1 + m))
    for i, seed in enumerate(seeds):
        rng = np.random.default_rng(seed)
        theta[i] = rng.random(m)
        noise[i] = rng.standard_normal((horizon, 1 + m))

    s = embed_message(theta, prepared.p0)
    s1 = s.copy()
    log_slope = np.zeros(m)
    intercept = np.zeros((t, m))
    cum_power = np.zeros(t)
    err_counts = np.zeros((len(marks), m), dtype=np.int64)
    cum_sum = np.zeros(len(marks))
    cum_sumsq = np.zeros(len(marks))
    step_sum = np.zeros(horizon)
    step_sumsq = np.zeros(horizon)
    mark_index = {n: i for i, n in enumerate(marks)}
    roundtrip = 0.0

    if 0 in mark_index:
        pass  # success everywhere; zero errors, zero mean power

    for n in range(1, horizon + 1):
        params = prepared.params[n - 1]
        x = s @ params.alpha * params.beta  # (t,)
        y = x[:, None] + common_std * noise[:, n - 1, :1] + private_std * noise[:, n - 1, 1:]
        intercept += np.exp(log_slope) * (params.b * y)
        log_slope = log_slope + np.log(params.a)
        s = (s - params.b * y) / params.a
        xx = x * x
        cum_power += xx
        step_sum[n - 1] = xx.sum()
        step_sumsq[n - 1] = (xx * xx).sum()
        if check_roundtrip:
            recon = np.exp(log_slope) * s + intercept
            rel = np.abs(recon - s1) / np.maximum(1.0, np.abs(s1))
            roundtrip = max(roundtrip, float(rel.max()))
        if n in mark_index:
            i = mark_index[n]
            halfw = np.array([pol.halfwidth(n) for pol in policies])
            err_counts[i] += (np.abs(s) >= halfw).sum(axis=0)
            mp = cum_power / n
            cum_sum[i] = mp.sum()
            cum_sumsq[i] = (mp * mp).sum()

    return err_counts, cum_sum, cum_sumsq, step_sum, step_sumsq, roundtrip


def run_batch(prepared: PreparedScheme, horizon: int, policy, seed: int,
              trials: int, *, checkpoints: Sequence[int] | None = None,
              threads: int = 1, check_roundtrip: bool = False) -> BatchStats:
    """Vectorised trials in fixed chunks; reduction order is chunk order.

    The thread count only schedules chunk execution, never the arithmetic, so
    every (seed, trials, horizon) triple gives identical statistics.
    """
    ch = prepared.channel
    m = ch.num_receivers
    if horizon > prepared.horizon:
        raise ValueError("batch horizon exceeds the prepared schedule")
    policies = _policy_list(policy, m)
    marks = default_checkpoints(horizon) if checkpoints is None else tuple(checkpoints)
    if any(c < 0 or c > horizon for c in marks):
        raise ValueError("checkpoints must lie in [0, horizon]")

    seeds = spawn_trial_seeds(seed, trials)
    chunks = [seeds[i:i + CHUNK_SIZE] for i in range(0, trials, CHUNK_SIZE)]

    def work(chunk):
        return _run_chunk(prepared, horizon, policies, marks, chunk, check_roundtrip)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(c) for c in chunks]

    err = np.zeros((len(marks), m), dtype=np.int64)
    cum_sum = np.zeros(len(marks))
    cum_sumsq = np.zeros(len(marks))
    step_sum = np.zeros(horizon)
    step_sumsq = np.zeros(horizon)
    roundtrip = 0.0
    for res in results:  # chunk order, independent of completion order
        err += res[0]
        cum_sum += res[1]
        cum_sumsq += res[2]
        step_sum += res[3]
        step_sumsq += res[4]
        roundtrip = max(roundtrip, res[5])
    return BatchStats(trials=trials, checkpoints=marks, err_counts=err,
                      cum_power_sum=cum_sum, cum_power_sumsq=cum_sumsq,
                      step_power_sum=step_sum, step_power_sumsq=step_sumsq,
                      roundtrip_max_relerr=roundtrip)


# ----------------------------------------------------------------------------
# estimation and reporting
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorEstimate:
    """Error statistics for one checkpoint across all receivers."""

    checkpoint: int
    errors: np.ndarray  # (M,) counts
    trials: int
    err_rate: np.ndarray
    wilson_lo: np.ndarray
    wilson_hi: np.ndarray
    mean_power: float  # mean over trials of (1/n) sum_{k<=n} x_k^2
    target_rate: np.ndarray


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1.0 - p) / trials + z * z / (4 * trials * trials))
    # at the extremes center -+ half is an exact cancellation; pin it
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return (lo, hi)


def estimate(prepared: PreparedScheme, *, trials: int, horizon: int,
             rate_fraction: float, seed: int,
             policies: Sequence[IntervalPolicy] | IntervalPolicy | None = None,
             checkpoints: Sequence[int] | None = None,
             threads: int = 1) -> list[ErrorEstimate]:
    """Error-rate estimates at the checkpoints (quarter horizons by default)."""
    if trials < 100:
        raise ValueError("need at least 100 trials for a meaningful estimate")
    if policies is None:
        policies = default_policies(prepared, rate_fraction)
    else:
        policies = _policy_list(policies, prepared.channel.num_receivers)
    stats = run_batch(prepared, horizon, policies, seed, trials,
                      checkpoints=checkpoints, threads=threads)
    target = rate_fraction * prepared.rate_limits
    out = []
    for i, n in enumerate(stats.checkpoints):
        errs = stats.err_counts[i]
        rates = errs / trials
        lo = np.empty_like(rates)
        hi = np.empty_like(rates)
        for j, k in enumerate(errs):
            lo[j], hi[j] = wilson_interval(int(k), trials)
        mean_power = 0.0 if n == 0 else float(stats.cum_power_sum[i] / trials)
        out.append(ErrorEstimate(
            checkpoint=int(n), errors=errs.copy(), trials=trials,
            err_rate=rates, wilson_lo=lo, wilson_hi=hi,
            mean_power=mean_power, target_rate=target.copy(),
        ))
    return out


def _fmt(v: float) -> str:
    return format(float(v), ".12g")


def write_csv(fh, prepared: PreparedScheme, estimates: Iterable[ErrorEstimate]) -> None:
    """One row per (checkpoint, receiver); floats at 12 significant digits."""
    ch = prepared.channel
    fh.write(CSV_HEADER + "\n")
    for est in estimates:
        for j in range(ch.num_receivers):
            row = (
                prepared.scheme,
                str(ch.num_receivers),
                _fmt(ch.power_budget),
                str(est.checkpoint),
                str(j + 1),
                _fmt(est.target_rate[j]),
                str(int(est.errors[j])),
                str(est.trials),
                _fmt(est.err_rate[j]),
                _fmt(est.wilson_lo[j]),
                _fmt(est.wilson_hi[j]),
                _fmt(est.mean_power),
            )
            fh.write(",".join(row) + "\n")


def write_trajectory_csv(fh, outcome: TrialOutcome, num_receivers: int) -> None:
    """Trajectory dump: n, x, y_1..y_M, s_1..s_M, slope_1..slope_M, intercept_1..intercept_M."""
    if outcome.trajectory is None:
        raise ValueError("trial was run without record_trajectory=True")
    m = num_receivers
    header = (
        ["n", "x"]
        + [f"y_{j + 1}" for j in range(m)]
        + [f"s_{j + 1}" for j in range(m)]
        + [f"slope_{j + 1}" for j in range(m)]
        + [f"intercept_{j + 1}" for j in range(m)]
    )
    fh.write(",".join(header) + "\n")
    for n, x, y, s, slope, intercept in outcome.trajectory:
        vals = [str(n), _fmt(x)]
        vals += [_fmt(v) for v in y]
        vals += [_fmt(v) for v in s]
        vals += [_fmt(v) for v in slope]
        vals += [_fmt(v) for v in intercept]
        fh.write(",".join(vals) + "\n")
