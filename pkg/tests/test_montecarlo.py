import io
import math

import numpy as np
import pytest

from bcfeedback.channel import ChannelConfig, spawn_trial_seeds
from bcfeedback.core import IntervalPolicy
from bcfeedback.montecarlo import (
    CHUNK_SIZE,
    default_checkpoints,
    default_policies,
    estimate,
    prepare_scheme,
    run_batch,
    run_trial,
    wilson_interval,
    write_csv,
    write_trajectory_csv,
)

SYM_CHANNEL = ChannelConfig(2, 10.0, 0.0, (1.0, 1.0))
OZ_CHANNEL = ChannelConfig(2, 10.0, 0.0, (1.0, 1.0))
DEG_CHANNEL = ChannelConfig(2, 1.0, 1.0, (0.0, 0.0))

# produced by this module's own pipeline at a pinned seed and frozen; guards
# the whole chain (seeding, draw order, schedule, policies, formatting)
GOLDEN_CSV = (
    "scheme,M,P,checkpoint_n,receiver,target_rate,errors,trials,"
    "err_rate,wilson_lo,wilson_hi,mean_power\n"
    "symmetric,2,10,4,1,0.512052349779,64,256,0.25,0.200916865682,0.306475062531,7.83706542444\n"
    "symmetric,2,10,4,2,0.512052349779,62,256,0.2421875,0.193770153351,0.298227772619,7.83706542444\n"
    "symmetric,2,10,8,1,0.512052349779,7,256,0.02734375,0.0133071563551,0.0553557079225,9.07886343273\n"
    "symmetric,2,10,8,2,0.512052349779,10,256,0.0390625,0.0213540358427,0.0703998317999,9.07886343273\n"
    "symmetric,2,10,12,1,0.512052349779,0,256,0,0,0.0147838564259,9.63631802584\n"
    "symmetric,2,10,12,2,0.512052349779,0,256,0,0,0.0147838564259,9.63631802584\n"
    "symmetric,2,10,16,1,0.512052349779,0,256,0,0,0.0147838564259,9.88758654189\n"
    "symmetric,2,10,16,2,0.512052349779,0,256,0,0,0.0147838564259,9.88758654189\n"
)


# ----------------------------------------------------------------------------
# preparation and policies
# ----------------------------------------------------------------------------


def test_prepare_scheme_unrolls():
    prep = prepare_scheme("symmetric", SYM_CHANNEL, 25)
    assert prep.horizon == 25
    assert len(prep.params) == 25
    assert prep.expected_power.shape == (25,)
    assert prep.rate_limits.shape == (2,)
    assert prep.p0 > 0.0


def test_prepare_scheme_zero_horizon():
    prep = prepare_scheme("ozarow2", OZ_CHANNEL, 0)
    assert prep.horizon == 0
    with pytest.raises(ValueError):
        prepare_scheme("symmetric", SYM_CHANNEL, -1)


def test_default_checkpoints():
    assert default_checkpoints(200) == (50, 100, 150, 200)
    assert default_checkpoints(0) == (0,)
    assert default_checkpoints(1) == (1,)
    assert default_checkpoints(3) == (1, 2, 3)
    marks = default_checkpoints(7)
    assert marks[-1] == 7 and all(m >= 1 for m in marks)


def test_default_policies_growth_inside_reliability_window():
    prep = prepare_scheme("symmetric", SYM_CHANNEL, 10)
    for f in (0.1, 0.5, 0.9):
        pols = default_policies(prep, f)
        assert len(pols) == 2
        for pol, r_star in zip(pols, prep.rate_limits):
            slack = (1.0 - f) * r_star
            assert 0.0 < pol.growth_rate_bits < slack
            assert pol.base_halfwidth == pytest.approx(math.sqrt(prep.p0))


def test_default_policies_overrides():
    prep = prepare_scheme("symmetric", SYM_CHANNEL, 10)
    pols = default_policies(prep, 0.5, base_halfwidth=2.5, growth_fraction=0.25)
    assert pols[0].base_halfwidth == 2.5
    assert pols[0].growth_rate_bits == pytest.approx(
        0.25 * 0.5 * prep.rate_limits[0]
    )
    with pytest.raises(ValueError):
        default_policies(prep, 1.5)
    with pytest.raises(ValueError):
        default_policies(prep, 0.5, growth_fraction=1.0)


# ----------------------------------------------------------------------------
# scalar trials vs vectorised batches
# ----------------------------------------------------------------------------


def test_trial_matches_batch_error_counts():
    prep = prepare_scheme("symmetric", SYM_CHANNEL, 30)
    pol = default_policies(prep, 0.5)
    marks = (10, 20, 30)
    trials = 64
    stats = run_batch(prep, 30, pol, 2024, trials, checkpoints=marks)
    seeds = spawn_trial_seeds(2024, trials)
    err = np.zeros((3, 2), dtype=int)
    for seed in seeds:
        out = run_trial(prep, 30, pol, np.random.default_rng(seed), checkpoints=marks)
        err += ~out.success
    assert np.array_equal(err, stats.err_counts)


def test_trial_checkpoint_zero_always_succeeds():
    prep = prepare_scheme("symmetric", SYM_CHANNEL, 5)
    pol = default_policies(prep, 0.5)
    out = run_trial(prep, 5, pol, np.random.default_rng(1), checkpoints=(0, 5))
    assert out.success[0].all()
    assert out.final_intervals[0][0] < out.final_intervals[0][1]


def test_trial_zero_horizon_decodes_whole_interval():
    prep = prepare_scheme("symmetric", SYM_CHANNEL, 0)
    pol = default_policies(prep, 0.5)
    out = run_trial(prep, 0, pol, np.random.default_rng(1))
    assert out.checkpoints == (0,)
    assert out.final_intervals == ((0.0, 1.0), (0.0, 1.0))


def test_trial_validates_horizon_and_checkpoints():
    prep = prepare_scheme("symmetric", SYM_CHANNEL, 5)
    pol = default_policies(prep, 0.5)
    with pytest.raises(ValueError):
        run_trial(prep, 6, pol, np.random.default_rng(0))
    with pytest.raises(ValueError):
        run_trial(prep, 5, pol, np.random.default_rng(0), checkpoints=(7,))
    with pytest.raises(ValueError):
        run_trial(prep, 5, [pol[0]] * 3, np.random.default_rng(0))


def test_trial_trajectory_rows():
    prep = prepare_scheme("ozarow2", OZ_CHANNEL, 8)
    pol = default_policies(prep, 0.5)
    out = run_trial(prep, 8, pol, np.random.default_rng(3), record_trajectory=True)
    assert len(out.trajectory) == 8
    n, x, y, s, slopes, intercepts = out.trajectory[-1]
    assert n == 8
    assert len(y) == len(s) == len(slopes) == len(intercepts) == 2
    assert out.power[-1] == pytest.approx(x * x, rel=1e-15)


def test_trial_success_agrees_with_decoded_interval_membership():
    # success is evaluated on the pivot scale; cross-check against actual
    # subinterval membership of theta at the final checkpoint
    prep = prepare_scheme("symmetric", SYM_CHANNEL, 12)
    pol = default_policies(prep, 0.5)
    seeds = spawn_trial_seeds(77, 100)
    checked = 0
    for seed in seeds:
        rng = np.random.default_rng(seed)
        theta = np.random.default_rng(seed).random(2)  # same first draws
        out = run_trial(prep, 12, pol, rng, checkpoints=(12,))
        for j in range(2):
            lo, hi = out.final_intervals[j]
            if min(abs(theta[j] - lo), abs(theta[j] - hi)) > 1e-12:
                assert (lo < theta[j] < hi) == bool(out.success[0, j])
                checked += 1
    assert checked >= 150  # the endpoint-tie guard should almost never trigger


def test_batch_thread_count_does_not_change_a_byte():
    prep = prepare_scheme("degraded", DEG_CHANNEL, 40)
    pol = default_policies(prep, 0.5)
    trials = CHUNK_SIZE + 257  # force an irregular chunk boundary
    one = run_batch(prep, 40, pol, 99, trials, threads=1)
    four = run_batch(prep, 40, pol, 99, trials, threads=4)
    assert np.array_equal(one.err_counts, four.err_counts)
    assert np.array_equal(one.cum_power_sum, four.cum_power_sum)
    assert np.array_equal(one.cum_power_sumsq, four.cum_power_sumsq)
    assert np.array_equal(one.step_power_sum, four.step_power_sum)
    assert np.array_equal(one.step_power_sumsq, four.step_power_sumsq)


def test_batch_roundtrip_identity_across_schemes():
    for scheme, channel in (("symmetric", SYM_CHANNEL), ("ozarow2", OZ_CHANNEL),
                            ("degraded", DEG_CHANNEL)):
        prep = prepare_scheme(scheme, channel, 60)
        pol = default_policies(prep, 0.5)
        stats = run_batch(prep, 60, pol, 5, 128, check_roundtrip=True)
        assert stats.roundtrip_max_relerr <= 1e-9, scheme


def test_batch_reproducible_across_calls():
    prep = prepare_scheme("symmetric", SYM_CHANNEL, 20)
    pol = default_policies(prep, 0.5)
    a = run_batch(prep, 20, pol, 7, 300)
    b = run_batch(prep, 20, pol, 7, 300)
    assert np.array_equal(a.err_counts, b.err_counts)
    assert np.array_equal(a.step_power_sum, b.step_power_sum)


# ----------------------------------------------------------------------------
# estimates and reporting
# ----------------------------------------------------------------------------


def test_wilson_interval_frozen_value():
    # 5 successes in 100 trials at the two-sided 95 percent level
    lo, hi = wilson_interval(5, 100)
    assert lo == pytest.approx(0.02154367915436796, abs=1e-14)
    assert hi == pytest.approx(0.11175046923191913, abs=1e-14)


def test_wilson_interval_edges_and_ordering():
    lo, hi = wilson_interval(0, 50)
    assert lo == 0.0 and 0.0 < hi < 0.1
    lo, hi = wilson_interval(50, 50)
    assert hi == 1.0 and 0.9 < lo < 1.0
    lo1, hi1 = wilson_interval(10, 100)
    assert lo1 < 0.1 < hi1
    with pytest.raises(ValueError):
        wilson_interval(0, 0)


def test_estimate_shapes_and_targets():
    prep = prepare_scheme("symmetric", SYM_CHANNEL, 12)
    ests = estimate(prep, trials=200, horizon=12, rate_fraction=0.25, seed=1)
    assert [e.checkpoint for e in ests] == [3, 6, 9, 12]
    for e in ests:
        assert e.errors.shape == (2,)
        assert e.trials == 200
        assert np.all(e.err_rate == e.errors / 200)
        assert np.all(e.wilson_lo <= e.err_rate)
        assert np.all(e.err_rate <= e.wilson_hi)
        assert e.target_rate == pytest.approx(0.25 * prep.rate_limits)


def test_estimate_requires_enough_trials():
    prep = prepare_scheme("symmetric", SYM_CHANNEL, 4)
    with pytest.raises(ValueError):
        estimate(prep, trials=99, horizon=4, rate_fraction=0.5, seed=0)


def test_estimate_zero_horizon_reports_zero_errors():
    prep = prepare_scheme("symmetric", SYM_CHANNEL, 0)
    ests = estimate(prep, trials=128, horizon=0, rate_fraction=0.5, seed=0)
    assert len(ests) == 1
    assert ests[0].checkpoint == 0
    assert np.all(ests[0].errors == 0)
    assert ests[0].mean_power == 0.0


def test_csv_golden_output():
    prep = prepare_scheme("symmetric", SYM_CHANNEL, 16)
    ests = estimate(prep, trials=256, horizon=16, rate_fraction=0.5, seed=424242)
    buf = io.StringIO()
    write_csv(buf, prep, ests)
    assert buf.getvalue() == GOLDEN_CSV


def test_trajectory_csv_layout():
    prep = prepare_scheme("ozarow2", OZ_CHANNEL, 6)
    pol = default_policies(prep, 0.5)
    out = run_trial(prep, 6, pol, np.random.default_rng(8), record_trajectory=True)
    buf = io.StringIO()
    write_trajectory_csv(buf, out, 2)
    lines = buf.getvalue().strip().split("\n")
    assert lines[0] == "n,x,y_1,y_2,s_1,s_2,slope_1,slope_2,intercept_1,intercept_2"
    assert len(lines) == 7  # header + one row per step
    assert lines[1].split(",")[0] == "1"


def test_trajectory_csv_requires_recording():
    prep = prepare_scheme("ozarow2", OZ_CHANNEL, 3)
    pol = default_policies(prep, 0.5)
    out = run_trial(prep, 3, pol, np.random.default_rng(8))
    with pytest.raises(ValueError):
        write_trajectory_csv(io.StringIO(), out, 2)


def test_estimate_error_rates_decay_with_time():
    # coarse sanity on the reliability direction at desk scale
    prep = prepare_scheme("symmetric", SYM_CHANNEL, 40)
    ests = estimate(prep, trials=800, horizon=40, rate_fraction=0.5, seed=31)
    first, last = ests[0], ests[-1]
    assert int(first.errors.sum()) >= int(last.errors.sum())
    assert int(last.errors.sum()) == 0  # default policy is very forgiving by n=40
