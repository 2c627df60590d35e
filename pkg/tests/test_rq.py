import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genlayer.codec import SyntheticRQLaw
from genlayer.errors import BelowGrid, EmptyInput, GridMismatch, InsufficientSamples, NonFiniteQuality
from genlayer.rq import (QualitySample, RQEstimate, fit_from_matrix, fit_rq, interpolate, lower_quality_bound,
                         prediction_interval, t_quantile, update_with_pilot)

# Student-t and normal quantiles read from printed statistical tables.
T_95_DOF4 = 2.1318
Z_95 = 1.6449


def stats_estimate(grid, means, variances, n):
    n = [float(n)] * len(grid) if np.isscalar(n) else [float(v) for v in n]
    return RQEstimate(tuple(grid), tuple(n), tuple(means), tuple(variances), tuple(n))


def samples_from(matrix, grid):
    return [QualitySample(i, L, float(q)) for i, row in enumerate(matrix) for L, q in zip(grid, row)]


# ---------------------------------------------------------------- fit_rq

def test_hand_statistics():
    est = fit_rq([QualitySample(i, 1.0, q) for i, q in enumerate((1.0, 2.0, 3.0))])
    assert est.means == (2.0,)
    assert est.variances == (1.0,)


def test_identical_samples():
    grid = [0.5, 1.0, 2.0]
    est = fit_rq(samples_from(np.full((4, 3), 3.5), grid))
    assert est.variances == (0.0, 0.0, 0.0)
    assert np.allclose(est.curve_value(grid), 3.5)


def test_single_sample_has_zero_variance():
    assert fit_rq([QualitySample(0, 1.0, 4.0)]).variances == (0.0,)


def test_recovers_law_means():
    law = SyntheticRQLaw(q_max=10, beta=1, sigma0=0.5, gamma=0)
    grid = [0.25, 0.5, 1.0, 2.0, 4.0]
    Q = law.sample(grid, 200, np.random.default_rng(0))
    est = fit_rq(samples_from(Q, grid))
    assert np.all(np.abs(np.array(est.means) - law.mean(grid)) < 0.15)


def test_fit_errors():
    with pytest.raises(EmptyInput):
        fit_rq([])
    with pytest.raises(NonFiniteQuality):
        fit_rq([QualitySample(0, 1.0, math.nan)])
    with pytest.raises(GridMismatch):
        fit_rq([QualitySample(0, 3.0, 1.0)], grid=[1.0, 2.0])
    with pytest.raises(EmptyInput):
        fit_rq([QualitySample(0, 1.0, 1.0)], grid=[1.0, 2.0])


def test_matrix_and_sample_fits_agree():
    grid = [0.5, 1.0, 3.0]
    Q = SyntheticRQLaw(gamma=0.2).sample(grid, 12, np.random.default_rng(1))
    a, b = fit_rq(samples_from(Q, grid)), fit_from_matrix(grid, Q)
    assert np.allclose(a.means, b.means, rtol=0, atol=1e-12)
    assert np.allclose(a.variances, b.variances, rtol=1e-12)


@given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=2, max_size=30), st.randoms())
def test_fit_is_permutation_invariant(values, rnd):
    grid = [1.0, 2.0]
    samples = [QualitySample(i, grid[i % 2], v) for i, v in enumerate(values)]
    if len({s.L_p for s in samples}) < 2:
        return
    shuffled = samples[:]
    rnd.shuffle(shuffled)
    assert fit_rq(samples) == fit_rq(shuffled)


def test_curve_fit_recovers_known_parameters():
    a, b, c = 9.0, 0.8, 0.5
    grid = [0.25, 0.5, 1.0, 2.0, 3.0, 4.0]
    means = [a * (1 - math.exp(-b * L)) + c for L in grid]
    est = stats_estimate(grid, means, [1.0] * 6, 10)
    est = update_with_pilot(est, [])  # refits the curve on the given means
    fa, fb, fc = est.curve
    assert (fa, fb, fc) == pytest.approx((a, b, c), rel=1e-4)
    closed = a * (1 - math.exp(-b * 8.0)) + c
    assert interpolate(est, 8.0, extrapolate=True) == pytest.approx(closed, rel=1e-5)


# ---------------------------------------------------------------- bands

def test_band_against_table_quantile():
    est = stats_estimate([1.0], [10.0], [4.0], 5)
    band = prediction_interval(est, 1.0, 0.10)
    half = T_95_DOF4 * 2 * math.sqrt(1.2)
    assert band.upper - 10 == pytest.approx(half, abs=2e-4)
    assert band.lower == pytest.approx(10 - half, abs=2e-4)
    assert band.dof == 4
    assert band.quantile == pytest.approx(T_95_DOF4, abs=1e-4)
    raw = prediction_interval(est, 1.0, 0.10, inflate=False)
    assert raw.upper - 10 == pytest.approx(T_95_DOF4 * 2, abs=2e-4)


def test_zero_variance_band_is_degenerate():
    est = stats_estimate([1.0], [7.0], [0.0], 5)
    for alpha in (0.01, 0.5, 0.9):
        b = prediction_interval(est, 1.0, alpha)
        assert b.lower == b.upper == 7.0
    assert lower_quality_bound(est, 1.0, 0.99) == 7.0


def test_normal_limit():
    est = stats_estimate([1.0], [0.0], [1.0], 1e6)
    assert abs(prediction_interval(est, 1.0, 0.10).upper / Z_95 - 1) < 1e-3


def test_insufficient_samples():
    est = stats_estimate([1.0], [1.0], [0.0], 1)
    with pytest.raises(InsufficientSamples):
        prediction_interval(est, 1.0, 0.1)
    with pytest.raises(GridMismatch):
        prediction_interval(stats_estimate([1.0], [1.0], [1.0], 3), 2.0, 0.1)


def test_median_bound_is_mean():
    est = stats_estimate([1.0], [6.0], [3.0], 8)
    assert lower_quality_bound(est, 1.0, 0.5) == pytest.approx(6.0, abs=1e-12)


def test_lower_bound_coverage():
    law = SyntheticRQLaw(q_max=10, beta=1, sigma0=1, gamma=0)
    rng = np.random.default_rng(2)
    trials, N = 20_000, 50
    train = law.sample([1.0], trials * N, rng)[:, 0].reshape(trials, N)
    fresh = law.sample([1.0], trials, rng)[:, 0]
    hits = 0
    for row, q in zip(train, fresh):
        est = stats_estimate([1.0], [row.mean()], [row.var(ddof=1)], N)
        hits += q >= lower_quality_bound(est, 1.0, 0.95)
    assert abs(hits / trials - 0.95) <= 0.02


def _coverage(law, N, trials, seed):
    rng = np.random.default_rng(seed)
    train = law.sample([1.0], trials * N, rng)[:, 0].reshape(trials, N)
    fresh = law.sample([1.0], trials, rng)[:, 0]
    half = t_quantile(0.95, N - 1) * train.std(axis=1, ddof=1) * math.sqrt(1 + 1 / N)
    return float(np.mean(np.abs(fresh - train.mean(axis=1)) <= half))


def test_heavy_tails_hurt_small_samples_more():
    law = SyntheticRQLaw(q_max=10, beta=1, sigma0=1, gamma=0, noise="student-t", df=3)
    small = _coverage(law, 3, 20_000, 3)
    large = _coverage(law, 50, 20_000, 4)
    assert abs(small - 0.9) > abs(large - 0.9)


@given(st.floats(0.01, 0.98), st.floats(0.01, 0.98), st.floats(0, 25), st.integers(2, 200))
def test_band_nesting(a1, a2, var, n):
    lo_a, hi_a = sorted((a1, a2))
    est = stats_estimate([1.0], [3.0], [var], n)
    wide, narrow = prediction_interval(est, 1.0, lo_a), prediction_interval(est, 1.0, hi_a)
    assert wide.lower <= narrow.lower + 1e-12
    assert wide.upper >= narrow.upper - 1e-12
    assert wide.lower <= 3.0 <= wide.upper


# ---------------------------------------------------------------- interpolate

def test_interpolation_rules():
    est = stats_estimate([1.0, 2.0, 4.0], [4.0, 8.0, 9.0], [1.0, 1.0, 1.0], 10)
    assert interpolate(est, 2.0) == 8.0
    assert interpolate(est, 1.5) == 6.0
    assert interpolate(est, 9.0) == 9.0
    assert interpolate(est, 2.0, ("lower", 0.9)) == lower_quality_bound(est, 2.0, 0.9)
    with pytest.raises(BelowGrid):
        interpolate(est, 0.5)


# ---------------------------------------------------------------- pilots

def test_pilot_at_mean_shrinks_variance():
    est = fit_rq([QualitySample(i, 1.0, q) for i, q in enumerate((1.0, 2.0, 3.0))])
    new = update_with_pilot(est, [QualitySample(9, 1.0, 2.0)])
    assert new.means == (2.0,)
    assert new.variances[0] == pytest.approx(2 / 3)
    assert new.counts == (4.0,)


def test_pooled_update_equals_batch_fit():
    grid = [0.5, 1.0, 2.0]
    law = SyntheticRQLaw(gamma=0.3)
    Q = law.sample(grid, 30, np.random.default_rng(5))
    first, second = samples_from(Q[:12], grid), samples_from(Q[12:], grid)
    inc = update_with_pilot(fit_rq(first), second)
    full = fit_rq(first + second)
    assert np.allclose(inc.means, full.means, rtol=1e-12)
    assert np.allclose(inc.variances, full.variances, rtol=1e-10)
    assert inc.counts == full.counts


def test_forgetting_tracks_shift():
    rng = np.random.default_rng(6)
    old = [QualitySample(i, 1.0, 5.0 + rng.standard_normal()) for i in range(20)]
    est = fit_rq(old)
    pilots = [QualitySample(100 + i, 1.0, 8.0 + rng.standard_normal()) for i in range(50)]
    est = update_with_pilot(est, pilots, forgetting=0.9)
    assert abs(est.means[0] - 8.0) < 0.3


def test_pilot_off_grid():
    est = fit_rq([QualitySample(0, 1.0, 1.0), QualitySample(1, 1.0, 2.0)])
    with pytest.raises(GridMismatch):
        update_with_pilot(est, [QualitySample(2, 1.5, 1.0)])


@given(st.lists(st.floats(0, 20), min_size=1, max_size=20), st.floats(0.05, 1.0))
@settings(max_examples=50)
def test_pilot_update_keeps_invariants(values, forgetting):
    est = fit_rq([QualitySample(0, 1.0, 3.0), QualitySample(1, 1.0, 5.0)])
    new = update_with_pilot(est, [QualitySample(i, 1.0, v) for i, v in enumerate(values)], forgetting)
    assert new.variances[0] >= 0
    assert min(values + [3.0]) - 1e-9 <= new.means[0] <= max(values + [5.0]) + 1e-9


def test_json_round_trip():
    grid = [0.5, 1.0, 2.0]
    est = fit_from_matrix(grid, SyntheticRQLaw(gamma=0.3).sample(grid, 6, np.random.default_rng(7)))
    assert RQEstimate.from_json(est.to_json()) == est
