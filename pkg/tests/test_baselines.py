"""Classical imputation baselines: examples, oracles, shared invariants."""

import math

import numpy as np
import pytest

from surfimpute import (
    CoverageError,
    EmptyDatasetError,
    PartialFillError,
    Profile,
    impute_constant,
    impute_idw,
    impute_median_filter,
    impute_nn_mean,
    make_grid,
)


def profile_of(z, valid, dx=1.0):
    z = np.asarray(z, dtype=float)
    return Profile(make_grid(0.0, dx, len(z)), z,
                   np.asarray(valid, dtype=bool))


def gapped(values_valid, gap_at, gap_len, dx=1.0):
    # valid heights with one contiguous missing run spliced in
    z = list(values_valid[:gap_at]) + [math.nan] * gap_len + list(values_valid[gap_at:])
    valid = [True] * gap_at + [False] * gap_len + [True] * (len(values_valid) - gap_at)
    return profile_of(z, valid, dx)


# ---------------------------------------------------------------------------
# constant fill


def test_constant_mean_example():
    p = profile_of([1.0, math.nan, 3.0], [1, 0, 1])
    out = impute_constant(p, "mean")
    assert out.z[1] == 2.0


def test_constant_median_example():
    p = profile_of([1.0, 2.0, math.nan, 100.0], [1, 1, 0, 1])
    out = impute_constant(p, "median")
    assert out.z[2] == 2.0


def test_constant_identity_on_complete_profile():
    p = profile_of([1.0, 2.0, 3.0], [1, 1, 1])
    out = impute_constant(p, "mean")
    assert np.array_equal(out.z, p.z)
    assert np.all(out.valid)


def test_constant_fill_equals_valid_mean_exactly():
    rng = np.random.default_rng(3)
    z = rng.standard_normal(40)
    valid = rng.random(40) > 0.3
    valid[:2] = True
    p = profile_of(z, valid)
    out = impute_constant(p, "mean")
    want = float(np.mean(z[valid]))
    assert np.all(out.z[~valid] == want)


def test_constant_rejects_unknown_statistic():
    p = profile_of([1.0, math.nan], [1, 0])
    with pytest.raises(ValueError):
        impute_constant(p, "mode")


# ---------------------------------------------------------------------------
# nearest-neighbor mean


def test_nn_single_point_between_neighbors():
    p = profile_of([2.0, math.nan, 4.0], [1, 0, 1])
    out = impute_nn_mean(p)
    assert out.z[1] == 3.0


def test_nn_gap_becomes_plateau():
    p = gapped([1.0, 3.0], gap_at=1, gap_len=5)
    out = impute_nn_mean(p)
    assert np.all(out.z[1:6] == 2.0)


def test_nn_one_sided_prefix():
    p = profile_of([math.nan, math.nan, 7.0, 9.0], [0, 0, 1, 1])
    out = impute_nn_mean(p)
    assert out.z[0] == 7.0 and out.z[1] == 7.0


def test_nn_one_sided_suffix():
    p = profile_of([7.0, 9.0, math.nan], [1, 1, 0])
    out = impute_nn_mean(p)
    assert out.z[2] == 9.0


# ---------------------------------------------------------------------------
# iterative median filter


def test_medfilt_single_point_even_count_median():
    p = profile_of([1.0, math.nan, 5.0], [1, 0, 1])
    out = impute_median_filter(p, window=3)
    assert out.z[1] == 3.0


def test_medfilt_run_between_equal_plateaus():
    p = gapped([0.0, 0.0, 0.0, 0.0], gap_at=2, gap_len=3)
    out = impute_median_filter(p, window=3)
    assert np.all(out.z == 0.0)


def test_medfilt_matches_step_by_step_simulation():
    # reference simulation of the pass semantics: all fills of one pass
    # are computed from the state at the start of the pass
    rng = np.random.default_rng(11)
    z = rng.standard_normal(30)
    valid = np.ones(30, dtype=bool)
    valid[4:9] = False
    valid[15] = False
    valid[20:28] = False
    window, half = 5, 2
    zz = z.copy()
    known = valid.copy()
    while not np.all(known):
        new_vals = {}
        for i in np.flatnonzero(~known):
            lo, hi = max(0, i - half), min(30, i + half + 1)
            vals = zz[lo:hi][known[lo:hi]]
            if len(vals):
                new_vals[i] = float(np.median(vals))
        for i, val in new_vals.items():
            zz[i] = val
            known[i] = True
    p = profile_of(np.where(valid, z, math.nan), valid)
    out = impute_median_filter(p, window=window)
    assert np.array_equal(out.z, np.where(valid, z, zz))


def test_medfilt_pass_count_on_hand_case():
    # run of 5 with window 3 needs ceil(5 / (3 - 1)) = 3 passes:
    # edges, next layer, then the center point
    p = gapped([1.0, 3.0], gap_at=1, gap_len=5)
    out = impute_median_filter(p, window=3, max_passes=3)
    assert np.all(out.valid)
    with pytest.raises(PartialFillError) as err:
        impute_median_filter(p, window=3, max_passes=2)
    assert list(err.value.remaining) == [3]


def test_medfilt_parameter_validation():
    p = profile_of([1.0, math.nan, 2.0], [1, 0, 1])
    for bad_window in (2, 4, 1, -3):
        with pytest.raises(ValueError):
            impute_median_filter(p, window=bad_window)
    with pytest.raises(ValueError):
        impute_median_filter(p, window=3, max_passes=0)


# ---------------------------------------------------------------------------
# inverse-distance weighting


def test_idw_symmetric_neighbors_for_any_power():
    p = profile_of([2.0, math.nan, 4.0], [1, 0, 1])
    for power in (1.0, 2.0, 3.5):
        out = impute_idw(p, power=power)
        assert abs(out.z[1] - 3.0) < 1e-12


def test_idw_forced_arithmetic():
    # distances 1 and 2, values 0 and 3, power 1: (0*1 + 3*0.5)/1.5 = 1
    p = profile_of([0.0, math.nan, math.nan, 3.0], [1, 0, 0, 1])
    out = impute_idw(p, power=1.0)
    assert abs(out.z[1] - 1.0) < 1e-12


def test_idw_matches_brute_force():
    rng = np.random.default_rng(17)
    z = rng.standard_normal(40)
    valid = rng.random(40) > 0.25
    valid[0] = valid[-1] = True
    p = profile_of(np.where(valid, z, math.nan), valid, dx=0.1)
    radius, power = 0.7, 2.0
    out = impute_idw(p, power=power, radius=radius)
    x = p.x
    for i in np.flatnonzero(~valid):
        d = np.abs(x[valid] - x[i])
        keep = d <= radius
        w = d[keep] ** (-power)
        want = np.sum(w * z[valid][keep]) / np.sum(w)
        assert abs(out.z[i] - want) < 1e-12


def test_idw_coverage_error_and_default_radius():
    # nearest valid point is 11 steps away: outside the default 10 dx
    n = 23
    valid = np.zeros(n, dtype=bool)
    valid[0] = valid[-1] = True
    z = np.where(valid, 1.0, math.nan)
    p = profile_of(z, valid)
    with pytest.raises(CoverageError):
        impute_idw(p)
    out = impute_idw(p, radius=11.0)
    assert np.all(out.valid)


def test_idw_parameter_validation():
    p = profile_of([1.0, math.nan, 2.0], [1, 0, 1])
    with pytest.raises(ValueError):
        impute_idw(p, power=0.0)
    with pytest.raises(ValueError):
        impute_idw(p, radius=-1.0)


# ---------------------------------------------------------------------------
# shared invariants


ALL_METHODS = [
    lambda p: impute_constant(p, "mean"),
    lambda p: impute_constant(p, "median"),
    impute_nn_mean,
    impute_median_filter,
    impute_idw,
]


def test_all_methods_preserve_valid_bitwise_and_complete():
    rng = np.random.default_rng(29)
    for trial in range(5):
        z = rng.standard_normal(60)
        valid = rng.random(60) > 0.2
        valid[0] = valid[-1] = True
        p = profile_of(np.where(valid, z, math.nan), valid)
        zv = z[valid]
        lo, hi = float(np.min(zv)), float(np.max(zv))
        for method in ALL_METHODS:
            out = method(p)
            assert np.all(out.valid)
            assert np.array_equal(out.z[valid], z[valid])
            assert np.all(out.z[~valid] >= lo - 1e-12)
            assert np.all(out.z[~valid] <= hi + 1e-12)


def test_all_methods_identity_on_complete_profile():
    p = profile_of([0.5, -1.0, 2.0], [1, 1, 1])
    for method in ALL_METHODS:
        out = method(p)
        assert np.array_equal(out.z, p.z)


def test_all_methods_reject_empty_dataset():
    p = profile_of([math.nan, math.nan], [0, 0])
    for method in ALL_METHODS:
        with pytest.raises(EmptyDatasetError):
            method(p)
