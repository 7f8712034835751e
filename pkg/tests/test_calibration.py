import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecft import (
    ArgumentError,
    Direction,
    DivisorConvention,
    RegionCache,
    RegionKind,
    RejectionRegion,
    Seed,
    TestId,
    UnsupportedSampleSizeError,
    asymptotic_variance,
    calibrate,
    calibrate_many,
    ci_comparison,
    mc_p_value,
    null_variance_curve,
    percentiles,
    run_test,
    simulate_null,
    simulate_null_many,
)
from ecft.calibration import percentile_grid_rows

SEED = Seed(505)


@pytest.fixture(scope="module")
def ecft_null_30():
    return simulate_null(TestId.ECFT, 30, 20_000, SEED)


# -- simulate_null ------------------------------------------------------------


def test_simulate_null_is_deterministic(ecft_null_30):
    again = simulate_null(TestId.ECFT, 30, 20_000, SEED)
    assert np.array_equal(ecft_null_30.values, again.values)


def test_simulate_null_worker_count_does_not_change_values(ecft_null_30):
    parallel = simulate_null(TestId.ECFT, 30, 20_000, SEED, workers=3)
    assert np.array_equal(ecft_null_30.values, parallel.values)


def test_simulate_null_shares_draws_across_tests():
    sets = simulate_null_many([TestId.JB, TestId.SW], 25, 2_000, SEED)
    solo = simulate_null(TestId.JB, 25, 2_000, SEED)
    assert np.array_equal(sets[TestId.JB].values, solo.values)


def test_simulate_null_small_sample_skewed_right(ecft_null_30):
    q025, q50, q975 = percentiles(ecft_null_30, [0.025, 0.5, 0.975])
    assert (q975 - q50) > (q50 - q025)


def test_simulate_null_near_symmetric_in_large_samples():
    small = simulate_null(TestId.ECFT, 30, 10_000, SEED)
    large = simulate_null(TestId.ECFT, 1000, 10_000, SEED)

    def skewness(values):
        d = values - values.mean()
        return float((d ** 3).mean() / (d ** 2).mean() ** 1.5)

    # right-skewed at n = 30, close to symmetric (but measurably not
    # exactly symmetric) at n = 1000
    assert skewness(small.values) > 0.5
    assert abs(skewness(large.values)) < 0.3
    assert abs(skewness(large.values)) < skewness(small.values) / 3


def test_simulate_null_validates_inputs():
    with pytest.raises(ArgumentError):
        simulate_null(TestId.ECFT, 30, 500, SEED)
    with pytest.raises(UnsupportedSampleSizeError):
        simulate_null(TestId.SW, 6000, 2_000, SEED)
    with pytest.raises(UnsupportedSampleSizeError):
        simulate_null(TestId.DP, 7, 2_000, SEED)


# -- percentiles ----------------------------------------------------------------


def test_percentiles_median_of_symmetric_triplet():
    assert percentiles([-1.0, 0.0, 1.0], [0.5]) == [0.0]


def test_percentiles_interpolation_rule():
    # h = p (m+1); for m = 4 and p = 0.5, h = 2.5 -> halfway between x(2), x(3)
    assert percentiles([10.0, 20.0, 30.0, 40.0], [0.5]) == [25.0]
    # h <= 1 and h >= m clamp to the extremes
    assert percentiles([10.0, 20.0, 30.0, 40.0], [0.01, 0.99]) == [10.0, 40.0]


@settings(max_examples=50)
@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=200),
       st.floats(0.001, 0.999))
def test_percentiles_match_weibull_rule(values, p):
    expected = float(np.quantile(np.asarray(values), p, method="weibull"))
    assert math.isclose(percentiles(values, [p])[0], expected, rel_tol=1e-12, abs_tol=1e-9)


@settings(max_examples=30)
@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=50))
def test_percentiles_monotone_in_p(values):
    q = percentiles(values, [0.1, 0.5, 0.9])
    assert q[0] <= q[1] <= q[2]


def test_percentiles_rejects_bad_probs():
    with pytest.raises(ArgumentError):
        percentiles([1.0, 2.0], [0.0])
    with pytest.raises(ArgumentError):
        percentiles([1.0, 2.0], [1.0])


# -- calibrate --------------------------------------------------------------------


def test_calibrate_two_sided_region_straddles_zero():
    region = calibrate(TestId.ECFT, 20, 0.05, 10_000, SEED)
    assert region.kind is RegionKind.TWO_SIDED
    assert region.lower < 0.0 < region.upper
    assert region.convention is DivisorConvention.UNBIASED


def test_calibrate_size_check_recorded_within_band():
    region = calibrate(TestId.JB, 100, 0.05, 10_000, SEED)
    assert region.kind is RegionKind.UPPER_TAIL
    band = 3.0 * math.sqrt(0.05 * 0.95 / 10_000)
    assert abs(region.size_check_rate - 0.05) <= band


def test_calibrate_lower_tail_for_sw():
    region = calibrate(TestId.SW, 50, 0.05, 10_000, SEED)
    assert region.kind is RegionKind.LOWER_TAIL
    assert region.lower is not None and region.upper is None
    assert region.rejects(region.lower - 1e-4)
    assert not region.rejects(region.lower + 1e-4)


def test_calibrate_is_pure():
    a = calibrate(TestId.ECFT, 15, 0.05, 10_000, SEED)
    b = calibrate(TestId.ECFT, 15, 0.05, 10_000, SEED)
    assert a == b


def test_calibrate_validates_arguments():
    with pytest.raises(ArgumentError):
        calibrate(TestId.ECFT, 15, 0.6, 10_000, SEED)
    with pytest.raises(ArgumentError):
        calibrate(TestId.ECFT, 15, 0.05, 5_000, SEED)


def test_calibrate_many_matches_single():
    both = calibrate_many([TestId.ECFT, TestId.JB], 15, 0.05, 10_000, SEED)
    solo = calibrate(TestId.ECFT, 15, 0.05, 10_000, SEED)
    assert both[TestId.ECFT] == solo


# -- curves ------------------------------------------------------------------------


def test_null_variance_curve_decreasing_and_tracks_asymptote():
    curve = null_variance_curve([100, 400, 1600], 2_000, SEED)
    mc = [row[1] for row in curve]
    assert mc[0] > mc[1] > mc[2]
    for n, mc_var, asym in curve:
        assert asym == asymptotic_variance(n)
    # at n = 1600 the asymptotic law is a good description
    assert abs(curve[-1][1] / curve[-1][2] - 1.0) < 0.2


def test_ci_comparison_shrinks_and_matches_at_large_n():
    rows = ci_comparison([50, 200, 1000], 5_000, 0.95, SEED)
    widths = [r["sim_upper"] - r["sim_lower"] for r in rows]
    assert widths[0] > widths[1] > widths[2]
    for r in rows:
        assert r["approx_lower"] == -r["approx_upper"]
        assert math.isclose(r["approx_upper"],
                            1.959963984540054 * math.sqrt(asymptotic_variance(r["n"])),
                            rel_tol=1e-12)


def test_ci_comparison_validates_level():
    with pytest.raises(ArgumentError):
        ci_comparison([50], 2_000, 1.5, SEED)


# -- cache ---------------------------------------------------------------------------


def test_cache_round_trip_is_bit_identical(tmp_path):
    path = tmp_path / "regions.json"
    cache = RegionCache(path)
    region = cache.get_or_calibrate(TestId.ECFT, 15, 0.05, 10_000, SEED)

    reloaded = RegionCache(path)
    hit = reloaded.get(TestId.ECFT, 15, 0.05, 10_000, SEED, DivisorConvention.UNBIASED)
    assert hit == region

    recomputed = calibrate(TestId.ECFT, 15, 0.05, 10_000, SEED)
    assert hit == recomputed  # bounds identical bit for bit


def test_cache_file_schema(tmp_path):
    path = tmp_path / "regions.json"
    cache = RegionCache(path)
    cache.get_or_calibrate(TestId.SW, 20, 0.05, 10_000, SEED)
    payload = json.loads(path.read_text())
    record = payload["records"][0]
    for field in ("test", "n", "alpha", "kind", "bounds", "m", "seed",
                  "convention", "toolkit_version"):
        assert field in record
    assert record["test"] == "sw"
    assert record["bounds"]["upper"] is None


def test_cache_null_value_sidecar(tmp_path):
    cache = RegionCache(tmp_path / "regions.json")
    nullset = simulate_null(TestId.ECFT, 12, 2_000, SEED)
    cache.save_null_values(nullset)
    loaded = cache.load_null_values(TestId.ECFT, 12, 2_000, SEED,
                                    DivisorConvention.UNBIASED)
    assert np.array_equal(loaded, nullset.values)
    assert cache.load_null_values(TestId.ECFT, 13, 2_000, SEED,
                                  DivisorConvention.UNBIASED) is None


def test_cache_distinguishes_conventions(tmp_path):
    cache = RegionCache(tmp_path / "regions.json")
    region = cache.get_or_calibrate(TestId.ECFT, 15, 0.05, 10_000, SEED,
                                    DivisorConvention.ML)
    assert cache.get(TestId.ECFT, 15, 0.05, 10_000, SEED,
                     DivisorConvention.UNBIASED) is None
    assert region.convention is DivisorConvention.ML


# -- applying regions to data ----------------------------------------------------------


def test_mc_p_value_corrections():
    nulls = np.arange(1, 100, dtype=float)  # 99 null values
    # upper tail: value above all nulls -> (0 + 1) / 100
    assert mc_p_value(nulls, 1000.0, Direction.UPPER) == 0.01
    assert mc_p_value(nulls, -1000.0, Direction.LOWER) == 0.01
    # two-sided at the exact median: both tails large -> p capped at 1
    assert mc_p_value(nulls, 50.0, Direction.TWO_SIDED) == 1.0
    # never zero
    assert mc_p_value(nulls, 10_000.0, Direction.TWO_SIDED) > 0.0


def test_run_test_decision_and_p_value():
    region = calibrate(TestId.ECFT, 100, 0.05, 10_000, SEED)
    nulls = simulate_null(TestId.ECFT, 100, 10_000, SEED).values

    normal = Seed(7171).generator().standard_normal(100)
    ok = run_test(normal, region, nulls)
    assert not ok.reject
    assert ok.p_value > 0.05

    uniform = Seed(7171).generator().random(100)
    bad = run_test(uniform, region, nulls)
    assert bad.reject
    assert bad.p_value < 0.05
    assert bad.region == region


def test_region_json_round_trip():
    region = calibrate(TestId.DP, 40, 0.05, 10_000, SEED)
    assert RejectionRegion.from_json(region.to_json()) == region


def test_percentile_grid_rows_format():
    region = calibrate(TestId.ECFT, 15, 0.05, 10_000, SEED)
    row = percentile_grid_rows([region])[0]
    assert row["n"] == 15
    assert float(row["p025"]) == region.lower
    assert float(row["p975"]) == region.upper
    assert row["m"] == 10_000
