import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from recur2d.errors import DegenerateDesign, EmptySample
from recur2d.stats import (Ecdf, ReferenceCdf, binomial_stderr, from_batch,
                           ks_distance, ks_two_sample, slope_regression)


def test_ecdf_basic_evaluation():
    e = Ecdf(np.array([3.0, 1.0, 2.0]))
    assert e.n_total == 3
    assert e.valid_upto == math.inf
    assert e.evaluate(0.5) == 0.0
    assert e.evaluate(1.0) == pytest.approx(1 / 3)
    assert e.evaluate(2.5) == pytest.approx(2 / 3)
    assert e.evaluate(100.0) == 1.0


def test_ecdf_censored_region():
    e = Ecdf(np.array([1.0, 2.0]), np.array([5.0, 4.0]))
    assert e.n_total == 4
    assert e.valid_upto == 4.0
    # censored records inflate the denominator but never the count
    assert e.evaluate(3.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        e.evaluate(4.5)
    with pytest.raises(ValueError):
        e.evaluate_many([1.0, 6.0])
    assert_allclose(e.evaluate_many([0.5, 1.5, 4.0]), [0.0, 0.25, 0.5])


def test_ecdf_empty_rejected():
    with pytest.raises(EmptySample):
        Ecdf(np.empty(0))


def test_ecdf_censored_matches_plain_when_uncensored():
    values = np.array([4.0, 1.0, 3.0, 2.0])
    plain = Ecdf(values)
    boxed = from_batch(values, np.zeros(4, dtype=bool), 100.0)
    ts = np.linspace(0.0, 5.0, 21)
    assert_allclose(plain.evaluate_many(ts), boxed.evaluate_many(ts))


def test_from_batch_with_transform():
    values = np.array([10.0, 0.0, 100.0])
    censored = np.array([False, True, False])
    e = from_batch(values, censored, 1000.0, transform=np.log)
    assert e.n_total == 3
    assert e.valid_upto == pytest.approx(math.log(1000.0))
    assert_allclose(e.values, [math.log(10.0), math.log(100.0)])


def test_reference_cdfs_shapes():
    grid = np.linspace(-1.0, 20.0, 200)
    for ref in (ReferenceCdf.exponential1(),
                ReferenceCdf.recurrence_law(0.4),
                ReferenceCdf.toy_law(),
                ReferenceCdf.mixture([0.5, 0.5], [1.0, 3.0])):
        vals = ref.cdf(grid)
        assert vals[0] == 0.0
        assert np.all(np.diff(vals) >= 0.0)
        assert float(ref.cdf(0.0)) == 0.0
        assert float(ref.cdf(1e12)) == pytest.approx(1.0, abs=1e-9)
    normal = ReferenceCdf.normal(4.0)
    assert normal.cdf(0.0) == pytest.approx(0.5)
    assert normal.cdf(2.0) == pytest.approx(0.8413447460685429, abs=1e-12)


def test_reference_validation():
    with pytest.raises(ValueError):
        ReferenceCdf.recurrence_law(0.0)
    with pytest.raises(ValueError):
        ReferenceCdf.normal(0.0)
    with pytest.raises(ValueError):
        ReferenceCdf.mixture([0.7, 0.7], [1.0, 2.0])
    with pytest.raises(ValueError):
        ReferenceCdf.mixture([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        ReferenceCdf("bogus", {}).cdf(1.0)


def test_toy_law_median_at_pi():
    assert ReferenceCdf.toy_law().cdf(math.pi) == pytest.approx(0.5, abs=1e-14)


def test_ks_single_sample_at_median():
    e = Ecdf(np.array([math.log(2.0) / 1.0]))  # exp(1) median is log 2
    res = ks_distance(e, ReferenceCdf.exponential1())
    assert res.statistic == pytest.approx(0.5, abs=1e-12)
    assert res.coverage == 1.0


def test_ks_seeded_exponential_sample():
    gen = np.random.default_rng(2718)
    e = Ecdf(gen.exponential(size=10_000))
    res = ks_distance(e, ReferenceCdf.exponential1())
    # 99.99th percentile of the n=1e4 null KS statistic is about 0.0197
    assert res.statistic < 0.0197
    assert res.valid_upto == math.inf


def test_ks_censoring_restricts_sup():
    gen = np.random.default_rng(11)
    raw = gen.exponential(size=5000)
    censored = raw > 1.5
    e = from_batch(raw, censored, 1.5)
    res = ks_distance(e, ReferenceCdf.exponential1())
    assert res.valid_upto == 1.5
    assert res.coverage == pytest.approx(1.0 - math.exp(-1.5), abs=1e-12)
    assert res.statistic < 0.03


def test_ks_fully_censored_raises():
    e = Ecdf(np.empty(0), np.array([1.0, 1.0]))
    with pytest.raises(EmptySample):
        ks_distance(e, ReferenceCdf.exponential1())


def test_ks_two_sample_identical_is_zero():
    values = np.array([1.0, 2.0, 5.0])
    res = ks_two_sample(Ecdf(values), Ecdf(values.copy()))
    assert res.statistic == 0.0
    assert res.coverage == 1.0


def test_ks_two_sample_disjoint():
    res = ks_two_sample(Ecdf(np.array([1.0, 2.0])),
                        Ecdf(np.array([10.0, 20.0])))
    assert res.statistic == 1.0


def test_slope_regression_exact_line():
    xs = np.array([1.0, 2.0, 3.0, 4.0])
    fit = slope_regression(xs, 2.0 * xs - 3.0)
    assert fit.slope == pytest.approx(2.0, abs=1e-12)
    assert fit.intercept == pytest.approx(-3.0, abs=1e-12)
    assert fit.stderr == pytest.approx(0.0, abs=1e-12)


def test_slope_regression_degenerate():
    with pytest.raises(DegenerateDesign):
        slope_regression([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(DegenerateDesign):
        slope_regression([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(DegenerateDesign):
        slope_regression([1.0, 2.0, 3.0], [1.0, 2.0])


def test_binomial_stderr():
    assert binomial_stderr(0.5, 100) == pytest.approx(0.05)
    assert binomial_stderr(0.0, 10) == 0.0
    assert binomial_stderr(1.0, 10) == 0.0


@given(st.lists(st.floats(min_value=-50, max_value=50), min_size=1,
                max_size=40))
@settings(deadline=None, max_examples=60)
def test_ecdf_monotone_property(values):
    e = Ecdf(np.array(values))
    grid = np.linspace(min(values) - 1, max(values) + 1, 13)
    out = e.evaluate_many(grid)
    assert np.all(np.diff(out) >= 0.0)
    assert out[0] == 0.0
    assert out[-1] == 1.0


@given(st.integers(min_value=1, max_value=200),
       st.integers(min_value=0, max_value=200))
@settings(deadline=None, max_examples=40)
def test_ecdf_counts_property(n_vals, n_cens):
    gen = np.random.default_rng(n_vals * 1000 + n_cens)
    e = Ecdf(gen.uniform(0, 1, n_vals), np.full(n_cens, 2.0))
    assert e.n_total == n_vals + n_cens
    # at the censor threshold every uncensored value is counted
    assert e.evaluate(2.0) == pytest.approx(n_vals / (n_vals + n_cens))
