import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from recur2d.gibbs import (MarkovMeasure, PairPotential,
                           asymptotic_covariance_pair,
                           asymptotic_variance_scalar, block_sft,
                           clt_fluctuation_samples, cylinder_measure,
                           fundamental_matrix, gibbs_from_potential,
                           min_log_cylinder, potential_from_table,
                           sample_windows_batch)
from recur2d.sft import SftSpec, Window, enumerate_windows
from recur2d.systems import build_golden_mean, build_lazy5, build_markov5

PHI = (1.0 + math.sqrt(5.0)) / 2.0


@pytest.fixture(scope="module")
def golden():
    return build_golden_mean().measure


@pytest.fixture(scope="module")
def markov5():
    return build_markov5().measure


def test_parry_measure_golden_mean(golden):
    """Maximal-entropy data for the golden-mean shift in closed form.

    The transition matrix [[1,1],[1,0]] has Perron value the golden ratio
    phi, symmetric eigenvectors (phi, 1), stationary vector
    (phi^2, 1)/(phi^2 + 1), stochastic rows (1/phi, 1/phi^2) and (1, 0),
    and entropy log phi.
    """
    assert golden.perron_value == pytest.approx(PHI, abs=1e-13)
    assert_allclose(golden.stationary,
                    [PHI**2 / (PHI**2 + 1), 1 / (PHI**2 + 1)], atol=1e-13)
    assert_allclose(golden.stochastic,
                    [[1 / PHI, 1 / PHI**2], [1.0, 0.0]], atol=1e-13)
    assert golden.entropy == pytest.approx(math.log(PHI), abs=1e-13)
    assert golden.dimension == pytest.approx(2 * math.log(PHI), abs=1e-13)


def test_uniform_measure_on_full_shift():
    m = build_lazy5().measure
    assert_allclose(m.stationary, np.full(5, 0.2), atol=1e-14)
    assert_allclose(m.stochastic, np.full((5, 5), 0.2), atol=1e-14)
    assert m.entropy == pytest.approx(math.log(5), abs=1e-13)


def test_measure_validates_row_sums(golden):
    bad = golden.stochastic.copy()
    bad[0, 0] += 1e-6
    with pytest.raises(ValueError):
        MarkovMeasure(golden.sft, bad, golden.stationary,
                      golden.perron_value, golden.right_vec, golden.left_vec)


def test_measure_validates_support(golden):
    bad = np.array([[0.5, 0.5], [0.5, 0.5]])
    stat = np.array([0.5, 0.5])
    with pytest.raises(ValueError):
        MarkovMeasure(golden.sft, bad, stat, golden.perron_value,
                      golden.right_vec, golden.left_vec)


def test_gibbs_constant_potential_reduces_to_max_entropy(golden):
    h = PairPotential.from_pairs(golden.sft, {})
    m = gibbs_from_potential(golden.sft, h.shifted(0.7))
    assert_allclose(m.stochastic, golden.stochastic, atol=1e-12)
    assert_allclose(m.stationary, golden.stationary, atol=1e-12)


def test_cylinder_measure_total_mass(golden):
    for length in (1, 3, 5):
        total = sum(cylinder_measure(golden, Window(golden.sft, w)).prob
                    for w in enumerate_windows(golden.sft, length))
        assert total == pytest.approx(1.0, abs=1e-12)


def test_cylinder_measure_matches_chain_product(golden):
    w = Window(golden.sft, ("0", "1", "0", "0", "1"))
    p, pi = golden.stationary, golden.stochastic
    want = p[0] * pi[0, 1] * pi[1, 0] * pi[0, 0] * pi[0, 1]
    got = cylinder_measure(golden, w)
    assert got.prob == pytest.approx(want, rel=1e-13)
    assert got.log_prob == pytest.approx(math.log(want), abs=1e-12)


def test_cylinder_measure_one_sided_even_length(golden):
    # even lengths are only reachable through one-sided words
    w = Window(golden.sft, ("0", "1"), one_sided=True)
    want = golden.stationary[0] * golden.stochastic[0, 1]
    assert cylinder_measure(golden, w).prob == pytest.approx(want, rel=1e-13)


def test_min_log_cylinder_by_enumeration(golden):
    """The min-plus recursion must skip forbidden transitions.

    Regression check: log pi carries -inf on the forbidden pair, which
    must never propagate into the minimum.
    """
    for k in (1, 2, 3):
        want = min(cylinder_measure(golden, Window(golden.sft, w)).log_prob
                   for w in enumerate_windows(golden.sft, 2 * k + 1))
        got = min_log_cylinder(golden, k)
        assert math.isfinite(got)
        assert got == pytest.approx(want, abs=1e-12)


def test_min_log_cylinder_uniform():
    m = build_lazy5().measure
    assert min_log_cylinder(m, 2) == pytest.approx(5 * math.log(0.2), abs=1e-12)


def test_reversed_stochastic_is_stochastic(markov5):
    rev = markov5.reversed_stochastic
    assert_allclose(rev.sum(axis=1), np.ones(5), atol=1e-12)
    # detailed-balance style identity: p_a pi[a,b] = p_b rev[b,a]
    p = markov5.stationary
    assert_allclose(p[:, None] * markov5.stochastic,
                    (p[:, None] * rev).T, atol=1e-13)


def test_fundamental_matrix_inverts(markov5):
    z = fundamental_matrix(markov5)
    n = markov5.sft.n_symbols
    a = (np.eye(n) - markov5.stochastic
         + np.outer(np.ones(n), markov5.stationary))
    assert_allclose(z @ a, np.eye(n), atol=1e-12)


def test_asymptotic_variance_matches_truncated_series(markov5):
    """Green-Kubo closed form against the lag sum computed by matrix powers.

    sigma^2 = Var(f) + 2 sum_{m>=1} Cov(f_0, f_m) for the stationary pair
    chain; the subleading spectral radius is well below 1, so truncating at
    lag 300 leaves an error far under the comparison tolerance.
    """
    rng = np.random.default_rng(5)
    f = rng.normal(size=(5, 5))
    mask = markov5.sft.transition.astype(bool)
    p, pi = markov5.stationary, markov5.stochastic
    edge = p[:, None] * pi
    fmean = float((edge * f).sum())
    fbar = np.where(mask, f - fmean, 0.0)
    var = float((edge * fbar**2).sum())
    # Cov(f(X_0,X_1), f(X_m,X_m+1)) = alpha P^(m-1) gamma in matrix form
    alpha = (edge * fbar).sum(axis=0)
    gamma = (pi * fbar).sum(axis=1)
    acc = var
    step = np.eye(5)
    for _ in range(300):
        acc += 2.0 * float(alpha @ step @ gamma)
        step = step @ pi
    got = asymptotic_variance_scalar(markov5, f)
    assert got == pytest.approx(acc, abs=1e-10)


def test_asymptotic_covariance_symmetric(markov5):
    rng = np.random.default_rng(6)
    f = rng.normal(size=(5, 5))
    g = rng.normal(size=(5, 5))
    assert (asymptotic_covariance_pair(markov5, f, g)
            == pytest.approx(asymptotic_covariance_pair(markov5, g, f),
                             abs=1e-12))


def test_asymptotic_variance_of_constant_is_zero(markov5):
    assert asymptotic_variance_scalar(markov5, np.full(5, 3.7)) == pytest.approx(
        0.0, abs=1e-15)


def test_asymptotic_variance_accepts_symbol_vector(markov5):
    v = np.array([1.0, -1.0, 2.0, 0.0, -2.0])
    table = np.repeat(v[:, None], 5, axis=1)
    assert (asymptotic_variance_scalar(markov5, v)
            == pytest.approx(asymptotic_variance_scalar(markov5, table),
                             abs=1e-13))


def test_sample_windows_batch_deterministic(golden):
    a = sample_windows_batch(golden, 2, 64, seed=9)
    b = sample_windows_batch(golden, 2, 64, seed=9)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_windows_batch(golden, 2, 64, seed=10))


def test_sample_windows_batch_frequencies(golden):
    """Window frequencies agree with cylinder masses at radius 1."""
    n = 40000
    batch = sample_windows_batch(golden, 1, n, seed=12)
    words = {}
    for row in batch:
        key = tuple(golden.sft.symbols[i] for i in row)
        words[key] = words.get(key, 0) + 1
    for word, count in words.items():
        want = cylinder_measure(golden, Window(golden.sft, word)).prob
        se = math.sqrt(want * (1 - want) / n)
        assert abs(count / n - want) < 5 * se


def test_clt_samples_deterministic_and_centered(markov5):
    a = clt_fluctuation_samples(markov5, 100, 2000, seed=3,
                                boundary_corrected=True)
    b = clt_fluctuation_samples(markov5, 100, 2000, seed=3,
                                boundary_corrected=True)
    assert np.array_equal(a, b)
    sigma_h2 = asymptotic_variance_scalar(
        markov5, np.where(markov5.sft.transition.astype(bool),
                          markov5.log_stochastic, 0.0))
    se = math.sqrt(2.0 * sigma_h2 / 2000)
    assert abs(float(a.mean())) < 5 * se
    assert float(a.var()) == pytest.approx(2.0 * sigma_h2, rel=0.15)


def test_clt_boundary_correction_is_constant_shift(markov5):
    raw = clt_fluctuation_samples(markov5, 64, 500, seed=4)
    fix = clt_fluctuation_samples(markov5, 64, 500, seed=4,
                                  boundary_corrected=True)
    p = markov5.stationary
    shift = float(np.sum(p * np.log(p))) / math.sqrt(64)
    assert_allclose(fix, raw - shift, atol=1e-12)


def test_block_sft_golden_mean(golden):
    blocked, words = block_sft(golden.sft, 2)
    assert len(words) == 3  # 00, 01, 10
    assert blocked.n_symbols == 3
    # blocked transitions must glue on the overlap
    for i, a in enumerate(words):
        for j, b in enumerate(words):
            allowed = a[1:] == b[:-1] and bool(blocked.transition[i, j])
            forbidden = a[1:] != b[:-1] and not blocked.transition[i, j]
            assert allowed or forbidden


def test_potential_from_table_pair_case(golden):
    sft, h = potential_from_table(golden.sft, 2, {("0", "0"): 0.5,
                                                  ("0", "1"): -0.25})
    assert sft is golden.sft
    assert h.values[0, 0] == 0.5
    assert h.values[0, 1] == -0.25
    m = gibbs_from_potential(sft, h)
    assert_allclose(m.stochastic.sum(axis=1), [1.0, 1.0], atol=1e-12)


def test_potential_from_table_recodes_wider_support(golden):
    sft3, h3 = potential_from_table(golden.sft, 3, {("0", "1", "0"): 1.5})
    assert sft3.n_symbols == 3
    i = sft3.index("01")
    j = sft3.index("10")
    assert h3.values[i, j] == 1.5
    # recoded equilibrium state still satisfies the chain invariants
    m = gibbs_from_potential(sft3, h3)
    assert_allclose(m.stationary @ m.stochastic, m.stationary, atol=1e-12)
