import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from recur2d.errors import NonzeroDrift
from recur2d.spectral import (LatticeObservable, covariance_matrix,
                              hessian_check, mean_drift,
                              nonarithmeticity_scan, observable_from_table,
                              quadratic_decay_fit, scan_grid_table,
                              spectral_report, subleading_radius,
                              twisted_eigenvalue)
from recur2d.systems import (build_golden_mean, build_lazy5, build_markov5,
                             build_srw4)

PHI = (1.0 + math.sqrt(5.0)) / 2.0


@pytest.fixture(scope="module")
def lazy5():
    return build_lazy5()


@pytest.fixture(scope="module")
def srw4():
    return build_srw4()


def test_twisted_eigenvalue_lazy5_closed_form(lazy5):
    """The twisted matrix of a symbol-function observable over the uniform
    5-shift has identical columns, so its only nonzero eigenvalue is the
    trace (1 + 2 cos u1 + 2 cos u2) / 5.
    """
    m, phi = lazy5.measure, lazy5.observable
    for u in [(0.3, 0.7), (1.2, -0.4), (math.pi, math.pi), (2.0, 2.9)]:
        want = (1.0 + 2.0 * math.cos(u[0]) + 2.0 * math.cos(u[1])) / 5.0
        got = twisted_eigenvalue(m, phi, u)
        assert abs(got - want) < 1e-12


def test_twisted_eigenvalue_srw4_closed_form(srw4):
    m, phi = srw4.measure, srw4.observable
    for u in [(0.5, 1.1), (math.pi, math.pi), (-2.2, 0.9)]:
        want = (math.cos(u[0]) + math.cos(u[1])) / 2.0
        assert abs(twisted_eigenvalue(m, phi, u) - want) < 1e-12


def test_twisted_eigenvalue_at_origin_is_exactly_one(lazy5):
    assert twisted_eigenvalue(lazy5.measure, lazy5.observable, (0.0, 0.0)) == 1.0 + 0.0j


def test_twisted_eigenvalue_rejects_bad_shape(lazy5):
    with pytest.raises(ValueError):
        twisted_eigenvalue(lazy5.measure, lazy5.observable, (0.1, 0.2, 0.3))


def test_mean_drift_zero_for_walk_systems(lazy5, srw4):
    for bundle in (lazy5, srw4, build_markov5()):
        assert_allclose(mean_drift(bundle.measure, bundle.observable),
                        [0.0, 0.0], atol=1e-14)


def test_covariance_lazy5_closed_form(lazy5):
    """IID steps uniform on {E, W, N, S, H}: no serial terms survive and the
    covariance is E[step step^T] = (2/5) I.
    """
    sigma = covariance_matrix(lazy5.measure, lazy5.observable)
    assert_allclose(sigma, 0.4 * np.eye(2), atol=1e-12)


def test_covariance_requires_zero_drift(lazy5):
    biased = LatticeObservable.from_symbol_function(
        lazy5.measure.sft, {"E": (1, 0)})
    with pytest.raises(NonzeroDrift):
        covariance_matrix(lazy5.measure, biased)


def test_hessian_matches_negative_covariance(lazy5):
    hc = hessian_check(lazy5.measure, lazy5.observable, step=1e-3)
    assert hc["deviation"] < 1e-8
    assert np.abs(hc["grad_at_zero"]).max() < 1e-9
    assert hc["hessian_imag_residue"] < 1e-9
    assert_allclose(hc["hessian_at_zero"], -0.4 * np.eye(2), atol=1e-8)


def test_nonarithmeticity_margin_positive_lazy5(lazy5):
    scan = nonarithmeticity_scan(lazy5.measure, lazy5.observable, grid_n=32)
    # worst point is the grid neighbor of the origin, margin ~ sigma/2 |u|^2
    assert 0.0 < scan["margin"] < 0.02


def test_arithmetic_obstruction_srw4(srw4):
    scan = nonarithmeticity_scan(srw4.measure, srw4.observable, grid_n=32)
    assert abs(scan["margin"]) < 1e-12
    assert scan["argmax"] == (-math.pi, -math.pi)


def test_scan_rejects_tiny_grid(lazy5):
    with pytest.raises(ValueError):
        nonarithmeticity_scan(lazy5.measure, lazy5.observable, grid_n=4)


def test_scan_grid_table_consistent(lazy5):
    rows = scan_grid_table(lazy5.measure, lazy5.observable, grid_n=8)
    assert rows.shape == (64, 5)
    assert_allclose(rows[:, 4], np.hypot(rows[:, 2], rows[:, 3]), atol=1e-14)
    # origin row carries the untwisted eigenvalue 1
    at0 = rows[(rows[:, 0] == 0.0) & (rows[:, 1] == 0.0)]
    assert at0.shape[0] == 1
    assert at0[0, 2] == 1.0 and at0[0, 3] == 0.0


def test_subleading_radius_values(lazy5):
    # uniform full shift: the stochastic matrix is rank one
    assert subleading_radius(lazy5.measure) == pytest.approx(0.0, abs=1e-14)
    golden = build_golden_mean().measure
    assert subleading_radius(golden) == pytest.approx(1.0 / PHI**2, abs=1e-12)
    sub = subleading_radius(build_markov5().measure)
    assert 0.0 < sub < 1.0


def test_quadratic_decay_fit_positive(lazy5):
    c1 = quadratic_decay_fit(lazy5.measure, lazy5.observable)
    # local expansion |lambda| ~ 1 - (sigma/2)|u|^2 puts c1 near 0.2
    assert 0.1 < c1 <= 0.25


def test_spectral_report_lazy5(lazy5):
    rep = spectral_report(lazy5.measure, lazy5.observable)
    assert not rep.singular_covariance
    assert rep.det_sigma == pytest.approx(0.16, abs=1e-10)
    assert rep.beta == pytest.approx(5.0 / (4.0 * math.pi), abs=1e-10)
    assert rep.nonarith_margin > 0.0
    assert rep.subleading_radius == pytest.approx(0.0, abs=1e-14)
    d = rep.to_dict()
    assert set(d) == {"sigma_phi2", "det_sigma", "beta", "grad_at_zero",
                      "hessian_at_zero", "hessian_deviation",
                      "nonarith_margin", "nonarith_argmax",
                      "subleading_radius", "singular_covariance"}


def test_spectral_report_flags_singular_covariance(lazy5):
    flat = LatticeObservable.from_symbol_function(
        lazy5.measure.sft, {"E": (1, 0), "W": (-1, 0)})
    rep = spectral_report(lazy5.measure, flat)
    assert rep.singular_covariance
    assert math.isnan(rep.beta)


def test_observable_zeroed_on_forbidden_pairs():
    golden = build_golden_mean().measure
    obs = LatticeObservable.from_pairs(
        golden.sft, {("1", "1"): (3, 3), ("0", "1"): (1, -1)})
    assert tuple(obs.values[1, 1]) == (0, 0)
    assert tuple(obs.values[0, 1]) == (1, -1)
    assert obs.max_norm == 1


def test_observable_must_be_integer(lazy5):
    with pytest.raises(ValueError):
        LatticeObservable(lazy5.measure.sft, np.full((5, 5, 2), 0.5))


def test_observable_shape_checked(lazy5):
    with pytest.raises(ValueError):
        LatticeObservable(lazy5.measure.sft, np.zeros((5, 5), dtype=np.int64))


def test_observable_from_table_recodes(lazy5):
    golden = build_golden_mean().measure
    sft3, obs = observable_from_table(
        golden.sft, 3, {("0", "1", "0"): (1, 0), ("0", "0", "0"): (0, -1)})
    assert sft3.n_symbols == 3
    i, j = sft3.index("01"), sft3.index("10")
    assert tuple(obs.values[i, j]) == (1, 0)
    i, j = sft3.index("00"), sft3.index("00")
    assert tuple(obs.values[i, j]) == (0, -1)


def test_compat_check_across_systems(lazy5, srw4):
    with pytest.raises(ValueError):
        mean_drift(lazy5.measure, srw4.observable)
