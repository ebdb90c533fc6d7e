import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from recur2d.errors import BudgetExceeded, InadmissibleWindow
from recur2d.gibbs import cylinder_measure
from recur2d.llt import (displacement_distribution, llt_conditional_check,
                         return_probability_track)
from recur2d.sft import Window, enumerate_windows
from recur2d.spectral import LatticeObservable
from recur2d.systems import build_golden_mean, build_lazy5


@pytest.fixture(scope="module")
def lazy5():
    return build_lazy5()


def _brute_force_law(m, phi, n):
    """Path enumeration oracle: weight every admissible (n+1)-word by its
    cylinder mass and accumulate the summed pair observable.
    """
    law = {}
    for word in enumerate_windows(m.sft, n + 1):
        w = Window(m.sft, word, one_sided=True)
        prob = cylinder_measure(m, w).prob
        v = (0, 0)
        for j in range(n):
            a, b = m.sft.index(word[j]), m.sft.index(word[j + 1])
            v = (v[0] + int(phi.values[a, b, 0]), v[1] + int(phi.values[a, b, 1]))
        law[v] = law.get(v, 0.0) + prob
    return law


def test_table_matches_brute_force_golden_mean():
    m = build_golden_mean().measure
    phi = LatticeObservable.from_pairs(
        m.sft, {("0", "0"): (1, 2), ("0", "1"): (-1, 0), ("1", "0"): (0, -1)})
    n = 6
    law = _brute_force_law(m, phi, n)
    table = displacement_distribution(m, phi, n)
    assert table.mass_check == pytest.approx(1.0, abs=1e-12)
    r = table.radius
    for v1 in range(-r, r + 1):
        for v2 in range(-r, r + 1):
            want = law.get((v1, v2), 0.0)
            assert table.point_mass((v1, v2)) == pytest.approx(want, abs=1e-13)


def test_table_matches_brute_force_lazy5(lazy5):
    m, phi = lazy5.measure, lazy5.observable
    n = 4
    law = _brute_force_law(m, phi, n)
    table = displacement_distribution(m, phi, n)
    for v, want in law.items():
        assert table.point_mass(v) == pytest.approx(want, abs=1e-13)


def test_return_probability_small_n_exact(lazy5):
    """Counting words that sum to zero: 1 of 5, 5 of 25, then the triples
    HHH, perms of EWH, perms of NSH: 13 of 125.
    """
    m, phi = lazy5.measure, lazy5.observable
    track = return_probability_track(m, phi, 3)
    assert_allclose(track, [1 / 5, 5 / 25, 13 / 125], atol=1e-14)


def test_track_agrees_with_tables(lazy5):
    m, phi = lazy5.measure, lazy5.observable
    track = return_probability_track(m, phi, 5)
    for j in range(1, 6):
        table = displacement_distribution(m, phi, j)
        assert track[j - 1] == pytest.approx(table.return_probability(),
                                             abs=1e-14)


def test_table_moments_iid_steps(lazy5):
    """IID uniform compass-with-hold steps: mean 0, covariance n (2/5) I."""
    m, phi = lazy5.measure, lazy5.observable
    table = displacement_distribution(m, phi, 6)
    assert_allclose(table.mean(), [0.0, 0.0], atol=1e-13)
    assert_allclose(table.covariance(), 6 * 0.4 * np.eye(2), atol=1e-12)


def test_entry_and_point_mass(lazy5):
    m, phi = lazy5.measure, lazy5.observable
    table = displacement_distribution(m, phi, 1)
    # the step records the source symbol, the end symbol is free
    assert table.point_mass((1, 0)) == pytest.approx(0.2, abs=1e-14)
    assert table.entry((1, 0), "N") == pytest.approx(0.04, abs=1e-14)
    assert table.point_mass((3, 3)) == 0.0
    assert table.entry((9, 9), "E") == 0.0


def test_start_condition_brute_force(lazy5):
    """Conditioned DP against enumeration of the pinned-prefix words."""
    m, phi = lazy5.measure, lazy5.observable
    start = Window(m.sft, ("E", "N"), one_sided=True)
    n = 3
    table = displacement_distribution(m, phi, n, start)
    assert table.mass_check == pytest.approx(1.0, abs=1e-12)
    law = {}
    for word in enumerate_windows(m.sft, n + 1):
        if word[:2] != ("E", "N"):
            continue
        prob = 1.0
        for j in range(1, n):
            prob *= m.stochastic[m.sft.index(word[j]), m.sft.index(word[j + 1])]
        v = (0, 0)
        for j in range(n):
            a, b = m.sft.index(word[j]), m.sft.index(word[j + 1])
            v = (v[0] + int(phi.values[a, b, 0]), v[1] + int(phi.values[a, b, 1]))
        law[v] = law.get(v, 0.0) + prob
    for v, want in law.items():
        assert table.point_mass(v) == pytest.approx(want, abs=1e-13)


def test_csv_text_deterministic(lazy5):
    m, phi = lazy5.measure, lazy5.observable
    table = displacement_distribution(m, phi, 2)
    text = table.csv_text()
    assert text == displacement_distribution(m, phi, 2).csv_text()
    lines = text.splitlines()
    assert lines[0] == "v1,v2,end_symbol,probability"
    assert len(lines) == 1 + sum(1 for _ in table.nonzero_entries())
    # probabilities round-trip exactly through repr
    v1, v2, sym, prob = lines[1].split(",")
    assert float(prob) == table.entry((int(v1), int(v2)), sym)


def test_write_csv_matches_text(lazy5, tmp_path):
    m, phi = lazy5.measure, lazy5.observable
    table = displacement_distribution(m, phi, 2)
    path = tmp_path / "law.csv"
    table.write_csv(str(path))
    assert path.read_text() == table.csv_text()


def test_memory_budget_refused(lazy5):
    m, phi = lazy5.measure, lazy5.observable
    with pytest.raises(BudgetExceeded) as exc:
        return_probability_track(m, phi, 50, max_bytes=1000)
    assert exc.value.required > 1000
    with pytest.raises(BudgetExceeded):
        displacement_distribution(m, phi, 50, max_bytes=1000)


def test_conditional_check_fields_consistent(lazy5):
    m, phi = lazy5.measure, lazy5.observable
    wa = Window(m.sft, ("E", "E", "E"))
    wb = Window(m.sft, ("N",), one_sided=True)
    out = llt_conditional_check(m, phi, wa, wb, n=150, k=5)
    assert out["nu_a"] == pytest.approx(0.2 ** 3, abs=1e-14)
    assert out["nu_b_hat"] == pytest.approx(0.2, abs=1e-14)
    assert out["exact"] > 0.0
    assert out["ratio"] == pytest.approx(out["exact"] / out["main_term"],
                                         rel=1e-12)
    assert out["abs_error"] == pytest.approx(
        abs(out["exact"] - out["main_term"]), rel=1e-12)
    assert 0.85 < out["ratio"] < 1.15


def test_conditional_check_rejects_bad_windows(lazy5):
    m, phi = lazy5.measure, lazy5.observable
    two_sided = Window(m.sft, ("E", "E", "E"))
    one_sided = Window(m.sft, ("N",), one_sided=True)
    with pytest.raises(ValueError):
        llt_conditional_check(m, phi, two_sided, one_sided, n=5, k=5)
    with pytest.raises(InadmissibleWindow):
        llt_conditional_check(m, phi, one_sided, one_sided, n=50, k=5)
    with pytest.raises(InadmissibleWindow):
        llt_conditional_check(m, phi, two_sided, two_sided, n=50, k=5)
    with pytest.raises(InadmissibleWindow):
        # landing inside the start window: n - k must exceed its radius
        llt_conditional_check(m, phi, two_sided, one_sided, n=6, k=5)


def test_track_rel_deviation_shrinks(lazy5):
    """n P(S_n = 0) closes in on beta = 5 / (4 pi) at the 1/n rate."""
    m, phi = lazy5.measure, lazy5.observable
    beta = 5.0 / (4.0 * math.pi)
    track = return_probability_track(m, phi, 120)
    rel = [abs((n * track[n - 1] - beta) / beta) for n in (30, 120)]
    assert rel[1] < 0.02
    assert rel[1] < rel[0]
