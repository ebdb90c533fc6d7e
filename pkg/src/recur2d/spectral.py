"""Twisted transition matrices and the eigenvalue surface of a lattice observable.

A Z^2-valued pair observable psi turns the chain's transition matrix into the
one-parameter family

    P_u[a, b] = pi[a, b] * exp(i u . psi(a, b)),          u in [-pi, pi]^2.

Its leading eigenvalue lambda_u is the exact finite-dimensional carrier of the
walk's characteristic function; everything this module reports (covariance,
Hessian identity, off-zero spectral radius, spectral gap) is a function of
that surface.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import EigenSolverFailure, NonzeroDrift, SingularCovariance
from .gibbs import MarkovMeasure, asymptotic_covariance_pair, block_sft
from .sft import SftSpec


@dataclass(frozen=True)
class LatticeObservable:
    """Integer plane-valued table psi(a, b) on admissible pairs.

    `values` has shape (A, A, 2) with integer entries; entries on forbidden
    pairs are zeroed and never read.  `max_norm` is the sup-norm bound used
    for displacement-table sizing.
    """

    sft: SftSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, copy=True)
        a = self.sft.n_symbols
        if v.shape != (a, a, 2):
            raise ValueError(f"values shape {v.shape}, expected {(a, a, 2)}")
        if not np.all(v == np.round(v)):
            raise ValueError("lattice observable must be integer-valued")
        v = v.astype(np.int64)
        mask = self.sft.transition.astype(bool)
        v[~mask] = 0
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def max_norm(self) -> int:
        return int(np.abs(self.values).max())

    @classmethod
    def from_symbol_function(
        cls, sft: SftSpec, f: Mapping[str, Sequence[int]]
    ) -> "LatticeObservable":
        """Observable depending on the first coordinate: psi(a, b) = f(a)."""
        a = sft.n_symbols
        v = np.zeros((a, a, 2), dtype=np.int64)
        for s, vec in f.items():
            v[sft.index(s), :, :] = np.asarray(vec, dtype=np.int64)
        return cls(sft, v)

    @classmethod
    def from_pairs(
        cls, sft: SftSpec, table: Mapping[tuple[str, str], Sequence[int]]
    ) -> "LatticeObservable":
        a = sft.n_symbols
        v = np.zeros((a, a, 2), dtype=np.int64)
        for (s, t), vec in table.items():
            v[sft.index(s), sft.index(t), :] = np.asarray(vec, dtype=np.int64)
        return cls(sft, v)


@dataclass(frozen=True)
class SpectralReport:
    """Spectral summary of (measure, observable)."""

    sigma_phi2: np.ndarray
    det_sigma: float
    beta: float
    grad_at_zero: np.ndarray
    hessian_at_zero: np.ndarray
    hessian_deviation: float
    nonarith_margin: float
    nonarith_argmax: tuple[float, float]
    subleading_radius: float
    singular_covariance: bool

    def to_dict(self) -> dict:
        return {
            "sigma_phi2": self.sigma_phi2.tolist(),
            "det_sigma": self.det_sigma,
            "beta": self.beta,
            "grad_at_zero": [float(np.abs(g)) for g in self.grad_at_zero],
            "hessian_at_zero": self.hessian_at_zero.tolist(),
            "hessian_deviation": self.hessian_deviation,
            "nonarith_margin": self.nonarith_margin,
            "nonarith_argmax": list(self.nonarith_argmax),
            "subleading_radius": self.subleading_radius,
            "singular_covariance": self.singular_covariance,
        }


def _check_compat(m: MarkovMeasure, phi: LatticeObservable) -> None:
    if phi.sft != m.sft:
        raise ValueError("observable keyed to a different subshift")


def mean_drift(m: MarkovMeasure, phi: LatticeObservable) -> np.ndarray:
    """Stationary mean of the observable, E[psi] = sum_ab p_a pi_ab psi(a, b)."""
    _check_compat(m, phi)
    edge = m.stationary[:, None] * m.stochastic
    return np.array(
        [float(np.sum(edge * phi.values[:, :, c])) for c in (0, 1)]
    )


def covariance_matrix(m: MarkovMeasure, phi: LatticeObservable) -> np.ndarray:
    """Asymptotic covariance of the partial sums, entrywise by Green-Kubo.

    Requires zero drift (NonzeroDrift otherwise).  The result is symmetrized
    and clamped to positive semidefinite at -1e-10; a singular matrix is
    returned as-is -- callers that need invertibility must check
    (:func:`spectral_report` flags it).
    """
    _check_compat(m, phi)
    drift = mean_drift(m, phi)
    if np.abs(drift).max() > 1e-12:
        raise NonzeroDrift(f"mean drift {drift.tolist()} exceeds 1e-12")
    comps = [phi.values[:, :, 0].astype(np.float64), phi.values[:, :, 1].astype(np.float64)]
    s = np.empty((2, 2))
    for i in range(2):
        for j in range(i, 2):
            s[i, j] = s[j, i] = asymptotic_covariance_pair(m, comps[i], comps[j])
    s = 0.5 * (s + s.T)
    eigvals, eigvecs = np.linalg.eigh(s)
    if eigvals.min() < -1e-10:
        raise SingularCovariance(
            f"covariance eigenvalue {eigvals.min():.3e} below -1e-10"
        )
    eigvals = np.clip(eigvals, 0.0, None)
    return eigvecs @ np.diag(eigvals) @ eigvecs.T


def twisted_eigenvalue(
    m: MarkovMeasure, phi: LatticeObservable, u: Sequence[float]
) -> complex:
    """Leading (largest modulus) eigenvalue of P_u; exactly 1 at u = 0."""
    _check_compat(m, phi)
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (2,):
        raise ValueError("u must be a 2-vector")
    if u[0] == 0.0 and u[1] == 0.0:
        return 1.0 + 0.0j
    mat = m.stochastic * np.exp(
        1j * (u[0] * phi.values[:, :, 0] + u[1] * phi.values[:, :, 1])
    )
    try:
        eigs = np.linalg.eigvals(mat)
    except np.linalg.LinAlgError as e:
        raise EigenSolverFailure(f"eigenvalue solve failed at u={u.tolist()}: {e}") from None
    return complex(eigs[np.argmax(np.abs(eigs))])


def hessian_check(
    m: MarkovMeasure, phi: LatticeObservable, step: float = 1e-3
) -> dict:
    """Gradient and Hessian of lambda_u at 0 by 5x5-stencil finite differences.

    Fourth-order central formulas on the axes, second-order cross term.  The
    surface is analytic, so with step 1e-3 the truncation error sits well
    under the 1e-5 comparison tolerance used by callers.  Returns grad,
    Hessian (real part), the imaginary residue, and the max-norm deviation
    between the Hessian and -sigma_phi2.
    """
    _check_compat(m, phi)
    h = float(step)
    lam = {}
    for i in (-2, -1, 0, 1, 2):
        for j in (-2, -1, 0, 1, 2):
            lam[i, j] = twisted_eigenvalue(m, phi, (i * h, j * h))

    def d1(axis: int) -> complex:
        pick = (lambda t: lam[t, 0]) if axis == 0 else (lambda t: lam[0, t])
        return (-pick(2) + 8 * pick(1) - 8 * pick(-1) + pick(-2)) / (12 * h)

    def d2(axis: int) -> complex:
        pick = (lambda t: lam[t, 0]) if axis == 0 else (lambda t: lam[0, t])
        return (
            -pick(2) + 16 * pick(1) - 30 * pick(0) + 16 * pick(-1) - pick(-2)
        ) / (12 * h * h)

    cross = (lam[1, 1] - lam[1, -1] - lam[-1, 1] + lam[-1, -1]) / (4 * h * h)
    grad = np.array([d1(0), d1(1)])
    hess_c = np.array([[d2(0), cross], [cross, d2(1)]])
    hess = hess_c.real
    sigma = covariance_matrix(m, phi)
    return {
        "grad_at_zero": grad,
        "hessian_at_zero": hess,
        "hessian_imag_residue": float(np.abs(hess_c.imag).max()),
        "deviation": float(np.abs(hess + sigma).max()),
        "sigma_phi2": sigma,
    }


def nonarithmeticity_scan(
    m: MarkovMeasure, phi: LatticeObservable, grid_n: int = 64
) -> dict:
    """1 minus the largest twisted spectral radius over the frequency grid.

    Grid points are (-pi + 2 pi j / n, -pi + 2 pi l / n), the origin excluded.
    A positive margin certifies that no nonzero frequency on the grid admits
    a modulus-one eigenvalue (the arithmetic obstruction).
    """
    _check_compat(m, phi)
    if grid_n < 8:
        raise ValueError("grid_n must be >= 8")
    us = -np.pi + 2.0 * np.pi * np.arange(grid_n) / grid_n
    worst = -1.0
    argmax = (np.nan, np.nan)
    for u1 in us:
        for u2 in us:
            if u1 == 0.0 and u2 == 0.0:
                continue
            rad = abs(twisted_eigenvalue(m, phi, (u1, u2)))
            if rad > worst:
                worst = rad
                argmax = (float(u1), float(u2))
    return {"margin": 1.0 - worst, "argmax": argmax, "grid_n": grid_n}


def scan_grid_table(
    m: MarkovMeasure, phi: LatticeObservable, grid_n: int = 64
) -> np.ndarray:
    """(n^2, 5) array of (u1, u2, Re lambda, Im lambda, |lambda|) over the grid."""
    us = -np.pi + 2.0 * np.pi * np.arange(grid_n) / grid_n
    rows = np.empty((grid_n * grid_n, 5))
    r = 0
    for u1 in us:
        for u2 in us:
            lam = twisted_eigenvalue(m, phi, (u1, u2))
            rows[r] = (u1, u2, lam.real, lam.imag, abs(lam))
            r += 1
    return rows


def subleading_radius(m: MarkovMeasure) -> float:
    """Second-largest eigenvalue modulus of the untwisted matrix.

    Finite-dimensional proxy for the contraction rate off the leading
    eigendirection; always < 1 for a primitive chain.
    """
    eigs = np.abs(np.linalg.eigvals(m.stochastic))
    eigs.sort()
    return float(eigs[-2]) if len(eigs) > 1 else 0.0


def quadratic_decay_fit(
    m: MarkovMeasure, phi: LatticeObservable, radius: float = 0.3, n: int = 9
) -> float:
    """Largest c1 with |lambda_u| <= exp(-c1 |u|^2) on a small grid around 0."""
    best = np.inf
    for u1 in np.linspace(-radius, radius, n):
        for u2 in np.linspace(-radius, radius, n):
            norm2 = u1 * u1 + u2 * u2
            if norm2 == 0.0:
                continue
            rad = abs(twisted_eigenvalue(m, phi, (u1, u2)))
            best = min(best, -np.log(rad) / norm2)
    return float(best)


def observable_from_table(
    sft: SftSpec, r: int, table: Mapping[tuple[str, ...], Sequence[int]]
) -> tuple[SftSpec, "LatticeObservable"]:
    """Locally constant Z^2 observable on r coordinates as a pair observable.

    Same block recoding as :func:`recur2d.gibbs.potential_from_table`: for
    r > 2 the value on the block pair (u, v) is the table entry of the r-word
    u + v[-1].  Missing admissible words default to (0, 0).
    """
    if r < 2:
        raise ValueError("use from_symbol_function for single-coordinate observables")
    if r == 2:
        return sft, LatticeObservable.from_pairs(sft, dict(table))
    bsft, words = block_sft(sft, r - 1)
    v = np.zeros((len(words), len(words), 2), dtype=np.int64)
    for i, u in enumerate(words):
        for j, w in enumerate(words):
            if u[1:] == w[:-1]:
                v[i, j] = np.asarray(table.get(u + (w[-1],), (0, 0)), dtype=np.int64)
    return bsft, LatticeObservable(bsft, v)


def spectral_report(
    m: MarkovMeasure,
    phi: LatticeObservable,
    grid_n: int = 64,
    step: float = 1e-3,
) -> SpectralReport:
    """Assemble the full spectral summary (covariance, Hessian, scan, gap)."""
    hc = hessian_check(m, phi, step)
    sigma = hc["sigma_phi2"]
    det = float(np.linalg.det(sigma))
    singular = det <= 1e-14
    beta = float("nan") if singular else 1.0 / (2.0 * np.pi * np.sqrt(det))
    scan = nonarithmeticity_scan(m, phi, grid_n)
    return SpectralReport(
        sigma_phi2=sigma,
        det_sigma=det,
        beta=beta,
        grad_at_zero=hc["grad_at_zero"],
        hessian_at_zero=hc["hessian_at_zero"],
        hessian_deviation=hc["deviation"],
        nonarith_margin=float(scan["margin"]),
        nonarith_argmax=scan["argmax"],
        subleading_radius=subleading_radius(m),
        singular_covariance=singular,
    )
