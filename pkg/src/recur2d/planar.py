"""Planar random walks: small-ball return probabilities with their scaling
shape, and the coarse return-time trend."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import special

from . import _kernels
from .rng import chunk_ranges
from .stats import slope_regression

_QUAD_NODES = 24
_TRIAL_CHUNK = 100_000


@dataclass(frozen=True)
class PlanarWalkLaw:
    """Step law of an aperiodic planar walk.

    cramer_ok declares (not verifies) the decay of the step characteristic
    function away from 0; the lattice law fails it and is kept only as the
    documented counterpoint.
    """

    tag: str
    param: float = 1.0

    _CODES = {"gaussian": 0, "uniform-disc": 1, "lattice-simple": 2}

    def __post_init__(self):
        if self.tag not in self._CODES:
            raise ValueError(f"unknown step law {self.tag!r}")
        if self.param <= 0:
            raise ValueError("law parameter must be positive")

    @property
    def law_code(self) -> int:
        return self._CODES[self.tag]

    @property
    def covariance(self) -> np.ndarray:
        if self.tag == "gaussian":
            return np.eye(2)
        if self.tag == "uniform-disc":
            return np.eye(2) * (self.param**2 / 4.0)
        return np.eye(2) * 0.5

    @property
    def cramer_ok(self) -> bool:
        return self.tag != "lattice-simple"


def gaussian_law() -> PlanarWalkLaw:
    return PlanarWalkLaw("gaussian")


def uniform_disc_law(radius: float = 1.0) -> PlanarWalkLaw:
    return PlanarWalkLaw("uniform-disc", radius)


def lattice_law() -> PlanarWalkLaw:
    return PlanarWalkLaw("lattice-simple")


def endpoint_radii_squared(law: PlanarWalkLaw, n_steps: int, n_trials: int,
                           seed: int, workers: int = 1,
                           block: int = 1024) -> np.ndarray:
    """|S_n|^2 samples.  Gaussian walks advance in exact N(0, m I) blocks;
    the other laws step honestly."""
    out = np.zeros(n_trials, dtype=np.float64)
    for lo, hi in chunk_ranges(n_trials, workers):
        _kernels.planar_endpoint_r2_kernel(out[lo:hi], lo, np.uint64(seed),
                                           n_steps, law.law_code, law.param,
                                           block)
    return out


def ball_hit_probability(radii_sq_prev: np.ndarray, eps: float) -> float:
    """Mean over trials of P(|s + Z| < eps), Z a standard 2d gaussian.

    Conditioning on the walk one step before the endpoint turns the vanishing
    indicator {|S_n| < eps} into a smooth one-step integral, computed by
    Gauss-Legendre on [0, eps]: integrand r exp(-(r-s)^2/2) i0e(r s) has no
    overflow anywhere."""
    nodes, weights = np.polynomial.legendre.leggauss(_QUAD_NODES)
    r = 0.5 * eps * (nodes + 1.0)
    w = 0.5 * eps * weights
    s = np.sqrt(radii_sq_prev)
    total = 0.0
    for lo in range(0, len(s), _TRIAL_CHUNK):
        sc = s[lo:lo + _TRIAL_CHUNK, None]
        integrand = r * np.exp(-0.5 * (r - sc) ** 2) * special.i0e(r * sc)
        total += float((integrand @ w).sum())
    return total / len(s)


def planar_return_prob(law: PlanarWalkLaw, n_list: Sequence[int],
                       eps_list: Sequence[float], n_trials: int, seed: int, *,
                       estimator: str = "conditional", workers: int = 1,
                       block: int = 1024) -> dict:
    """P(|S_n| < eps) over the (n, eps) grid, with log-log slope fits.

    estimator "conditional" (gaussian law only) averages the exact one-step
    ball probability at S_{n-1}: unbiased, usable even where the plain
    indicator would see no hits at all.  "indicator" counts |S_n| < eps
    directly and works for every law.
    """
    ns = [int(n) for n in n_list]
    epss = [float(e) for e in eps_list]
    if estimator not in ("conditional", "indicator"):
        raise ValueError("estimator must be conditional or indicator")
    if estimator == "conditional" and law.tag != "gaussian":
        raise ValueError("conditional estimator needs gaussian steps")
    probs = np.zeros((len(ns), len(epss)))
    for i, n in enumerate(ns):
        if estimator == "conditional":
            r2 = endpoint_radii_squared(law, n - 1, n_trials,
                                        seed + i, workers, block)
            for j, eps in enumerate(epss):
                probs[i, j] = ball_hit_probability(r2, eps)
        else:
            r2 = endpoint_radii_squared(law, n, n_trials,
                                        seed + i, workers, block)
            for j, eps in enumerate(epss):
                probs[i, j] = float((r2 < eps * eps).mean())
    cells = [{
        "n": ns[i],
        "eps": epss[j],
        "probability": float(probs[i, j]),
    } for i in range(len(ns)) for j in range(len(epss))]
    log_p = np.log(np.maximum(probs, 1e-300))
    slope_n = slope_eps = None
    fits_n = []
    fits_e = []
    if len(ns) >= 3:
        for j in range(len(epss)):
            fits_n.append(slope_regression(np.log(ns), log_p[:, j]))
        slope_n = float(np.mean([f.slope for f in fits_n]))
    if len(epss) >= 3:
        for i in range(len(ns)):
            fits_e.append(slope_regression(np.log(epss), log_p[i, :]))
        slope_eps = float(np.mean([f.slope for f in fits_e]))
    return {
        "kind": "planar-prob",
        "law": law.tag,
        "estimator": estimator,
        "cramer_ok": law.cramer_ok,
        "n_trials": n_trials,
        "seed": seed,
        "cells": cells,
        "slope_log_n": slope_n,
        "slope_log_eps": slope_eps,
        "slope_log_n_stderr":
            float(np.mean([f.stderr for f in fits_n])) if fits_n else None,
        "slope_log_eps_stderr":
            float(np.mean([f.stderr for f in fits_e])) if fits_e else None,
    }


def planar_tau_trend(law: PlanarWalkLaw, eps_list: Sequence[float],
                     n_trials: int, seed: int, *, budget: int = 10**9,
                     workers: int = 1) -> dict:
    """Medians of tau_eps = min{n >= 1 : |S_n| < eps} per eps.

    Reports the full-sample median (censored records count as +inf, exact
    whenever fewer than half the records are censored) and the normalized
    median log log tau / (-log eps); eps = 1 skips the ratio.
    """
    rows = []
    for j, eps in enumerate(eps_list):
        eps = float(eps)
        if not 0.0 < eps <= 1.0:
            raise ValueError("eps must lie in (0, 1]")
        taus = np.zeros(n_trials, dtype=np.int64)
        for lo, hi in chunk_ranges(n_trials, workers):
            _kernels.planar_tau_kernel(taus[lo:hi], lo,
                                       np.uint64(seed + 104729 * j), eps,
                                       budget, law.law_code, law.param)
        censored = taus == 0
        cens_frac = float(censored.mean())
        full = np.where(censored, np.inf, taus.astype(np.float64))
        median_tau: Optional[float] = float(np.median(full))
        ratio: Optional[float] = None
        if not math.isfinite(median_tau):
            median_tau = None
        elif eps < 1.0 and median_tau > 1.0:
            ratio = math.log(math.log(median_tau)) / (-math.log(eps))
        rows.append({
            "eps": eps,
            "median_tau": median_tau,
            "median_ratio": ratio,
            "censored_fraction": cens_frac,
        })
    return {
        "kind": "planar-tau",
        "law": law.tag,
        "n_trials": n_trials,
        "seed": seed,
        "budget": budget,
        "rows": rows,
    }
