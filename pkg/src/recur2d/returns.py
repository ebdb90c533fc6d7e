"""Return-time experiments: cylinder returns, displacement-constrained
returns with censoring, the lower-tail law, and the max-entropy Q matrix."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels
from .errors import BudgetExceeded, NotMaxEntropy, SingularCovariance
from .gibbs import (MarkovMeasure, asymptotic_variance_scalar, cylinder_measure,
                    min_log_cylinder)
from .rng import chunk_ranges, stream_seed
from .sft import Window, enumerate_windows
from .spectral import LatticeObservable, covariance_matrix

MAX_ENTROPY_TOL = 1e-10
STEP_CEILING = 10_000_000


@dataclass(frozen=True)
class ReturnRecord:
    """One return-time measurement.  value None marks censoring at `budget`."""

    kind: str
    k: int
    value: Optional[int]
    budget: int
    log_start_measure: float
    seed: int
    index: int = 0

    def __post_init__(self):
        if self.value is not None and self.value < 1:
            raise ValueError("uncensored return time must be >= 1")
        if not (self.log_start_measure <= 0.0):
            raise ValueError("start cylinder mass must lie in (0, 1]")

    @property
    def censored(self) -> bool:
        return self.value is None

    @property
    def stream_seed(self) -> int:
        return stream_seed(self.seed, self.index)


def _measure_tables(m: MarkovMeasure):
    p_cdf = np.cumsum(m.stationary)
    pi_cdf = np.cumsum(m.stochastic, axis=1)
    log_p = np.log(m.stationary)
    log_pi = np.where(m.stochastic > 0.0, np.log(
        np.where(m.stochastic > 0.0, m.stochastic, 1.0)), 0.0)
    return p_cdf, pi_cdf, log_p, log_pi


def _observable_arrays(phi: LatticeObservable):
    psi1 = np.ascontiguousarray(phi.values[:, :, 0])
    psi2 = np.ascontiguousarray(phi.values[:, :, 1])
    return psi1, psi2


def _uniform_iid_depth(m: MarkovMeasure) -> int:
    """Digits per 32-bit lane for the flat-row fast path, 0 if inapplicable.

    Lane depth d keeps each extracted digit's bias below A**(d-1)/2**32,
    held under 1e-6 by capping A**(d-1) at 4096.
    """
    a = len(m.sft.symbols)
    if not m.sft.transition.all():
        return 0
    flat = 1.0 / a
    if abs(m.stationary - flat).max() > 1e-14 or abs(m.stochastic - flat).max() > 1e-14:
        return 0
    return 1 + int(math.floor(math.log(4096.0) / math.log(a)))


def cylinder_return_samples(m: MarkovMeasure, k: int, n_samples: int,
                            seed: int, budget: int,
                            window: Optional[Window] = None,
                            workers: int = 1) -> dict:
    """Batch of first returns of the radius-k window.

    window None: each trajectory draws its own start window from the measure
    (the mixture over starting cylinders).  window given: every trajectory
    starts inside that fixed window.  Arrays are indexed by trajectory.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    p_cdf, pi_cdf, log_p, log_pi = _measure_tables(m)
    if window is not None:
        if window.one_sided or window.radius != k:
            raise ValueError("conditioning window must be two-sided radius k")
        if window.sft != m.sft:
            raise ValueError("window belongs to a different system")
        fixed = window.indices.astype(np.int64)
    else:
        fixed = np.empty(0, dtype=np.int64)
    values = np.zeros(n_samples, dtype=np.int64)
    log_masses = np.zeros(n_samples, dtype=np.float64)
    for lo, hi in chunk_ranges(n_samples, workers):
        _kernels.cylinder_returns_kernel(
            values[lo:hi], log_masses[lo:hi], lo, np.uint64(seed),
            p_cdf, pi_cdf, log_p, log_pi, k, fixed, budget)
    return {
        "kind": "cylinder-return",
        "k": k,
        "seed": seed,
        "budget": int(budget),
        "values": values,
        "censored": values == 0,
        "log_masses": log_masses,
    }


def cylinder_return_time(m: MarkovMeasure, k: int, seed: int, budget: int,
                         window: Optional[Window] = None) -> ReturnRecord:
    batch = cylinder_return_samples(m, k, 1, seed, budget, window=window)
    v = int(batch["values"][0])
    return ReturnRecord(
        kind="cylinder-return", k=k, value=v if v > 0 else None,
        budget=budget, log_start_measure=float(batch["log_masses"][0]),
        seed=seed, index=0)


def hirata_budget(m: MarkovMeasure, k: int, horizon: float = 20.0) -> int:
    """Budget covering the exponential law out to `horizon` rescaled time."""
    return int(math.ceil(horizon / math.exp(min_log_cylinder(m, k))))


def rescaled_return_values(batch: dict) -> tuple[np.ndarray, np.ndarray]:
    """(nu(C_k) * R_k for uncensored records, matching censoring thresholds).

    The second array holds nu * budget for the censored records: a censored
    record witnesses only "rescaled value > nu * budget".
    """
    nu = np.exp(batch["log_masses"])
    unc = ~batch["censored"]
    return nu[unc] * batch["values"][unc], nu[~unc] * batch["budget"]


def _check_walk(m: MarkovMeasure, phi: LatticeObservable) -> np.ndarray:
    # raises NonzeroDrift / SingularCovariance per the walk preconditions
    return covariance_matrix(m, phi)


def extension_return_samples(m: MarkovMeasure, phi: LatticeObservable,
                             k: int, n_traj: int, seed: int, *,
                             budget: Optional[int] = None,
                             tmax: Optional[float] = None,
                             ceiling: int = STEP_CEILING,
                             workers: int = 1) -> dict:
    """Batch of displacement-and-window returns at radius k.

    Exactly one of budget (fixed) and tmax must be given; tmax sizes each
    trajectory's budget as ceil(exp(tmax / own cylinder mass)), capped by
    `ceiling` after the global feasibility check.
    """
    if (budget is None) == (tmax is None):
        raise ValueError("give exactly one of budget and tmax")
    _check_walk(m, phi)
    p_cdf, pi_cdf, log_p, log_pi = _measure_tables(m)
    psi1, psi2 = _observable_arrays(phi)
    if tmax is not None:
        worst = tmax / math.exp(min_log_cylinder(m, k))
        required = math.exp(min(worst, 700.0))
        if worst > 700.0 or required > ceiling:
            raise BudgetExceeded(
                f"lower-tail horizon t={tmax} needs about {required:.3g} "
                f"steps per trajectory (ceiling {ceiling})",
                required=None if worst > 700.0 else int(math.ceil(required)))
        tmax_arg = float(tmax)
        fixed_arg = 0
    else:
        tmax_arg = -1.0
        fixed_arg = int(budget)
    taus = np.zeros(n_traj, dtype=np.int64)
    log_masses = np.zeros(n_traj, dtype=np.float64)
    budgets = np.zeros(n_traj, dtype=np.int64)
    flat = _uniform_iid_depth(m)
    for lo, hi in chunk_ranges(n_traj, workers):
        if flat:
            _kernels.extension_returns_uniform_kernel(
                taus[lo:hi], log_masses[lo:hi], budgets[lo:hi], lo,
                np.uint64(seed), len(m.sft.symbols), flat, log_p, log_pi,
                psi1, psi2, k, tmax_arg, fixed_arg, ceiling)
        else:
            _kernels.extension_returns_kernel(
                taus[lo:hi], log_masses[lo:hi], budgets[lo:hi], lo,
                np.uint64(seed), p_cdf, pi_cdf, log_p, log_pi, psi1, psi2,
                k, tmax_arg, fixed_arg, ceiling)
    return {
        "kind": "extension-return",
        "k": k,
        "seed": seed,
        "values": taus,
        "censored": taus == 0,
        "log_masses": log_masses,
        "budgets": budgets,
    }


def extension_return_time(m: MarkovMeasure, phi: LatticeObservable, k: int,
                          seed: int, budget: int) -> ReturnRecord:
    batch = extension_return_samples(m, phi, k, 1, seed, budget=budget)
    v = int(batch["values"][0])
    return ReturnRecord(
        kind="extension-return", k=k, value=v if v > 0 else None,
        budget=int(batch["budgets"][0]),
        log_start_measure=float(batch["log_masses"][0]), seed=seed, index=0)


def nested_extension_returns(m: MarkovMeasure, phi: LatticeObservable,
                             kmax: int, n_traj: int, seed: int, budget: int,
                             workers: int = 1) -> dict:
    """Per trajectory, the return times tau_k for every radius k = 1..kmax.

    One path and one radius-kmax start window serve all radii, so the records
    are pathwise nested: tau_1 <= ... <= tau_kmax wherever uncensored (0 marks
    a radius still unreturned within `budget`).  first_zero is the bare
    displacement return min{n : S_n = 0}, a lower bound for every tau_k.
    """
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    _check_walk(m, phi)
    p_cdf, pi_cdf, _, _ = _measure_tables(m)
    psi1, psi2 = _observable_arrays(phi)
    taus = np.zeros((n_traj, kmax), dtype=np.int64)
    first_zero = np.zeros(n_traj, dtype=np.int64)
    for lo, hi in chunk_ranges(n_traj, workers):
        _kernels.extension_nested_kernel(taus[lo:hi], first_zero[lo:hi], lo,
                                         np.uint64(seed), p_cdf, pi_cdf,
                                         psi1, psi2, kmax, budget)
    return {
        "kind": "nested-return",
        "kmax": kmax,
        "seed": seed,
        "budget": int(budget),
        "taus": taus,
        "first_zero": first_zero,
    }


def recurrence_beta(m: MarkovMeasure, phi: LatticeObservable) -> float:
    sigma = covariance_matrix(m, phi)
    det = float(np.linalg.det(sigma))
    if det <= 1e-14:
        raise SingularCovariance(f"covariance determinant {det:.3e} is not "
                                 "positive; the rate constant is undefined")
    return 1.0 / (2.0 * math.pi * math.sqrt(det))


def tau_lower_tail(m: MarkovMeasure, phi: LatticeObservable, k: int,
                   t_list: Sequence[float], n_traj: int, seed: int, *,
                   ceiling: int = STEP_CEILING, workers: int = 1) -> dict:
    """Empirical P(nu(C_k) log tau <= t) per t against the limit bt/(1+bt).

    Budgets are per-trajectory at the largest t, so every record decides
    every listed threshold exactly; censoring never biases the counts.
    """
    ts = [float(t) for t in t_list]
    if not ts or any(b <= a for a, b in zip(ts, ts[1:])) or ts[0] <= 0:
        raise ValueError("t_list must be positive strictly ascending")
    beta = recurrence_beta(m, phi)
    batch = extension_return_samples(
        m, phi, k, n_traj, seed, tmax=ts[-1], ceiling=ceiling,
        workers=workers)
    unc = ~batch["censored"]
    rescaled = np.where(
        unc, np.exp(batch["log_masses"]) * np.log(
            np.where(unc, batch["values"], 1)), np.inf)
    rows = []
    for t in ts:
        hits = int((rescaled <= t).sum())
        phat = hits / n_traj
        rows.append({
            "t": t,
            "empirical": phat,
            "stderr": math.sqrt(max(phat * (1.0 - phat), 1e-300) / n_traj),
            "limit": beta * t / (1.0 + beta * t),
        })
    return {
        "kind": "lower-tail",
        "k": k,
        "seed": seed,
        "n_traj": n_traj,
        "beta": beta,
        "censored_fraction": float(batch["censored"].mean()),
        "rows": rows,
        "samples": batch,
    }


@dataclass(frozen=True)
class QMatrixReport:
    """Endpoint matrix Q with nu(C_k) = Q[x_-k, x_k] e^{-(2k+1) d/2}.

    alpha[i, j] = p_i p_j are the mixture weights; the mixture CDF for a
    rate constant beta is t -> sum alpha_ij G(beta Q_ij t)."""

    symbols: tuple[str, ...]
    q: np.ndarray
    alpha: np.ndarray
    constancy_deviation: float
    k_range: tuple[int, ...]

    def __post_init__(self):
        if abs(float(self.alpha.sum()) - 1.0) > 1e-12:
            raise ValueError("mixture weights must sum to 1")
        if np.any(self.q <= 0.0):
            raise ValueError("Q entries must be positive")

    def mixture_cdf(self, beta: float) -> Callable[[float], float]:
        alpha = self.alpha.ravel()
        rates = beta * self.q.ravel()

        def cdf(t: float) -> float:
            if t <= 0.0:
                return 0.0
            x = rates * t
            return float((alpha * (x / (1.0 + x))).sum())

        return cdf


def q_matrix(m: MarkovMeasure, k_range: Sequence[int] = (2, 3, 4, 5, 6), *,
             sample_windows: int = 64, seed: int = 0,
             enumeration_limit: int = 20_000) -> QMatrixReport:
    """Q from exact cylinder measures of the maximal-entropy measure.

    For each k and endpoint pair, interior words are enumerated outright when
    the word count allows, otherwise sampled along admissible paths; the
    spread of nu(C_k) e^{(2k+1) d/2} across words and k is the constancy
    deviation (zero in exact arithmetic only for max-entropy measures).
    """
    ks = sorted(set(int(k) for k in k_range))
    if not ks or ks[0] < 1:
        raise ValueError("k_range must contain integers >= 1")
    if asymptotic_variance_scalar(m, m.log_pi_potential()) > MAX_ENTROPY_TOL:
        raise NotMaxEntropy(
            "measure is not the maximal-entropy measure of its system")
    sft = m.sft
    a_sym = sft.n_symbols
    d = m.dimension
    sums = np.zeros((a_sym, a_sym))
    counts = np.zeros((a_sym, a_sym), dtype=np.int64)
    per_pair: dict[tuple[int, int], list[float]] = {}
    for k in ks:
        length = 2 * k + 1
        words = _interior_words(m, length, sample_windows, seed,
                                enumeration_limit)
        for word in words:
            w = Window(sft, word)
            i = sft.index(word[0])
            j = sft.index(word[-1])
            est = math.exp(cylinder_measure(m, w).log_prob
                           + 0.5 * length * d)
            sums[i, j] += est
            counts[i, j] += 1
            per_pair.setdefault((i, j), []).append(est)
    mask = counts > 0
    if not mask.all():
        raise NotMaxEntropy("some endpoint pair has no sampled word; "
                            "raise k_range or sample_windows")
    q = sums / counts
    dev = 0.0
    for (i, j), vals in per_pair.items():
        center = q[i, j]
        for v in vals:
            dev = max(dev, abs(v / center - 1.0))
    alpha = np.outer(m.stationary, m.stationary)
    return QMatrixReport(
        symbols=sft.symbols,
        q=q,
        alpha=alpha,
        constancy_deviation=float(dev),
        k_range=tuple(ks),
    )


def _interior_words(m: MarkovMeasure, length: int, sample_windows: int,
                    seed: int, enumeration_limit: int) -> list[tuple[str, ...]]:
    sft = m.sft
    approx = sft.n_symbols ** length
    if approx <= enumeration_limit:
        return list(enumerate_windows(sft, length))
    from .rng import numpy_generator

    gen = numpy_generator(seed, 97, length)
    pi = m.stochastic
    words = set()
    symbols = sft.symbols
    for _ in range(sample_windows):
        seq = [int(gen.integers(0, sft.n_symbols))]
        for _ in range(length - 1):
            row = pi[seq[-1]]
            seq.append(int(gen.choice(sft.n_symbols, p=row / row.sum())))
        words.add(tuple(symbols[s] for s in seq))
    return sorted(words)
