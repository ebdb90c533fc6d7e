"""Censoring-aware empirical distributions, reference laws, KS distances,
and small regression utilities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy import stats as sps

from .errors import DegenerateDesign, EmptySample


class KsResult(NamedTuple):
    statistic: float
    coverage: float
    valid_upto: float


@dataclass(frozen=True)
class Ecdf:
    """Empirical CDF with right-censored records.

    A record censored at threshold c witnesses only "value > c"; queries at
    t <= c are decided, queries beyond any censoring threshold are not.
    F(t) = #{values <= t} / n_total is exact on t <= valid_upto.
    """

    values: np.ndarray
    censor_thresholds: np.ndarray = field(
        default_factory=lambda: np.empty(0))

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=np.float64))
        c = np.sort(np.asarray(self.censor_thresholds, dtype=np.float64))
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "censor_thresholds", c)
        if self.n_total == 0:
            raise EmptySample("no records at all")

    @property
    def n_total(self) -> int:
        return len(self.values) + len(self.censor_thresholds)

    @property
    def valid_upto(self) -> float:
        if len(self.censor_thresholds) == 0:
            return math.inf
        return float(self.censor_thresholds[0])

    def evaluate(self, t: float) -> float:
        if t > self.valid_upto:
            raise ValueError(
                f"query at {t} exceeds the decided region "
                f"(censoring starts at {self.valid_upto})")
        return float(np.searchsorted(self.values, t, side="right")
                     / self.n_total)

    def evaluate_many(self, ts: Sequence[float]) -> np.ndarray:
        ts = np.asarray(ts, dtype=np.float64)
        if ts.size and float(ts.max()) > self.valid_upto:
            raise ValueError("query exceeds the decided region")
        return np.searchsorted(self.values, ts, side="right") / self.n_total


def from_batch(values: np.ndarray, censored: np.ndarray,
               budgets, transform: Optional[Callable] = None) -> Ecdf:
    """Ecdf from a simulation batch (values, censored mask, budget(s))."""
    values = np.asarray(values)
    censored = np.asarray(censored, dtype=bool)
    budgets = np.broadcast_to(np.asarray(budgets, dtype=np.float64),
                              values.shape)
    unc = values[~censored].astype(np.float64)
    cens = budgets[censored].astype(np.float64)
    if transform is not None:
        unc = transform(unc)
        cens = transform(cens)
    return Ecdf(unc, cens)


@dataclass(frozen=True)
class ReferenceCdf:
    """Closed-form limit laws the experiments are tested against."""

    tag: str
    params: dict

    @staticmethod
    def exponential1() -> "ReferenceCdf":
        return ReferenceCdf("exponential1", {})

    @staticmethod
    def recurrence_law(beta: float) -> "ReferenceCdf":
        if beta <= 0:
            raise ValueError("beta must be positive")
        return ReferenceCdf("recurrence_law", {"beta": beta})

    @staticmethod
    def toy_law() -> "ReferenceCdf":
        return ReferenceCdf("toy_law", {})

    @staticmethod
    def normal(variance: float, mean: float = 0.0) -> "ReferenceCdf":
        if variance <= 0:
            raise ValueError("variance must be positive")
        return ReferenceCdf("normal", {"mean": mean, "variance": variance})

    @staticmethod
    def mixture(weights: Sequence[float],
                rates: Sequence[float]) -> "ReferenceCdf":
        w = np.asarray(weights, dtype=np.float64)
        r = np.asarray(rates, dtype=np.float64)
        if w.shape != r.shape or abs(float(w.sum()) - 1.0) > 1e-9:
            raise ValueError("weights must match rates and sum to 1")
        return ReferenceCdf("mixture", {"weights": w, "rates": r})

    def cdf(self, t):
        t = np.asarray(t, dtype=np.float64)
        if self.tag == "exponential1":
            out = np.where(t > 0, -np.expm1(-np.maximum(t, 0.0)), 0.0)
        elif self.tag == "recurrence_law":
            b = self.params["beta"]
            x = b * np.maximum(t, 0.0)
            out = np.where(t > 0, x / (1.0 + x), 0.0)
        elif self.tag == "toy_law":
            x = np.maximum(t, 0.0)
            out = np.where(t > 0, x / (x + math.pi), 0.0)
        elif self.tag == "normal":
            mu = self.params["mean"]
            sd = math.sqrt(self.params["variance"])
            out = sps.norm.cdf(t, loc=mu, scale=sd)
        elif self.tag == "mixture":
            w = self.params["weights"]
            r = self.params["rates"]
            x = np.maximum(t, 0.0)[..., None] * r
            out = np.where(t > 0, (w * (x / (1.0 + x))).sum(axis=-1), 0.0)
        else:
            raise ValueError(f"unknown reference tag {self.tag!r}")
        return out if out.ndim else float(out)


def ks_distance(e: Ecdf, ref: ReferenceCdf) -> KsResult:
    """Sup distance |F_hat - F| over the censoring-decided region.

    Uncensored samples give the classical KS statistic (coverage 1); with
    censoring the sup runs over t <= valid_upto and coverage reports the
    reference mass of that region.
    """
    upto = e.valid_upto
    vals = e.values[e.values <= upto]
    if len(vals) == 0:
        raise EmptySample("no uncensored values inside the decided region")
    n = e.n_total
    ranks = np.searchsorted(e.values, vals, side="right") / n
    left = np.searchsorted(e.values, vals, side="left") / n
    ref_v = np.asarray(ref.cdf(vals))
    d = float(max(np.max(np.abs(ranks - ref_v)),
                  np.max(np.abs(left - ref_v))))
    if math.isfinite(upto):
        f_at = np.searchsorted(e.values, upto, side="right") / n
        d = max(d, abs(f_at - float(ref.cdf(upto))))
        coverage = float(ref.cdf(upto))
    else:
        coverage = 1.0
    return KsResult(statistic=d, coverage=coverage, valid_upto=upto)


def ks_two_sample(e1: Ecdf, e2: Ecdf) -> KsResult:
    """Sup distance between two ECDFs over their common decided region."""
    upto = min(e1.valid_upto, e2.valid_upto)
    pts = np.concatenate([e1.values[e1.values <= upto],
                          e2.values[e2.values <= upto]])
    if len(pts) == 0:
        raise EmptySample("no uncensored values inside the decided region")
    pts = np.unique(pts)
    f1 = np.searchsorted(e1.values, pts, side="right") / e1.n_total
    f2 = np.searchsorted(e2.values, pts, side="right") / e2.n_total
    d = float(np.max(np.abs(f1 - f2)))
    if math.isfinite(upto):
        coverage = float(min(
            np.searchsorted(e1.values, upto, side="right") / e1.n_total,
            np.searchsorted(e2.values, upto, side="right") / e2.n_total))
    else:
        coverage = 1.0
    return KsResult(statistic=d, coverage=coverage, valid_upto=upto)


class SlopeFit(NamedTuple):
    slope: float
    intercept: float
    stderr: float


def slope_regression(xs: Sequence[float], ys: Sequence[float]) -> SlopeFit:
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.size < 3:
        raise DegenerateDesign("need at least 3 (x, y) points")
    if float(np.ptp(xs)) == 0.0:
        raise DegenerateDesign("all x values equal")
    fit = sps.linregress(xs, ys)
    return SlopeFit(slope=float(fit.slope), intercept=float(fit.intercept),
                    stderr=float(fit.stderr))


def binomial_stderr(phat: float, n: int) -> float:
    return math.sqrt(max(phat * (1.0 - phat), 0.0) / n)
