"""Equilibrium measures of pair potentials, realized as explicit Markov chains.

For a potential depending on two coordinates, the equilibrium state of the
subshift is a stationary Markov measure whose transition matrix comes out of
the Perron eigendata of the weighted matrix L[a, b] = M[a, b] * exp(h(a, b)).
Potentials depending on r > 2 coordinates are block-recoded first
(:func:`potential_from_table`), so this one construction covers every locally
constant potential.

The measure object also carries the quantities the rest of the package keeps
asking for: entropy, dimension (= 2 * entropy), cylinder masses in log domain,
the time-reversed chain, and the summed autocovariance (Green-Kubo) form of
asymptotic variances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import (
    EigenSolverFailure,
    InadmissibleWindow,
    SingularFundamentalMatrix,
)
from .rng import numpy_generator
from .sft import SftSpec, Window, enumerate_windows


@dataclass(frozen=True)
class PairPotential:
    """Real table h(a, b) on the admissible symbol pairs of an SFT.

    Entries on forbidden pairs are ignored (stored as 0).
    """

    sft: SftSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        a = self.sft.n_symbols
        if v.shape != (a, a):
            raise ValueError(f"values shape {v.shape}, expected {(a, a)}")
        mask = self.sft.transition.astype(bool)
        if not np.isfinite(v[mask]).all():
            raise ValueError("potential must be finite on admissible pairs")
        v = np.where(mask, v, 0.0)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_pairs(cls, sft: SftSpec, table: Mapping[tuple[str, str], float]) -> "PairPotential":
        v = np.zeros((sft.n_symbols, sft.n_symbols))
        for (a, b), x in table.items():
            if not sft.admissible(a, b):
                raise InadmissibleWindow(f"potential keyed on forbidden pair ({a!r}, {b!r})")
            v[sft.index(a), sft.index(b)] = x
        return cls(sft, v)

    @classmethod
    def from_symbol_function(cls, sft: SftSpec, f: Mapping[str, float] | Sequence[float]) -> "PairPotential":
        """Potential depending on the first coordinate only: h(a, b) = f(a)."""
        if isinstance(f, Mapping):
            col = np.array([f[s] for s in sft.symbols], dtype=np.float64)
        else:
            col = np.asarray(f, dtype=np.float64)
        return cls(sft, np.repeat(col[:, None], sft.n_symbols, axis=1))

    def shifted(self, c: float) -> "PairPotential":
        return PairPotential(self.sft, self.values + c)


class CylinderMass(NamedTuple):
    prob: float
    log_prob: float


def _power_iteration(mat: np.ndarray, rel_tol: float, max_iter: int) -> tuple[float, np.ndarray]:
    """Perron eigenpair of a primitive nonnegative matrix by power iteration."""
    n = mat.shape[0]
    v = np.full(n, 1.0 / n)
    lam = 0.0
    for it in range(max_iter):
        w = mat @ v
        lam_new = w.sum() / v.sum()
        w = w / w.sum()
        delta = abs(lam_new - lam) / lam_new
        step = np.abs(w - v).max()
        v, lam = w, lam_new
        if delta < 1e-16 and step < 1e-16:
            return lam, v
    if delta > rel_tol:
        raise EigenSolverFailure(
            f"power iteration stalled at relative change {delta:.2e} "
            f"after {max_iter} iterations (tolerance {rel_tol:.0e})"
        )
    return lam, v


@dataclass(frozen=True)
class MarkovMeasure:
    """Stationary Markov measure: stochastic matrix, stationary vector, eigendata.

    Invariants (validated on construction within 1e-12): rows of `stochastic`
    sum to 1, `stationary` is an invariant probability vector, positivity of
    `stochastic` matches the transition matrix, and dimension = 2 * entropy.
    """

    sft: SftSpec
    stochastic: np.ndarray
    stationary: np.ndarray
    perron_value: float
    right_vec: np.ndarray
    left_vec: np.ndarray
    entropy: float = field(init=False)
    dimension: float = field(init=False)

    def __post_init__(self):
        pi = np.array(self.stochastic, dtype=np.float64, copy=True)
        p = np.array(self.stationary, dtype=np.float64, copy=True)
        mask = self.sft.transition.astype(bool)
        if np.abs(pi.sum(axis=1) - 1.0).max() > 1e-12:
            raise ValueError("rows of the stochastic matrix must sum to 1")
        if np.abs(p @ pi - p).max() > 1e-12 or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("stationary vector must be invariant and normalized")
        if ((pi > 0) != mask).any():
            raise ValueError("support of the stochastic matrix must equal the transition matrix")
        plogp = np.zeros_like(pi)
        plogp[mask] = pi[mask] * np.log(pi[mask])
        ent = float(-np.sum(p[:, None] * plogp))
        for name, val in (("stochastic", pi), ("stationary", p)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "entropy", ent)
        object.__setattr__(self, "dimension", 2.0 * ent)
        log_pi = np.where(mask, _safe_log(pi), -np.inf)
        log_pi.setflags(write=False)
        object.__setattr__(self, "_log_pi", log_pi)

    # -- derived matrices ------------------------------------------------

    @property
    def log_stochastic(self) -> np.ndarray:
        """log pi with -inf on forbidden pairs."""
        return self._log_pi

    @property
    def reversed_stochastic(self) -> np.ndarray:
        """Transition matrix of the time-reversed chain: pi*[b, a] = p_a pi[a, b] / p_b."""
        p = self.stationary
        return (self.stochastic * p[:, None]).T / p[:, None]

    def log_pi_potential(self) -> PairPotential:
        """log pi as a pair potential (defined on admissible pairs)."""
        mask = self.sft.transition.astype(bool)
        return PairPotential(self.sft, np.where(mask, self._log_pi, 0.0))

    def summary_dict(self) -> dict:
        """JSON-ready summary for auditing."""
        return {
            "symbols": list(self.sft.symbols),
            "stochastic": self.stochastic.tolist(),
            "stationary": self.stationary.tolist(),
            "perron_value": self.perron_value,
            "entropy": self.entropy,
            "dimension": self.dimension,
        }


def _safe_log(x: np.ndarray) -> np.ndarray:
    out = np.full_like(x, -np.inf, dtype=np.float64)
    pos = x > 0
    out[pos] = np.log(x[pos])
    return out


def gibbs_from_potential(
    sft: SftSpec,
    h: PairPotential,
    rel_tol: float = 1e-13,
    max_iter: int = 200_000,
) -> MarkovMeasure:
    """Equilibrium Markov measure of a pair potential.

    Builds L[a, b] = M[a, b] * exp(h(a, b)), extracts the Perron eigenvalue
    and its positive right/left eigenvectors by power iteration, and forms

        pi[a, b] = L[a, b] r_b / (lambda r_a),     p_a = l_a r_a / sum(l r).

    Adding a constant to the potential leaves the measure unchanged.
    """
    if h.sft != sft:
        raise ValueError("potential is keyed to a different subshift")
    mask = sft.transition.astype(bool)
    weights = np.where(mask, np.exp(h.values), 0.0)
    lam, r = _power_iteration(weights, rel_tol, max_iter)
    _, l = _power_iteration(weights.T, rel_tol, max_iter)
    if not (lam > 0 and (r > 0).all() and (l > 0).all()):
        raise EigenSolverFailure("Perron eigendata not strictly positive")
    pi = weights * r[None, :] / (lam * r[:, None])
    # kill last-bit drift so the invariants hold at validation tolerance
    pi /= pi.sum(axis=1, keepdims=True)
    p = l * r
    p /= p.sum()
    # one multiplication by pi projects p onto the invariant direction's
    # numerical fixed point
    for _ in range(4):
        p = p @ pi
        p /= p.sum()
    return MarkovMeasure(sft, pi, p, float(lam), r, l)


def max_entropy_measure(sft: SftSpec) -> MarkovMeasure:
    """Measure of maximal entropy (zero potential)."""
    return gibbs_from_potential(sft, PairPotential(sft, np.zeros((sft.n_symbols,) * 2)))


# ---------------------------------------------------------------------------
# cylinder masses
# ---------------------------------------------------------------------------

def cylinder_measure(m: MarkovMeasure, w: Window) -> CylinderMass:
    """Mass of the cylinder fixed by a window.

    Two-sided radius-k windows and one-sided length-q words use the same
    product formula: stationary mass of the first letter times the chain
    transitions along the word.  Returned both plainly and in log domain;
    the plain value underflows to 0 for deep windows, the log never does.
    """
    if w.sft != m.sft:
        raise InadmissibleWindow("window belongs to a different subshift")
    idx = w.indices
    log_pi = m.log_stochastic
    acc = math.log(m.stationary[idx[0]])
    for j in range(len(idx) - 1):
        acc += log_pi[idx[j], idx[j + 1]]
    return CylinderMass(math.exp(acc), acc)


def min_log_cylinder(m: MarkovMeasure, k: int) -> float:
    """Smallest log-mass over all admissible two-sided radius-k windows.

    Min-plus dynamic programming over paths of length 2k; cost O(k |A|^2).
    """
    # forbidden transitions carry -inf; bar them from the min
    log_pi = np.where(m.sft.transition.astype(bool), m.log_stochastic, np.inf)
    best = np.log(m.stationary)
    for _ in range(2 * k):
        best = (best[:, None] + log_pi).min(axis=0)
    return float(best.min())


# ---------------------------------------------------------------------------
# lazy points
# ---------------------------------------------------------------------------

class LazyPoint:
    """A point of the subshift materialized lazily as a growing window.

    The law is the stationary Markov measure: center symbol from the
    stationary vector, forward letters from the chain, backward letters from
    the time-reversed chain.  Forward and backward draws come from separate
    derived streams, so the window at radius k is the same whatever growth
    schedule produced it.  Single-owner mutable state: not safe for
    concurrent use.
    """

    def __init__(self, measure: MarkovMeasure, seed: int):
        self.measure = measure
        self.seed = seed
        gen = numpy_generator(seed, 0)
        self._fwd_gen = numpy_generator(seed, 1)
        self._bwd_gen = numpy_generator(seed, 2)
        p = measure.stationary
        self._center = int(gen.choice(len(p), p=p))
        self._fwd: list[int] = []
        self._bwd: list[int] = []
        self._pi_cdf = np.cumsum(measure.stochastic, axis=1)
        self._rev_cdf = np.cumsum(measure.reversed_stochastic, axis=1)

    def _draw(self, cdf_row: np.ndarray, gen: np.random.Generator) -> int:
        return int(np.searchsorted(cdf_row, gen.random(), side="right"))

    def grow_to(self, k: int) -> None:
        while len(self._fwd) < k:
            cur = self._fwd[-1] if self._fwd else self._center
            self._fwd.append(self._draw(self._pi_cdf[cur], self._fwd_gen))
        while len(self._bwd) < k:
            cur = self._bwd[-1] if self._bwd else self._center
            self._bwd.append(self._draw(self._rev_cdf[cur], self._bwd_gen))

    def window_at(self, k: int) -> Window:
        self.grow_to(k)
        symbols = self.measure.sft.symbols
        idx = list(reversed(self._bwd[:k])) + [self._center] + self._fwd[:k]
        return Window(self.measure.sft, tuple(symbols[i] for i in idx))


def sample_point(m: MarkovMeasure, seed: int) -> LazyPoint:
    """Draw a lazily grown point distributed as the measure."""
    return LazyPoint(m, seed)


def sample_windows_batch(
    m: MarkovMeasure, k: int, n: int, seed: int
) -> np.ndarray:
    """n independent two-sided radius-k windows as an (n, 2k+1) index array.

    Vectorized batch helper for frequency tests; the law matches
    :func:`sample_point` but the draw sequence does not.
    """
    gen = numpy_generator(seed, 3)
    pi_cdf = np.cumsum(m.stochastic, axis=1)
    rev_cdf = np.cumsum(m.reversed_stochastic, axis=1)
    out = np.empty((n, 2 * k + 1), dtype=np.int64)
    center = np.searchsorted(np.cumsum(m.stationary), gen.random(n), side="right")
    out[:, k] = center
    for j in range(1, k + 1):
        rows = pi_cdf[out[:, k + j - 1]]
        out[:, k + j] = (rows < gen.random(n)[:, None]).sum(axis=1)
        rows = rev_cdf[out[:, k - j + 1]]
        out[:, k - j] = (rows < gen.random(n)[:, None]).sum(axis=1)
    return out


# ---------------------------------------------------------------------------
# asymptotic variance (Green-Kubo)
# ---------------------------------------------------------------------------

def _pair_table(m: MarkovMeasure, f) -> np.ndarray:
    if isinstance(f, PairPotential):
        if f.sft != m.sft:
            raise ValueError("observable keyed to a different subshift")
        return f.values
    arr = np.asarray(f, dtype=np.float64)
    a = m.sft.n_symbols
    if arr.shape == (a,):
        return np.repeat(arr[:, None], a, axis=1)
    if arr.shape != (a, a):
        raise ValueError(f"observable shape {arr.shape}, expected {(a, a)} or {(a,)}")
    return arr


def fundamental_matrix(m: MarkovMeasure) -> np.ndarray:
    """Z = (I - pi + 1 p)^-1, the summed-geometric-series form of the chain."""
    n = m.sft.n_symbols
    a = np.eye(n) - m.stochastic + np.outer(np.ones(n), m.stationary)
    try:
        z = np.linalg.inv(a)
    except np.linalg.LinAlgError as e:
        raise SingularFundamentalMatrix(str(e)) from None
    if not np.isfinite(z).all():
        raise SingularFundamentalMatrix("fundamental matrix has non-finite entries")
    return z


def asymptotic_covariance_pair(m: MarkovMeasure, f, g) -> float:
    """Summed autocovariance of two pair observables along the stationary chain.

    With centered fbar, gbar:

        sigma_fg = E[fbar gbar] + sum_{n>=1} ( Cov(fbar_0, gbar_n) + Cov(gbar_0, fbar_n) )

    evaluated in closed form through the fundamental matrix.
    """
    ft = _pair_table(m, f)
    gt = _pair_table(m, g)
    mask = m.sft.transition.astype(bool)
    p, pi = m.stationary, m.stochastic
    edge = p[:, None] * pi  # stationary pair law
    fmean = float(np.sum(edge[mask] * ft[mask]))
    gmean = float(np.sum(edge[mask] * gt[mask]))
    fbar = np.where(mask, ft - fmean, 0.0)
    gbar = np.where(mask, gt - gmean, 0.0)
    d = float(np.sum(edge * fbar * gbar))
    alpha_f = (edge * fbar).sum(axis=0)  # over source symbol, indexed by target
    alpha_g = (edge * gbar).sum(axis=0)
    gamma_f = (pi * fbar).sum(axis=1)  # conditional mean at each source
    gamma_g = (pi * gbar).sum(axis=1)
    z = fundamental_matrix(m)
    return d + float(alpha_f @ z @ gamma_g) + float(alpha_g @ z @ gamma_f)


def asymptotic_variance_scalar(m: MarkovMeasure, f) -> float:
    """Asymptotic variance of a real pair observable; clamped to 0 near zero."""
    sigma2 = asymptotic_covariance_pair(m, f, f)
    if sigma2 < 0:
        if sigma2 < -1e-10:
            raise SingularFundamentalMatrix(
                f"variance series summed to {sigma2:.3e} < -1e-10; "
                "fundamental matrix is unreliable"
            )
        sigma2 = 0.0
    return sigma2


# ---------------------------------------------------------------------------
# fluctuations of cylinder masses
# ---------------------------------------------------------------------------

def clt_fluctuation_samples(
    m: MarkovMeasure,
    k: int,
    n_samples: int,
    seed: int,
    boundary_corrected: bool = False,
    workers: int = 1,
) -> np.ndarray:
    """Samples of (log nu(C_k(x)) + k * dimension) / sqrt(k) for x ~ nu.

    All arithmetic is in log domain.  The raw normalization keeps the O(1)
    boundary term log p at the left edge of the window (mean sum_a p_a log p_a,
    an O(1/sqrt(k)) bias at finite k); `boundary_corrected=True` subtracts
    that mean.  Both variants converge to a centered normal law with variance
    twice the asymptotic variance of the potential.
    """
    from ._kernels import clt_samples_kernel
    from .rng import chunk_ranges

    p = m.stationary
    pi_cdf = np.cumsum(m.stochastic, axis=1)
    rev_cdf = np.cumsum(m.reversed_stochastic, axis=1)
    log_pi = np.where(m.sft.transition.astype(bool), m.log_stochastic, 0.0)
    out = np.empty(n_samples, dtype=np.float64)
    for lo, hi in chunk_ranges(n_samples, workers):
        clt_samples_kernel(
            out[lo:hi],
            lo,
            np.uint64(seed),
            np.cumsum(p),
            pi_cdf,
            rev_cdf,
            log_pi,
            np.log(p),
            k,
            m.dimension,
        )
    if boundary_corrected:
        out -= float(np.sum(p * np.log(p))) / math.sqrt(k)
    return out


# ---------------------------------------------------------------------------
# block recoding
# ---------------------------------------------------------------------------

def block_sft(sft: SftSpec, width: int) -> tuple[SftSpec, list[tuple[str, ...]]]:
    """Recode to the alphabet of admissible width-letter words.

    Block u may be followed by block v when they overlap on width-1 letters.
    Returns the recoded subshift and the word list (index-aligned with its
    alphabet).
    """
    if width < 1:
        raise ValueError("width must be >= 1")
    if width == 1:
        return sft, [(s,) for s in sft.symbols]
    words = list(enumerate_windows(sft, width))
    joiner = "" if all(len(s) == 1 for s in sft.symbols) else "|"
    names = tuple(joiner.join(w) for w in words)
    n = len(words)
    t = np.zeros((n, n), dtype=np.uint8)
    for i, u in enumerate(words):
        for j, v in enumerate(words):
            if u[1:] == v[:-1]:
                t[i, j] = 1
    return SftSpec(names, t), words


def potential_from_table(
    sft: SftSpec, r: int, table: Mapping[tuple[str, ...], float]
) -> tuple[SftSpec, PairPotential]:
    """Locally constant potential on r coordinates as a pair potential.

    For r > 2 the subshift is block-recoded to width r-1 words; the value on
    the block pair (u, v) is the table entry of the r-word u + v[-1].
    Missing admissible words default to 0.
    """
    if r < 2:
        raise ValueError("use from_symbol_function for single-coordinate potentials")
    if r == 2:
        return sft, PairPotential.from_pairs(sft, dict(table))
    bsft, words = block_sft(sft, r - 1)
    v = np.zeros((len(words), len(words)))
    for i, u in enumerate(words):
        for j, w in enumerate(words):
            if u[1:] == w[:-1]:
                v[i, j] = table.get(u + (w[-1],), 0.0)
    return bsft, PairPotential(bsft, v)
