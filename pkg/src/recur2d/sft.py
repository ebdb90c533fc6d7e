"""Symbolic spaces: alphabets, transition matrices, windows, cylinders.

The space is the set of bi-infinite symbol sequences allowed by a 0-1
transition matrix, carrying the metric d(x, y) = exp(-m) where m is the first
coordinate (by absolute value) where the sequences disagree.  Points are never
materialized; everything downstream works on finite windows.

Conventions fixed here and relied on everywhere else:

* a two-sided window of radius k covers coordinates -k..k (2k+1 letters);
* the cylinder of radius k around x is the set of points agreeing with x on
  all |i| <= k, which is exactly the open metric ball of radius exp(-k).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import InadmissibleWindow, NotPrimitive, RadiusMismatch

# Wielandt: a primitive s x s matrix satisfies M^((s-1)^2 + 1) > 0, so the
# search below this bound is exhaustive.
def _wielandt_bound(size: int) -> int:
    return (size - 1) ** 2 + 1 if size > 1 else 1


def check_primitive(transition: np.ndarray) -> int:
    """Smallest n with `transition ** n` entrywise positive (boolean powers).

    Parameters
    ----------
    transition : ndarray
        Square matrix with entries in {0, 1}.

    Returns
    -------
    int
        The primitivity exponent n0.

    Raises
    ------
    NotPrimitive
        If no power up to the Wielandt bound is positive (matrix reducible
        or periodic).
    """
    m = np.asarray(transition)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"transition matrix must be square, got shape {m.shape}")
    if not np.isin(m, (0, 1)).all():
        raise ValueError("transition matrix entries must be 0 or 1")
    base = m.astype(bool)
    power = base.copy()
    for n in range(1, _wielandt_bound(m.shape[0]) + 1):
        if power.all():
            return n
        # int32 accumulator: uint8 matmul would wrap on wide alphabets
        power = (power.astype(np.int32) @ base.astype(np.int32)) > 0
    raise NotPrimitive(
        f"no positive power within the Wielandt bound "
        f"{_wielandt_bound(m.shape[0])}; matrix is reducible or periodic"
    )


@dataclass(frozen=True)
class SftSpec:
    """A subshift of finite type: ordered alphabet plus 0-1 transition matrix.

    Construction validates the matrix (square, 0-1, no empty row or column)
    and computes the primitivity exponent; a non-primitive matrix is rejected.
    Instances are immutable and safe to share.
    """

    symbols: tuple[str, ...]
    transition: np.ndarray
    primitivity_exponent: int = field(init=False)

    def __post_init__(self):
        symbols = tuple(str(s) for s in self.symbols)
        if len(set(symbols)) != len(symbols):
            raise ValueError("symbols must be unique")
        object.__setattr__(self, "symbols", symbols)
        m = np.array(self.transition, dtype=np.uint8, copy=True)
        if m.shape != (len(symbols), len(symbols)):
            raise ValueError(
                f"transition shape {m.shape} does not match {len(symbols)} symbols"
            )
        if (m.sum(axis=1) == 0).any() or (m.sum(axis=0) == 0).any():
            raise NotPrimitive("transition matrix has an empty row or column")
        n0 = check_primitive(m)
        m.setflags(write=False)
        object.__setattr__(self, "transition", m)
        object.__setattr__(self, "primitivity_exponent", n0)
        object.__setattr__(
            self, "_index", {s: i for i, s in enumerate(symbols)}
        )

    @property
    def n_symbols(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise InadmissibleWindow(f"unknown symbol {symbol!r}") from None

    def admissible(self, a: str, b: str) -> bool:
        return bool(self.transition[self.index(a), self.index(b)])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SftSpec)
            and self.symbols == other.symbols
            and np.array_equal(self.transition, other.transition)
        )

    def __hash__(self) -> int:
        return hash((self.symbols, self.transition.tobytes()))


@dataclass(frozen=True)
class Window:
    """A finite block of coordinates of a point.

    Two-sided windows cover -k..k and have odd length 2k+1; one-sided windows
    cover 0..q-1.  Adjacent letters must be admissible.
    """

    sft: SftSpec
    letters: tuple[str, ...]
    one_sided: bool = False

    def __post_init__(self):
        letters = tuple(str(s) for s in self.letters)
        object.__setattr__(self, "letters", letters)
        if len(letters) == 0:
            raise RadiusMismatch("window must contain at least one letter")
        if not self.one_sided and len(letters) % 2 == 0:
            raise RadiusMismatch(
                f"two-sided window needs odd length, got {len(letters)}"
            )
        idx = np.array([self.sft.index(s) for s in letters], dtype=np.int64)
        t = self.sft.transition
        for j in range(len(idx) - 1):
            if not t[idx[j], idx[j + 1]]:
                raise InadmissibleWindow(
                    f"forbidden transition {letters[j]!r} -> {letters[j + 1]!r} "
                    f"at offset {j}"
                )
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @property
    def radius(self) -> int:
        if self.one_sided:
            raise RadiusMismatch("one-sided window has a length, not a radius")
        return (len(self.letters) - 1) // 2

    def __len__(self) -> int:
        return len(self.letters)

    def letter(self, i: int) -> str:
        """Letter at coordinate i (two-sided: i in -k..k; one-sided: 0..q-1)."""
        if self.one_sided:
            if not 0 <= i < len(self.letters):
                raise RadiusMismatch(f"coordinate {i} outside 0..{len(self.letters) - 1}")
            return self.letters[i]
        k = self.radius
        if not -k <= i <= k:
            raise RadiusMismatch(f"coordinate {i} outside radius {k}")
        return self.letters[i + k]


class MetricResult(NamedTuple):
    """Distance value plus a flag marking comparisons that saturate the window."""

    value: float
    radius_limited: bool


def metric_distance(w1: Window, w2: Window) -> MetricResult:
    """Shift-metric distance exp(-m) between two windows of equal radius.

    m is the greatest integer such that the windows agree on all |i| < m.
    When the windows agree everywhere up to their shared radius the true
    distance is only known to be < exp(-k); the result is then 0 with
    ``radius_limited`` set.
    """
    if w1.one_sided or w2.one_sided:
        raise RadiusMismatch("metric distance is defined for two-sided windows")
    if w1.radius != w2.radius:
        raise RadiusMismatch(f"radius {w1.radius} vs {w2.radius}")
    k = w1.radius
    for m in range(k + 1):
        if w1.letter(m) != w2.letter(m) or w1.letter(-m) != w2.letter(-m):
            return MetricResult(float(np.exp(-m)), False)
    return MetricResult(0.0, True)


def cylinder_of(w: Window, k: int) -> Window:
    """Central sub-window of radius k (the radius-k cylinder containing w)."""
    if w.one_sided:
        raise RadiusMismatch("cylinder_of needs a two-sided window")
    if k < 0 or k > w.radius:
        raise RadiusMismatch(f"k={k} outside 0..{w.radius}")
    r = w.radius
    return Window(w.sft, w.letters[r - k : r + k + 1])


def enumerate_windows(sft: SftSpec, length: int) -> Iterator[tuple[str, ...]]:
    """All admissible letter sequences of the given length, lexicographic order."""
    t = sft.transition
    symbols = sft.symbols

    def extend(word: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
        if not word:
            for i in range(len(symbols)):
                yield (i,)
        else:
            for j in range(len(symbols)):
                if t[word[-1], j]:
                    yield word + (j,)

    words: list[tuple[int, ...]] = [()]
    for _ in range(length):
        words = [w2 for w in words for w2 in extend(w)]
    for w in words:
        yield tuple(symbols[i] for i in w)
