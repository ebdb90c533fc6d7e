"""Prebuilt example systems used in experiments, demos, and acceptance runs.

Walk symbols follow compass naming (E, W, N, S, plus H for a hold step);
the lattice observable reads the displacement off the source symbol.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigInvalid
from .gibbs import (MarkovMeasure, PairPotential, gibbs_from_potential,
                    max_entropy_measure)
from .sft import SftSpec
from .spectral import LatticeObservable

MOVES = {
    "E": (1, 0),
    "W": (-1, 0),
    "N": (0, 1),
    "S": (0, -1),
    "H": (0, 0),
}


@dataclass(frozen=True)
class SystemBundle:
    name: str
    measure: MarkovMeasure
    observable: Optional[LatticeObservable]
    description: str


def _full_shift_spec(symbols: tuple[str, ...]) -> SftSpec:
    n = len(symbols)
    return SftSpec(symbols, np.ones((n, n), dtype=np.uint8))


def build_lazy5() -> SystemBundle:
    """Uniform i.i.d. steps on E/W/N/S/H: the lazy simple walk on Z^2."""
    sft = _full_shift_spec(("E", "W", "N", "S", "H"))
    m = max_entropy_measure(sft)
    phi = LatticeObservable.from_symbol_function(
        sft, {s: MOVES[s] for s in sft.symbols})
    return SystemBundle("lazy5", m, phi, "lazy simple walk, uniform 5-shift")


def build_srw4() -> SystemBundle:
    """Uniform steps on E/W/N/S only: period-2, arithmetically obstructed."""
    sft = _full_shift_spec(("E", "W", "N", "S"))
    m = max_entropy_measure(sft)
    phi = LatticeObservable.from_symbol_function(
        sft, {s: MOVES[s] for s in sft.symbols})
    return SystemBundle("srw4", m, phi, "simple walk without hold steps")


# markov5 potential amplitudes; the potential is invariant under the
# direction involution E<->W, N<->S, which forces exactly zero drift
MARKOV5_SAME = 0.4
MARKOV5_HOLD = -0.3
MARKOV5_TURN = 0.2
MARKOV5_TURN_PAIRS = (("E", "N"), ("N", "W"), ("W", "S"), ("S", "E"))


def build_markov5() -> SystemBundle:
    """Genuinely markovian walk on the 5-shift (non-i.i.d. steps)."""
    sft = _full_shift_spec(("E", "W", "N", "S", "H"))
    vals = np.zeros((5, 5))
    for i in range(5):
        vals[i, i] += MARKOV5_SAME
    vals[:, sft.index("H")] += MARKOV5_HOLD
    for a, b in MARKOV5_TURN_PAIRS:
        vals[sft.index(a), sft.index(b)] += MARKOV5_TURN
    h = PairPotential(sft, vals)
    m = gibbs_from_potential(sft, h)
    phi = LatticeObservable.from_symbol_function(
        sft, {s: MOVES[s] for s in sft.symbols})
    return SystemBundle("markov5", m, phi,
                        "markovian lazy walk, correlated steps")


def build_golden_mean() -> SystemBundle:
    """Two symbols, '11' forbidden; maximal-entropy (Parry) measure."""
    sft = SftSpec(("0", "1"), np.array([[1, 1], [1, 0]], dtype=np.uint8))
    m = max_entropy_measure(sft)
    return SystemBundle("golden-mean", m, None,
                        "golden-mean shift, Parry measure")


def build_full_shift(n_symbols: int = 5) -> SystemBundle:
    """Full shift on digit symbols with the uniform measure."""
    if not 2 <= n_symbols <= 10:
        raise ValueError("n_symbols must lie in 2..10")
    sft = _full_shift_spec(tuple(str(i) for i in range(n_symbols)))
    m = max_entropy_measure(sft)
    return SystemBundle(f"full{n_symbols}", m, None,
                        f"full {n_symbols}-shift, uniform measure")


_BUILDERS = {
    "lazy5": build_lazy5,
    "srw4": build_srw4,
    "markov5": build_markov5,
    "golden-mean": build_golden_mean,
    "full5": build_full_shift,
}


def system_names() -> tuple[str, ...]:
    return tuple(sorted(_BUILDERS))


def get_system(name: str) -> SystemBundle:
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ConfigInvalid(
            f"unknown system {name!r}; known: {', '.join(system_names())}",
            path="system.name") from None
    return builder()
